//! Seeded random instances: Haar unitaries, Ginibre density matrices,
//! random POVMs and Kraus channels.
//!
//! Every generator takes an explicit RNG; [`rng_for`] derives independent
//! streams from a single 64-bit seed so parallel work stays reproducible.

use nalgebra::QR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{c, cr, hermitian_eigendecompose, identity, CMatrix, CVector};

pub type SimRng = ChaCha8Rng;

/// Generator for stream `stream` of `seed`.
pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Haar-random `d x d` unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    random_isometry(d, d, rng)
}

/// Haar-random isometry `C^cols -> C^rows` (`rows >= cols`).
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let qr = QR::new(ginibre(rows, cols, rng));
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { cr(1.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| c(gaussian(rng), gaussian(rng)));
    let n = v.norm();
    v.unscale(n)
}

/// Density matrix `G G^dagger / Tr` with `G` a `d x rank` Ginibre matrix.
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m.unscale(tr);
    (&m + m.adjoint()).scale(0.5)
}

/// Hermitian matrix with spectrum drawn uniformly from `[-bound, bound]`.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, bound: f64, rng: &mut R) -> CMatrix {
    let u = random_unitary(d, rng);
    let spectrum: Vec<f64> = (0..d).map(|_| rng.random_range(-bound..=bound)).collect();
    let diag = crate::numerics::diag_real(&spectrum);
    let m = &u * diag * u.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

/// Two-outcome POVM element: a Haar-rotated diagonal of random 0/1 entries,
/// each perturbed by up to `jitter` and clamped into `[0, 1]`.
pub fn random_povm_element<R: Rng + ?Sized>(d: usize, jitter: f64, rng: &mut R) -> CMatrix {
    let u = random_unitary(d, rng);
    let diag: Vec<f64> = (0..d)
        .map(|_| {
            let bit = if rng.random::<bool>() { 1.0 } else { 0.0 };
            (bit + rng.random_range(-jitter..=jitter)).clamp(0.0, 1.0)
        })
        .collect();
    let m = &u * crate::numerics::diag_real(&diag) * u.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

/// Kraus operators of a random channel on `C^d` with `rank` operators, cut
/// from a Haar isometry `C^d -> C^(rank d)`.
pub fn random_kraus<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Vec<CMatrix> {
    let v = random_isometry(rank * d, d, rng);
    (0..rank).map(|k| v.rows(k * d, d).into_owned()).collect()
}

/// Purification of `rho` on `rho.dim * rho.dim` amplitudes: `sum_i sqrt(l_i) |v_i>|i>`.
pub fn purify(rho: &CMatrix) -> crate::Result<CVector> {
    let d = rho.nrows();
    let eig = hermitian_eigendecompose(rho)?;
    let mut psi = CVector::zeros(d * d);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let w = lambda.max(0.0).sqrt();
        for a in 0..d {
            psi[a * d + i] = eig.eigenvectors[(a, i)] * w;
        }
    }
    Ok(psi)
}

/// `sum_k K_k^dagger K_k` for a Kraus set, for completeness checks.
pub fn kraus_completeness(kraus: &[CMatrix]) -> CMatrix {
    let d = kraus.first().map_or(0, |k| k.ncols());
    kraus
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
        - identity(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{check_density, is_unitary, max_abs_diff, partial_trace};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng_for(1, 0).random();
        let b: f64 = rng_for(1, 0).random();
        let other: f64 = rng_for(1, 1).random();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn generators_meet_their_invariants() {
        let mut rng = rng_for(2, 0);
        for d in [1, 2, 5] {
            assert!(is_unitary(&random_unitary(d, &mut rng), 1e-10));
            check_density(&random_density(d, 2, &mut rng)).unwrap();
            let kraus = random_kraus(d, 2, &mut rng);
            assert!(kraus_completeness(&kraus).norm() < 1e-10);
            let e = hermitian_eigendecompose(&random_povm_element(d, 0.1, &mut rng)).unwrap();
            assert!(e.min() >= -1e-12 && e.max() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn purification_reduces_to_input() {
        let mut rng = rng_for(3, 0);
        let rho = random_density(3, 2, &mut rng);
        let psi = purify(&rho).unwrap();
        let reduced = partial_trace(&(&psi * psi.adjoint()), &[3, 3], &[1]).unwrap();
        assert!(max_abs_diff(&reduced, &rho) < 1e-12);
    }
}
