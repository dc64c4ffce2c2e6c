//! Dense complex linear algebra and the closeness oracles (trace distance,
//! fidelity, Schatten norms) that every other module is checked against.
//!
//! The Hermitian eigensolver is nalgebra's; the SVD is a one-sided Jacobi
//! iteration. This module fixes the ordering and tolerance conventions on top
//! of both (descending spectra, full unitary SVD factors, explicit rank cutoffs).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance on `max |A - A^dagger|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on `||A^dagger A - I||` accepted as unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// Allowed deviation of a density matrix trace from 1.
pub const TRACE_TOL: f64 = 1e-10;
/// Singular values at or below this are treated as exact zeros.
pub const RANK_CUTOFF: f64 = 1e-12;

const MAX_SWEEPS: usize = 10_000;
const JACOBI_SWEEPS: usize = 80;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Builds a matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| cr(x)))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&x| cr(x)),
    ))
}

/// `|u><v|`
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.trace()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(a, &a.adjoint())
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    hermitian_deviation(a) <= tol
}

/// Frobenius norm of `A^dagger A - I`, an upper bound on the operator-norm deviation.
pub fn unitarity_deviation(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    (a.adjoint() * a - identity(a.nrows())).norm()
}

pub fn is_unitary(a: &CMatrix, tol: f64) -> bool {
    unitarity_deviation(a) <= tol
}

/// Spectral norm (largest singular value).
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    Ok(svd(a)?.singulars.first().copied().unwrap_or(0.0))
}

/// Half-sum `(A + A^dagger)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Column `j` belongs to `eigenvalues[j]`.
    pub eigenvectors: CMatrix,
}

impl HermitianEigen {
    /// Applies a real function to the spectrum: `V f(Lambda) V^dagger`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let fj = f(lambda);
            scaled.column_mut(j).scale_mut(fj);
        }
        scaled * v.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

pub fn hermitian_eigendecompose(a: &CMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let deviation = hermitian_deviation(a);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let d = a.nrows();
    if d == 0 {
        return Ok(HermitianEigen {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(hermitian_part(a), f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::NoConvergence("Hermitian eigensolver"))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(d, d, |row, col| eig.eigenvectors[(row, order[col])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Full `rows x rows` unitary.
    pub left: CMatrix,
    /// `min(rows, cols)` values, sorted descending.
    pub singulars: Vec<f64>,
    /// Full `cols x cols` unitary.
    pub right: CMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> CMatrix {
        let (m, n) = (self.left.nrows(), self.right.nrows());
        let mut sigma = CMatrix::zeros(m, n);
        for (j, &s) in self.singulars.iter().enumerate() {
            sigma[(j, j)] = cr(s);
        }
        &self.left * sigma * self.right.adjoint()
    }

    /// Number of singular values above [`RANK_CUTOFF`].
    pub fn rank(&self) -> usize {
        self.singulars.iter().filter(|&&s| s > RANK_CUTOFF).count()
    }
}

/// Full SVD by one-sided (Hestenes) Jacobi rotations on the columns of `A`.
///
/// nalgebra's bidiagonal complex SVD occasionally returns factors that do not
/// reconstruct the input, so the decomposition is done here directly; the
/// result is still checked against `A` before it is returned.
pub fn svd(a: &CMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Ok(SvdResult {
            left: identity(m),
            singulars: Vec::new(),
            right: identity(n),
        });
    }
    let mut w = a.clone();
    let mut v = identity(n);
    let tol = (m.max(n) as f64) * f64::EPSILON;
    // columns below this norm are rounding noise and count as orthogonal to everything
    let negligible = f64::EPSILON * a.norm();
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g == 0.0
                    || g <= tol * (alpha * beta).sqrt()
                    || alpha.sqrt() <= negligible
                    || beta.sqrt() <= negligible
                {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for row in 0..mat.nrows() {
                        let xp = mat[(row, p)];
                        // the phase makes column p and the rotated q real-overlapping
                        let xq = mat[(row, q)] * phase.conj();
                        mat[(row, p)] = xp * cs - xq * sn;
                        mat[(row, q)] = xp * sn + xq * cs;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("Jacobi SVD"));
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let singulars: Vec<f64> = order[..k].iter().map(|&j| norms[j]).collect();
    let top = singulars[0];
    let mut left_cols = Vec::new();
    for (&j, &s) in order[..k].iter().zip(&singulars) {
        if s <= 1e-13 * top || s == 0.0 {
            break;
        }
        left_cols.push(w.column(j).unscale(s));
    }
    let left_thin = if left_cols.is_empty() {
        CMatrix::zeros(m, 0)
    } else {
        CMatrix::from_columns(&left_cols)
    };
    let right = CMatrix::from_fn(n, n, |row, col| v[(row, order[col])]);
    let out = SvdResult {
        left: complete_to_unitary(&left_thin),
        singulars,
        right,
    };
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if max_abs_diff(&out.reconstruct(), a) > 1e-10 * scale {
        return Err(Error::NoConvergence("SVD failed its reconstruction check"));
    }
    Ok(out)
}

/// Orthonormal basis of the complement of the column span of `basis`
/// (columns assumed orthonormal), found by Gram-Schmidt over the standard
/// basis vectors in ascending index order.
pub fn orthonormal_complement(basis: &CMatrix) -> CMatrix {
    let d = basis.nrows();
    let have = basis.ncols();
    let want = d.saturating_sub(have);
    let mut found: Vec<CVector> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut out = Vec::with_capacity(want);
    for i in 0..d {
        if out.len() == want {
            break;
        }
        let mut v = CVector::zeros(d);
        v[i] = cr(1.0);
        // two passes keep the result orthogonal to working precision
        for _ in 0..2 {
            for q in &found {
                let proj = q.dotc(&v);
                v.axpy(-proj, q, cr(1.0));
            }
        }
        let norm = v.norm();
        if norm > 1e-7 {
            v.unscale_mut(norm);
            found.push(v.clone());
            out.push(v);
        }
    }
    if out.is_empty() {
        return CMatrix::zeros(d, 0);
    }
    CMatrix::from_columns(&out)
}

/// Extends a matrix with orthonormal columns to a square unitary by appending
/// [`orthonormal_complement`] columns.
pub fn complete_to_unitary(isometry: &CMatrix) -> CMatrix {
    let d = isometry.nrows();
    if isometry.ncols() == d {
        return isometry.clone();
    }
    let comp = orthonormal_complement(isometry);
    let mut cols: Vec<CVector> = isometry.column_iter().map(|c| c.into_owned()).collect();
    cols.extend(comp.column_iter().map(|c| c.into_owned()));
    CMatrix::from_columns(&cols)
}

/// Partial trace over the subsystems listed in `traced`. Subsystem 0 is the
/// most significant digit of the basis index.
pub fn partial_trace(m: &CMatrix, dims: &[usize], traced: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but subsystem dims {:?} multiply to {}",
            m.nrows(),
            m.ncols(),
            dims,
            total
        )));
    }
    let mut is_traced = vec![false; dims.len()];
    for &t in traced {
        if t >= dims.len() || is_traced[t] {
            return Err(Error::DimensionMismatch(format!(
                "invalid traced subsystem index {t} for {} subsystems",
                dims.len()
            )));
        }
        is_traced[t] = true;
    }
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let offsets = |select: bool| -> Vec<usize> {
        let parts: Vec<(usize, usize)> = (0..dims.len())
            .filter(|&i| is_traced[i] == select)
            .map(|i| (dims[i], strides[i]))
            .collect();
        let count: usize = parts.iter().map(|p| p.0).product();
        (0..count)
            .map(|mut idx| {
                let mut off = 0;
                for &(d, s) in parts.iter().rev() {
                    off += (idx % d) * s;
                    idx /= d;
                }
                off
            })
            .collect()
    };
    let kept = offsets(false);
    let summed = offsets(true);
    Ok(CMatrix::from_fn(kept.len(), kept.len(), |i, j| {
        summed
            .iter()
            .map(|&t| m[(kept[i] + t, kept[j] + t)])
            .sum()
    }))
}

/// Schatten p-norm; pass `f64::INFINITY` for the operator norm.
pub fn schatten_norm(a: &CMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidP(p));
    }
    let s = svd(a)?.singulars;
    Ok(if p.is_infinite() {
        s.first().copied().unwrap_or(0.0)
    } else if p == 1.0 {
        s.iter().sum()
    } else {
        s.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
    })
}

/// Checks the density-matrix invariants (Hermitian, unit trace, PSD).
pub fn check_density(rho: &CMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::NotDensity {
            reason: format!("not square ({}x{})", rho.nrows(), rho.ncols()),
        });
    }
    let deviation = hermitian_deviation(rho);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotDensity {
            reason: format!("not Hermitian (deviation {deviation:.3e})"),
        });
    }
    let tr = rho.trace();
    if (tr - cr(1.0)).norm() > TRACE_TOL {
        return Err(Error::NotDensity {
            reason: format!("trace {tr} differs from 1"),
        });
    }
    let min = hermitian_eigendecompose(rho)?.min();
    if min < -PSD_TOL {
        return Err(Error::NotDensity {
            reason: format!("negative eigenvalue {min:.3e}"),
        });
    }
    Ok(())
}

fn check_pair(rho0: &CMatrix, rho1: &CMatrix) -> Result<()> {
    if rho0.shape() != rho1.shape() {
        return Err(Error::DimensionMismatch(format!(
            "states have shapes {:?} and {:?}",
            rho0.shape(),
            rho1.shape()
        )));
    }
    check_density(rho0)?;
    check_density(rho1)
}

/// `T(rho0, rho1) = 1/2 Tr|rho0 - rho1|`, evaluated from the spectrum of the difference.
pub fn trace_distance(rho0: &CMatrix, rho1: &CMatrix) -> Result<f64> {
    check_pair(rho0, rho1)?;
    let eig = hermitian_eigendecompose(&hermitian_part(&(rho0 - rho1)))?;
    let t = 0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>();
    Ok(t.clamp(0.0, 1.0))
}

/// Square root of a PSD matrix; eigenvalues below zero are clamped first.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix> {
    Ok(hermitian_eigendecompose(a)?.map(|x| x.max(0.0).sqrt()))
}

/// `A` with `rho = A A^dagger`, one column per eigenvalue above [`RANK_CUTOFF`].
fn psd_factor(rho: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eigendecompose(rho)?;
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > RANK_CUTOFF)
        .collect();
    let mut a = CMatrix::zeros(rho.nrows(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let w = eig.eigenvalues[i].sqrt();
        a.set_column(col, &eig.eigenvectors.column(i).scale(w));
    }
    Ok(a)
}

/// Squared Uhlmann fidelity `||sqrt(rho0) sqrt(rho1)||_1^2`.
///
/// Computed as `||A0^dagger A1||_1^2` for factors `rho_b = A_b A_b^dagger`,
/// which drops rounding-level eigenvalues instead of taking their square roots.
pub fn fidelity_sq(rho0: &CMatrix, rho1: &CMatrix) -> Result<f64> {
    check_pair(rho0, rho1)?;
    let a0 = psd_factor(rho0)?;
    let a1 = psd_factor(rho1)?;
    if a0.ncols() == 0 || a1.ncols() == 0 {
        return Ok(0.0);
    }
    let f = schatten_norm(&(a0.adjoint() * a1), 1.0)?;
    Ok((f * f).clamp(0.0, 1.0))
}

/// `sgn^(SV)(A)` completed to a unitary.
///
/// On the row space of `A` this is `sum_{s_j > 0} |L_j><R_j|`; the right
/// kernel is mapped onto the left kernel, both taken as Gram-Schmidt
/// completions over the standard basis in ascending index order, paired in
/// that order. The zero matrix therefore maps to the identity.
pub fn sign_sv_completed(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "sign completion needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let dec = svd(a)?;
    let rank = dec.rank();
    let l_range = dec.left.columns(0, rank).into_owned();
    let r_range = dec.right.columns(0, rank).into_owned();
    let l_kernel = orthonormal_complement(&l_range);
    let r_kernel = orthonormal_complement(&r_range);
    Ok(&l_range * r_range.adjoint() + &l_kernel * r_kernel.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_pure_state, random_unitary, rng_for};
    use approx::assert_abs_diff_eq;

    fn ket(d: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(d);
        v[i] = cr(1.0);
        v
    }

    fn plus() -> CVector {
        CVector::from_vec(vec![cr(0.5f64.sqrt()), cr(0.5f64.sqrt())])
    }

    fn pauli_x() -> CMatrix {
        real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn eigen_of_identity_and_z() {
        let e = hermitian_eigendecompose(&identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
        let z = diag_real(&[1.0, -1.0]);
        let e = hermitian_eigendecompose(&z).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvectors[(0, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvectors[(1, 1)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let a = real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            hermitian_eigendecompose(&a),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn eigen_of_halved_difference_matches_trace_distance() {
        let mut rng = rng_for(11, 0);
        let r0 = random_density(4, 4, &mut rng);
        let r1 = random_density(4, 2, &mut rng);
        let e = hermitian_eigendecompose(&(&r0 - &r1).scale(0.5)).unwrap();
        assert_abs_diff_eq!(e.eigenvalues.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        let abs_sum: f64 = e.eigenvalues.iter().map(|x| x.abs()).sum();
        assert_abs_diff_eq!(abs_sum, trace_distance(&r0, &r1).unwrap(), epsilon = 1e-12);
        assert!(max_abs_diff(&e.reconstruct(), &(&r0 - &r1).scale(0.5)) < 1e-12);
    }

    #[test]
    fn svd_examples() {
        let z = CMatrix::zeros(3, 3);
        assert!(svd(&z).unwrap().singulars.iter().all(|&s| s == 0.0));
        let mut rng = rng_for(3, 0);
        let u = random_unitary(4, &mut rng);
        let s = svd(&u).unwrap();
        for x in &s.singulars {
            assert_abs_diff_eq!(*x, 1.0, epsilon = 1e-12);
        }
        let flip = outer(&ket(2, 0), &ket(2, 1));
        let s = svd(&flip).unwrap();
        assert_abs_diff_eq!(s.singulars[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.singulars[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_rectangular_is_full() {
        let mut rng = rng_for(5, 1);
        let a = random_unitary(4, &mut rng).columns(0, 2).into_owned().scale(0.7);
        let s = svd(&a).unwrap();
        assert_eq!(s.left.shape(), (4, 4));
        assert_eq!(s.right.shape(), (2, 2));
        assert!(is_unitary(&s.left, 1e-10));
        assert!(max_abs_diff(&s.reconstruct(), &a) < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = rng_for(7, 0);
        let rho = random_density(2, 2, &mut rng);
        let sigma = random_density(3, 3, &mut rng).scale(2.0);
        let out = partial_trace(&kron(&rho, &sigma), &[2, 3], &[1]).unwrap();
        assert!(max_abs_diff(&out, &rho.scale(2.0)) < 1e-12);

        let bell = CVector::from_vec(vec![
            cr(0.5f64.sqrt()),
            cr(0.0),
            cr(0.0),
            cr(0.5f64.sqrt()),
        ]);
        let out = partial_trace(&outer(&bell, &bell), &[2, 2], &[0]).unwrap();
        assert!(max_abs_diff(&out, &identity(2).scale(0.5)) < 1e-15);

        let m = random_density(6, 6, &mut rng);
        assert_eq!(partial_trace(&m, &[2, 3], &[]).unwrap(), m);
        assert!(partial_trace(&m, &[2, 2], &[0]).is_err());
        assert!(partial_trace(&m, &[2, 3], &[2]).is_err());
    }

    #[test]
    fn partial_trace_preserves_trace_and_middle_subsystem() {
        let mut rng = rng_for(8, 0);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(3, 3, &mut rng);
        let cc = random_density(2, 1, &mut rng);
        let full = kron(&kron(&a, &b), &cc);
        let mid = partial_trace(&full, &[2, 3, 2], &[0, 2]).unwrap();
        assert!(max_abs_diff(&mid, &b) < 1e-12);
        let outer_pair = partial_trace(&full, &[2, 3, 2], &[1]).unwrap();
        assert!(max_abs_diff(&outer_pair, &kron(&a, &cc)) < 1e-12);
    }

    #[test]
    fn schatten_examples() {
        assert_abs_diff_eq!(schatten_norm(&identity(5), 1.0).unwrap(), 5.0, epsilon = 1e-12);
        let mut rng = rng_for(9, 0);
        let u = random_unitary(3, &mut rng);
        assert_abs_diff_eq!(schatten_norm(&u, f64::INFINITY).unwrap(), 1.0, epsilon = 1e-12);
        let diff = outer(&ket(2, 0), &ket(2, 0)) - outer(&plus(), &plus());
        assert_abs_diff_eq!(
            schatten_norm(&diff, 1.0).unwrap(),
            2.0 * 0.5f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(schatten_norm(&identity(4), 2.0).unwrap(), 2.0, epsilon = 1e-12);
        assert!(matches!(schatten_norm(&u, 0.5), Err(Error::InvalidP(_))));
        assert!(matches!(schatten_norm(&u, f64::NAN), Err(Error::InvalidP(_))));
    }

    #[test]
    fn trace_distance_examples() {
        let p0 = outer(&ket(2, 0), &ket(2, 0));
        let p1 = outer(&ket(2, 1), &ket(2, 1));
        let pp = outer(&plus(), &plus());
        assert_abs_diff_eq!(trace_distance(&p0, &p0).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace_distance(&p0, &p1).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            trace_distance(&p0, &pp).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(matches!(
            trace_distance(&p0, &identity(2)),
            Err(Error::NotDensity { .. })
        ));
        assert!(matches!(
            trace_distance(&p0, &identity(3).scale(1.0 / 3.0)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let p0 = outer(&ket(2, 0), &ket(2, 0));
        let p1 = outer(&ket(2, 1), &ket(2, 1));
        let mixed = identity(2).scale(0.5);
        assert_abs_diff_eq!(fidelity_sq(&p0, &p0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_sq(&p0, &p1).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_sq(&p0, &mixed).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_pure_vs_mixed_and_symmetry() {
        let mut rng = rng_for(12, 0);
        for d in [2usize, 3, 5] {
            let phi = random_pure_state(d, &mut rng);
            let sigma = random_density(d, d, &mut rng);
            let expect = phi.dotc(&(&sigma * &phi)).re;
            let f = fidelity_sq(&outer(&phi, &phi), &sigma).unwrap();
            assert_abs_diff_eq!(f, expect, epsilon = 1e-10);
            let rho = random_density(d, 2, &mut rng);
            assert_abs_diff_eq!(
                fidelity_sq(&rho, &sigma).unwrap(),
                fidelity_sq(&sigma, &rho).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn sign_completion_examples() {
        let mut rng = rng_for(13, 0);
        let u = random_unitary(4, &mut rng);
        assert!(max_abs_diff(&sign_sv_completed(&u).unwrap(), &u) < 1e-10);
        let flip = outer(&ket(2, 0), &ket(2, 1));
        assert!(max_abs_diff(&sign_sv_completed(&flip).unwrap(), &pauli_x()) < 1e-12);
        let zero = CMatrix::zeros(3, 3);
        assert_eq!(sign_sv_completed(&zero).unwrap(), identity(3));
    }

    #[test]
    fn sign_completion_is_unitary_and_aligned() {
        let mut rng = rng_for(14, 0);
        for rank in 1..=4 {
            let g = random_unitary(4, &mut rng).columns(0, rank).into_owned();
            let h = random_unitary(4, &mut rng).columns(0, rank).into_owned();
            let a = &g * diag_real(&vec![0.3; rank]) * h.adjoint();
            let w = sign_sv_completed(&a).unwrap();
            assert!(is_unitary(&w, 1e-10));
            let dec = svd(&a).unwrap();
            for j in 0..dec.rank() {
                let l = dec.left.column(j);
                let r = dec.right.column(j);
                let val = l.dotc(&(&w * r));
                assert_abs_diff_eq!(val.re, 1.0, epsilon = 1e-9);
                assert_abs_diff_eq!(val.im, 0.0, epsilon = 1e-9);
            }
        }
    }
}
