//! Polynomial singular value transformation of block-encoded operators and
//! the Hadamard test.
//!
//! Two routes produce the transformed block: an SVD oracle that maps singular
//! values directly, and the Chebyshev recurrence in `T_2(A)`. The transformed
//! block is then re-dilated into a unitary with a single extra ancilla.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::blockenc::{block_of, BlockEncoding, Provenance};
use crate::circuits::{apply_matrix, Gate};
use crate::numerics::{
    cr, diag_real, hermitian_deviation, hermitian_eigendecompose, identity, operator_norm, svd,
    CMatrix, HERMITIAN_TOL,
};
use crate::random::purify;
use crate::signpoly::ChebyshevSeries;
use crate::{Error, Result};

/// Slack on `||A|| <= 1` for inputs to either transform.
pub const NORM_SLACK: f64 = 1e-10;

/// Recurrence steps between norm checks.
const MONITOR_EVERY: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SvtMode {
    Oracle,
    Chebyshev,
}

impl fmt::Display for SvtMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SvtMode::Oracle => "oracle",
            SvtMode::Chebyshev => "chebyshev",
        })
    }
}

impl FromStr for SvtMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(SvtMode::Oracle),
            "chebyshev" => Ok(SvtMode::Chebyshev),
            other => Err(Error::InvalidRequest(format!(
                "unknown mode `{other}` (expected oracle or chebyshev)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

fn check_norm(a: &CMatrix) -> Result<f64> {
    let norm = operator_norm(a)?;
    if norm > 1.0 + NORM_SLACK {
        return Err(Error::NormTooLarge { norm });
    }
    Ok(norm)
}

/// `f^(SV)(A)`: `sum_j f(s_j) |L_j><R_j|` for odd `f`, `sum_j f(s_j) |R_j><R_j|`
/// for even `f`, with singular values beyond `min(rows, cols)` taken as zero.
pub fn sv_transform_oracle(f: impl Fn(f64) -> f64, parity: Parity, a: &CMatrix) -> Result<CMatrix> {
    check_norm(a)?;
    let dec = svd(a)?;
    let (m, n) = a.shape();
    Ok(match parity {
        Parity::Odd => {
            let mut out = CMatrix::zeros(m, n);
            for (j, &s) in dec.singulars.iter().enumerate() {
                let l = dec.left.column(j);
                let r = dec.right.column(j);
                out += (l * r.adjoint()).scale(f(s));
            }
            out
        }
        Parity::Even => {
            let mut out = CMatrix::zeros(n, n);
            for j in 0..n {
                let s = dec.singulars.get(j).copied().unwrap_or(0.0);
                let r = dec.right.column(j);
                out += (r * r.adjoint()).scale(f(s));
            }
            out
        }
    })
}

/// `[[0, A], [A^dagger, 0]]`
pub fn hermitian_dilation(a: &CMatrix) -> CMatrix {
    let (m, n) = a.shape();
    let mut h = CMatrix::zeros(m + n, m + n);
    h.view_mut((0, m), (m, n)).copy_from(a);
    h.view_mut((m, 0), (n, m)).copy_from(&a.adjoint());
    h
}

/// Largest `||T_k(A)||` the recurrence may reach at step `k`: the exact growth
/// `T_k(||A||)` for `||A|| > 1`, widened by `k * 1e-13` of roundoff.
fn recurrence_ceiling(k: usize, norm: f64) -> f64 {
    let growth = if norm > 1.0 {
        (k as f64 * norm.acosh()).cosh()
    } else {
        1.0
    };
    growth * (1.0 + k as f64 * 1e-13) + 1e-12
}

fn hermitian_norm(a: &CMatrix) -> Result<f64> {
    let eig = hermitian_eigendecompose(&crate::numerics::hermitian_part(a))?;
    Ok(eig.max().abs().max(eig.min().abs()))
}

/// `S(A)` for Hermitian `A` by the recurrence `T_{2j+3} = 2 T_2(A) T_{2j+1} - T_{2j-1}`
/// over the odd Chebyshev polynomials.
fn odd_series_hermitian(s: &ChebyshevSeries, a: &CMatrix, norm: f64) -> Result<CMatrix> {
    let d = a.nrows();
    let coeffs = s.coeffs();
    let id = identity(d);
    let b = (a * a).scale(2.0) - &id;
    let mut out = a.scale(coeffs[1]);
    // T_{-1} = T_1 starts the odd recurrence
    let mut prev = a.clone();
    let mut cur = a.clone();
    let mut k = 1usize;
    while k + 2 < coeffs.len() {
        prev.gemm(cr(2.0), &b, &cur, cr(-1.0));
        std::mem::swap(&mut prev, &mut cur);
        k += 2;
        let ck = coeffs[k];
        if ck != 0.0 {
            out.zip_apply(&cur, |o, t| *o += t * ck);
        }
        if (k / 2).is_multiple_of(MONITOR_EVERY) || k + 2 >= coeffs.len() {
            let tk = hermitian_norm(&cur)?;
            if tk > recurrence_ceiling(k, norm) {
                return Err(Error::RecurrenceUnstable { k, norm: tk });
            }
        }
    }
    Ok(out)
}

/// `c_0/2 I + sum_k c_k T_k(A)`; non-Hermitian `A` goes through
/// [`hermitian_dilation`] and the off-diagonal block is returned.
pub fn chebyshev_apply(s: &ChebyshevSeries, a: &CMatrix) -> Result<CMatrix> {
    let norm = check_norm(a)?;
    if a.is_square() && hermitian_deviation(a) <= HERMITIAN_TOL {
        return odd_series_hermitian(s, &crate::numerics::hermitian_part(a), norm);
    }
    let (m, n) = a.shape();
    let full = odd_series_hermitian(s, &hermitian_dilation(a), norm)?;
    Ok(full.view((0, m), (m, n)).into_owned())
}

/// `[[P, sqrt(I - P P^dagger)], [sqrt(I - P^dagger P), -P^dagger]]`
pub fn unitary_dilation(p: &CMatrix) -> Result<CMatrix> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "dilation needs a square block, got {}x{}",
            p.nrows(),
            p.ncols()
        )));
    }
    check_norm(p)?;
    let d = p.nrows();
    let p_dag = p.adjoint();
    // both square roots from one SVD P = L S R^dagger, so the off-diagonal
    // identities hold to rounding even when some singular values equal 1
    let dec = svd(p)?;
    let comp: Vec<f64> = dec
        .singulars
        .iter()
        .map(|&s| {
            let s = s.min(1.0);
            ((1.0 - s) * (1.0 + s)).sqrt()
        })
        .collect();
    let c = diag_real(&comp);
    let top = &dec.left * &c * dec.left.adjoint();
    let bottom = &dec.right * &c * dec.right.adjoint();
    let mut u = CMatrix::zeros(2 * d, 2 * d);
    u.view_mut((0, 0), (d, d)).copy_from(p);
    u.view_mut((0, d), (d, d)).copy_from(&top);
    u.view_mut((d, 0), (d, d)).copy_from(&bottom);
    u.view_mut((d, d), (d, d)).copy_from(&(-p_dag));
    Ok(u)
}

#[derive(Debug, Clone)]
pub struct TransformedEncoding {
    /// Exact one-ancilla encoding of `realized_block`.
    pub base: BlockEncoding,
    pub realized_block: CMatrix,
    /// `(36 C + 37) eps_2` with `C = max(1, coeff_l1)` and `eps_2` the series tolerance.
    pub declared_error_budget: f64,
    /// `d^2` with `d = (degree + 1) / 2`.
    pub query_estimate: u64,
    pub degree: usize,
    pub mode: SvtMode,
}

/// Applies the odd series `s` to the block of an exact encoding.
pub fn transform_encoding(
    s: &ChebyshevSeries,
    be: &BlockEncoding,
    mode: SvtMode,
) -> Result<TransformedEncoding> {
    if !be.is_exact() {
        return Err(Error::InexactInput {
            alpha: be.alpha,
            eps: be.eps,
        });
    }
    let block = block_of(be);
    let realized_block = match mode {
        SvtMode::Chebyshev => chebyshev_apply(s, &block)?,
        SvtMode::Oracle => {
            sv_transform_oracle(|x| s.eval_unchecked(x.min(1.0)), Parity::Odd, &block)?
        }
    };
    let unitary = unitary_dilation(&realized_block)?;
    let mut provenance = Provenance::new(format!(
        "sign-svt[{mode}, degree {}] of {}",
        s.degree(),
        be.provenance.construction
    ));
    provenance.queries = be.provenance.queries.clone();
    let base = BlockEncoding::new(unitary, be.system_qubits, 1, 1.0, 0.0, provenance)?;
    let c_hat = s.coeff_l1().max(1.0);
    let d = s.half_degree() as u64;
    Ok(TransformedEncoding {
        base,
        realized_block,
        declared_error_budget: (36.0 * c_hat + 37.0) * s.eps(),
        query_estimate: d * d,
        degree: s.degree(),
        mode,
    })
}

/// Probability of outcome 0 on the control qubit of the Hadamard test.
///
/// Registers `[F, ancillas, system, reference]`, where `reference` holds a
/// purification of `rho`; the circuit is `H_F`, `U` controlled on `F`, `H_F`.
pub fn hadamard_test_prob(be: &BlockEncoding, rho: &CMatrix) -> Result<f64> {
    let d = be.system_dim();
    if rho.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, system register has dimension {d}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if be.alpha != 1.0 {
        return Err(Error::InvalidOperator(format!(
            "Hadamard test needs alpha = 1, got {}",
            be.alpha
        )));
    }
    crate::numerics::check_density(rho)?;
    let (a, s) = (be.ancilla_qubits, be.system_qubits);
    let total = 1 + a + 2 * s;
    let half = 1usize << (a + 2 * s);
    let psi = purify(rho)?;

    let mut state = vec![Complex64::new(0.0, 0.0); 2 * half];
    // ancillas in |0>, so the (ancilla, system, reference) amplitudes are psi itself
    state[..psi.len()].copy_from_slice(psi.as_slice());
    let h = Gate::h(0).matrix();
    apply_matrix(&mut state, total, &[0], &h);

    // controlled-U on the F = 1 half: (U (x) I_ref) acting on a (2^(a+s) x 2^s) reshape
    let rows = 1usize << (a + s);
    let cols = 1usize << s;
    let branch = CMatrix::from_row_slice(rows, cols, &state[half..]);
    let moved = &be.unitary * branch;
    for i in 0..rows {
        for j in 0..cols {
            state[half + i * cols + j] = moved[(i, j)];
        }
    }

    apply_matrix(&mut state, total, &[0], &h);
    let p0: f64 = state[..half].iter().map(|z| z.norm_sqr()).sum();
    Ok(p0.clamp(0.0, 1.0))
}
