//! Block-encodings built from state-preparation circuits.
//!
//! A block-encoding here is a dense unitary whose leading qubits are ancillas
//! and whose trailing qubits are the system, so that the encoded operator is
//! `alpha` times the top-left `2^s x 2^s` corner.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::circuits::{apply_matrix, matrix_of_action, Circuit, GateKind, Gate, StatePrepPair};
use crate::numerics::{complete_to_unitary, cr, identity, max_abs_diff, operator_norm, CMatrix, CVector};
use crate::{Error, Result};

/// Largest dense encoding unitary, in qubits (a `2^12 x 2^12` complex matrix is 256 MiB).
pub const MAX_ENCODING_QUBITS: usize = 12;

/// Construction tag plus the number of uses of each state-preparation unitary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub construction: String,
    /// Keyed by oracle name, e.g. `"Q0"`, `"Q1^dagger"`.
    pub queries: BTreeMap<String, usize>,
}

impl Provenance {
    pub fn new(construction: impl Into<String>) -> Self {
        Provenance {
            construction: construction.into(),
            queries: BTreeMap::new(),
        }
    }

    pub fn with_query(mut self, oracle: &str, count: usize) -> Self {
        *self.queries.entry(oracle.to_string()).or_insert(0) += count;
        self
    }

    pub fn total_queries(&self) -> usize {
        self.queries.values().sum()
    }

    fn absorb(&mut self, other: &Provenance) {
        for (k, v) in &other.queries {
            *self.queries.entry(k.clone()).or_insert(0) += v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockEncoding {
    pub unitary: CMatrix,
    pub system_qubits: usize,
    pub ancilla_qubits: usize,
    pub alpha: f64,
    pub eps: f64,
    pub provenance: Provenance,
}

impl BlockEncoding {
    /// Wraps a unitary; unitarity itself is not re-checked here.
    pub fn new(
        unitary: CMatrix,
        system_qubits: usize,
        ancilla_qubits: usize,
        alpha: f64,
        eps: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        let dim = 1usize << (system_qubits + ancilla_qubits);
        if unitary.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "unitary is {}x{}, expected {dim}x{dim} for {system_qubits} system and {ancilla_qubits} ancilla qubits",
                unitary.nrows(),
                unitary.ncols()
            )));
        }
        if !(alpha > 0.0) || !(eps >= 0.0) {
            return Err(Error::InvalidOperator(format!(
                "need alpha > 0 and eps >= 0, got alpha = {alpha}, eps = {eps}"
            )));
        }
        Ok(BlockEncoding {
            unitary,
            system_qubits,
            ancilla_qubits,
            alpha,
            eps,
            provenance,
        })
    }

    /// `(1, 0, 0)` encoding of the identity on `s` qubits.
    pub fn identity(s: usize) -> Self {
        BlockEncoding::new(identity(1 << s), s, 0, 1.0, 0.0, Provenance::new("identity")).unwrap()
    }

    pub fn total_qubits(&self) -> usize {
        self.system_qubits + self.ancilla_qubits
    }

    pub fn system_dim(&self) -> usize {
        1 << self.system_qubits
    }

    pub fn is_exact(&self) -> bool {
        self.alpha == 1.0 && self.eps == 0.0
    }

    pub fn block(&self) -> CMatrix {
        block_of(self)
    }
}

/// `alpha * (<0| (x) I) U (|0> (x) I)`
pub fn block_of(be: &BlockEncoding) -> CMatrix {
    let d = be.system_dim();
    be.unitary.view((0, 0), (d, d)).scale(be.alpha)
}

fn check_encoding_width(qubits: usize) -> Result<()> {
    if qubits > MAX_ENCODING_QUBITS {
        return Err(Error::TooWide {
            qubits,
            limit: MAX_ENCODING_QUBITS,
        });
    }
    Ok(())
}

/// Swaps the registers `a..a+len` and `b..b+len` of a statevector.
fn swap_registers(state: &mut [Complex64], total: usize, a: usize, b: usize, len: usize) {
    let swap = Gate::new(GateKind::Swap, vec![0, 1], vec![]).unwrap().matrix();
    for k in 0..len {
        apply_matrix(state, total, &[a + k, b + k], &swap);
    }
}

/// `(1, n, 0)` encoding of the output state of `c`.
///
/// Layout `[A' (r), R (n - r), A_in (r)]`, unitary
/// `(Q^dagger (x) I) SWAP(A_in, A') (Q (x) I)`.
pub fn purified_density_encoding(c: &Circuit) -> Result<BlockEncoding> {
    if c.n() > 12 {
        return Err(Error::TooWide {
            qubits: c.n(),
            limit: 12,
        });
    }
    let (n, r) = (c.n(), c.r());
    let total = n + r;
    check_encoding_width(total)?;
    let q_dag = c.adjoint();
    let unitary = matrix_of_action(total, |col| {
        c.apply_embedded(col, total, 0);
        swap_registers(col, total, 0, n, r);
        q_dag.apply_embedded(col, total, 0);
    });
    let provenance = Provenance::new("purified-density")
        .with_query("Q", 1)
        .with_query("Q^dagger", 1);
    BlockEncoding::new(unitary, r, n, 1.0, 0.0, provenance)
}

/// Unitary whose first column has amplitudes `sqrt(weights_i / sum)`, padded
/// with zeros up to the next power of two.
pub fn prep_unitary(weights: &[f64]) -> Result<CMatrix> {
    if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidOperator(
            "prep weights must be nonnegative and nonempty".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidOperator("prep weights sum to zero".into()));
    }
    let dim = weights.len().next_power_of_two();
    let mut col = CVector::zeros(dim);
    for (i, w) in weights.iter().enumerate() {
        col[i] = cr((w / total).sqrt());
    }
    let col = CMatrix::from_column_slice(dim, 1, col.as_slice());
    Ok(complete_to_unitary(&col))
}

fn index_qubits(m: usize) -> usize {
    m.next_power_of_two().trailing_zeros() as usize
}

/// `(||y||_1 alpha, a + ceil(log2 m), ||y||_1 eps)` encoding of `sum_i y_i A_i`
/// built as `prep^dagger . select . prep` on layout `[index, ancillas, system]`.
pub fn lcu_combine(
    encodings: &[BlockEncoding],
    coeffs: &[Complex64],
    prep: &CMatrix,
) -> Result<BlockEncoding> {
    let m = encodings.len();
    if m == 0 || coeffs.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "{m} encodings but {} coefficients",
            coeffs.len()
        )));
    }
    let first = &encodings[0];
    for (i, be) in encodings.iter().enumerate() {
        if be.system_qubits != first.system_qubits || be.ancilla_qubits != first.ancilla_qubits {
            return Err(Error::ShapeMismatch(format!(
                "encoding {i} has (s, a) = ({}, {}), encoding 0 has ({}, {})",
                be.system_qubits, be.ancilla_qubits, first.system_qubits, first.ancilla_qubits
            )));
        }
        if (be.alpha - first.alpha).abs() > 1e-12 * first.alpha {
            return Err(Error::ShapeMismatch(format!(
                "encoding {i} has alpha = {}, encoding 0 has {}",
                be.alpha, first.alpha
            )));
        }
    }
    let idx = index_qubits(m);
    let idx_dim = 1usize << idx;
    if prep.shape() != (idx_dim, idx_dim) {
        return Err(Error::ShapeMismatch(format!(
            "prep is {}x{}, expected {idx_dim}x{idx_dim}",
            prep.nrows(),
            prep.ncols()
        )));
    }
    let l1: f64 = coeffs.iter().map(|y| y.norm()).sum();
    if !(l1 > 0.0) {
        return Err(Error::ShapeMismatch("coefficient vector is zero".into()));
    }
    for i in 0..idx_dim {
        let want = if i < m { coeffs[i].norm() / l1 } else { 0.0 };
        if (prep[(i, 0)].norm_sqr() - want).abs() > 1e-10 {
            return Err(Error::ShapeMismatch(format!(
                "prep amplitude {i} has weight {}, expected {want}",
                prep[(i, 0)].norm_sqr()
            )));
        }
    }
    let inner = first.total_qubits();
    let total = idx + inner;
    check_encoding_width(total)?;
    let inner_dim = 1usize << inner;

    let mut select = CMatrix::identity(idx_dim * inner_dim, idx_dim * inner_dim);
    for (i, (be, y)) in encodings.iter().zip(coeffs).enumerate() {
        let phase = if y.norm() > 0.0 { y / y.norm() } else { cr(1.0) };
        let off = i * inner_dim;
        select
            .view_mut((off, off), (inner_dim, inner_dim))
            .copy_from(&be.unitary.scale(1.0).map(|z| z * phase));
    }
    let prep_full = prep.kronecker(&identity(inner_dim));
    let unitary = prep_full.adjoint() * select * &prep_full;

    let mut provenance = Provenance::new(format!("lcu[{m}]"));
    for be in encodings {
        provenance.absorb(&be.provenance);
    }
    let eps = encodings.iter().map(|be| be.eps).fold(0.0, f64::max) * l1;
    BlockEncoding::new(
        unitary,
        first.system_qubits,
        first.ancilla_qubits + idx,
        l1 * first.alpha,
        eps,
        provenance,
    )
}

/// `(1, n + 1, 0)` encoding of `(rho0 - rho1) / 2` from the LCU of the two
/// purified-density encodings with `y = (1/2, -1/2)`.
pub fn halved_difference_encoding(pair: &StatePrepPair) -> Result<BlockEncoding> {
    let e0 = purified_density_encoding(&pair.q0)?;
    let e1 = purified_density_encoding(&pair.q1)?;
    let prep = prep_unitary(&[0.5, 0.5])?;
    let mut be = lcu_combine(&[e0, e1], &[cr(0.5), cr(-0.5)], &prep)?;
    be.provenance.construction = "halved-difference".into();
    be.provenance.queries = BTreeMap::from([
        ("Q0".to_string(), 1),
        ("Q0^dagger".to_string(), 1),
        ("Q1".to_string(), 1),
        ("Q1^dagger".to_string(), 1),
    ]);
    Ok(be)
}

/// `(1, n, 0)` encoding of `Tr_A(|psi0><psi1|)`.
///
/// Layout `[A' (r), R (n - r), E (n - r)]`; `A'` and `R` are the ancillas that
/// `Q0` and `Q1` act on, `E` is the system. The unitary is
/// `(Q1^dagger (x) I_E) SWAP(R, E) (Q0 (x) I_E)`.
pub fn uhlmann_encoding(pair: &StatePrepPair) -> Result<BlockEncoding> {
    let (n, r) = (pair.n(), pair.r());
    let total = 2 * n - r;
    if total > 14 {
        return Err(Error::TooWide {
            qubits: total,
            limit: 14,
        });
    }
    check_encoding_width(total)?;
    let q1_dag = pair.q1.adjoint();
    let unitary = matrix_of_action(total, |col| {
        pair.q0.apply_embedded(col, total, 0);
        swap_registers(col, total, r, n, n - r);
        q1_dag.apply_embedded(col, total, 0);
    });
    let provenance = Provenance::new("uhlmann")
        .with_query("Q0", 1)
        .with_query("Q1^dagger", 1);
    BlockEncoding::new(unitary, n - r, n, 1.0, 0.0, provenance)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub operator_norm: f64,
    pub max_entry: f64,
}

/// Distance between the encoded block and `target`.
pub fn verify_exact(be: &BlockEncoding, target: &CMatrix) -> Result<Deviation> {
    let block = block_of(be);
    if block.shape() != target.shape() {
        return Err(Error::DimensionMismatch(format!(
            "block is {}x{}, target is {}x{}",
            block.nrows(),
            block.ncols(),
            target.nrows(),
            target.ncols()
        )));
    }
    let diff = &block - target;
    Ok(Deviation {
        operator_norm: operator_norm(&diff)?,
        max_entry: max_abs_diff(&block, target),
    })
}
