//! State-preparation circuits, their dense simulation, and the JSON circuit
//! format.
//!
//! Qubit 0 is the most significant bit of a basis index. In a circuit with
//! `r` outputs, qubits `0..r` are the output register `A` and `r..n` the
//! reference register `R`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::format::{sig17_vec, Sig17};
use crate::numerics::{c, cr, CMatrix, CVector};
use crate::random::rng_for;
use crate::{Error, Result};

/// Widest register that is ever simulated densely.
pub const MAX_WIDTH: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    T,
    Rx,
    Ry,
    Rz,
    Cx,
    Cz,
    Swap,
    Ccx,
    U,
}

impl GateKind {
    pub const ALL: [GateKind; 14] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::T,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Cz,
        GateKind::Swap,
        GateKind::Ccx,
        GateKind::U,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Ccx => "ccx",
            GateKind::U => "u",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cx | GateKind::Cz | GateKind::Swap => 2,
            GateKind::Ccx => 3,
            _ => 1,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            GateKind::U => 3,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown gate name `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// For controlled gates the controls come first.
    pub targets: Vec<usize>,
    /// Angles in radians.
    pub params: Vec<f64>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if targets.len() != kind.arity() {
            return Err(Error::InvalidShape(format!(
                "gate {kind} expects {} target(s), got {}",
                kind.arity(),
                targets.len()
            )));
        }
        if params.len() != kind.param_count() {
            return Err(Error::InvalidShape(format!(
                "gate {kind} expects {} parameter(s), got {}",
                kind.param_count(),
                params.len()
            )));
        }
        for (i, t) in targets.iter().enumerate() {
            if targets[..i].contains(t) {
                return Err(Error::InvalidShape(format!(
                    "gate {kind} repeats target qubit {t}"
                )));
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidShape(format!(
                "gate {kind} has a non-finite angle"
            )));
        }
        Ok(Gate {
            kind,
            targets,
            params,
        })
    }

    pub fn h(q: usize) -> Self {
        Gate::new(GateKind::H, vec![q], vec![]).unwrap()
    }

    pub fn x(q: usize) -> Self {
        Gate::new(GateKind::X, vec![q], vec![]).unwrap()
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Gate::new(GateKind::Rz, vec![q], vec![theta]).unwrap()
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        Gate::new(GateKind::Ry, vec![q], vec![theta]).unwrap()
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate::new(GateKind::Cx, vec![control, target], vec![]).unwrap()
    }

    pub fn u(q: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Gate::new(GateKind::U, vec![q], vec![theta, phi, lambda]).unwrap()
    }

    /// Dense matrix on the gate's own targets, first target most significant.
    pub fn matrix(&self) -> CMatrix {
        let z = cr(0.0);
        let one = cr(1.0);
        let p = &self.params;
        match self.kind {
            GateKind::H => {
                let h = cr(FRAC_1_SQRT_2);
                CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
            }
            GateKind::X => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
            GateKind::Y => CMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
            GateKind::Z => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
            GateKind::S => CMatrix::from_row_slice(2, 2, &[one, z, z, c(0.0, 1.0)]),
            GateKind::T => CMatrix::from_row_slice(
                2,
                2,
                &[one, z, z, Complex64::from_polar(1.0, FRAC_PI_4)],
            ),
            GateKind::Rx => {
                let (s, co) = (p[0] / 2.0).sin_cos();
                CMatrix::from_row_slice(2, 2, &[cr(co), c(0.0, -s), c(0.0, -s), cr(co)])
            }
            GateKind::Ry => {
                let (s, co) = (p[0] / 2.0).sin_cos();
                CMatrix::from_row_slice(2, 2, &[cr(co), cr(-s), cr(s), cr(co)])
            }
            GateKind::Rz => CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::from_polar(1.0, -p[0] / 2.0),
                    z,
                    z,
                    Complex64::from_polar(1.0, p[0] / 2.0),
                ],
            ),
            GateKind::U => {
                let (theta, phi, lambda) = (p[0], p[1], p[2]);
                let (s, co) = (theta / 2.0).sin_cos();
                CMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        cr(co),
                        -Complex64::from_polar(s, lambda),
                        Complex64::from_polar(s, phi),
                        Complex64::from_polar(co, phi + lambda),
                    ],
                )
            }
            GateKind::Cx => permutation_matrix(4, |i| if i >= 2 { i ^ 1 } else { i }),
            GateKind::Cz => {
                let mut m = CMatrix::identity(4, 4);
                m[(3, 3)] = -one;
                m
            }
            GateKind::Swap => permutation_matrix(4, |i| ((i & 1) << 1) | (i >> 1)),
            GateKind::Ccx => permutation_matrix(8, |i| if i >= 6 { i ^ 1 } else { i }),
        }
    }

    /// Inverse gate, expressed in the same gate set.
    pub fn adjoint(&self) -> Gate {
        let t = self.targets.clone();
        let p = &self.params;
        let (kind, params) = match self.kind {
            GateKind::S => (GateKind::U, vec![0.0, 0.0, -FRAC_PI_2]),
            GateKind::T => (GateKind::U, vec![0.0, 0.0, -FRAC_PI_4]),
            GateKind::Rx | GateKind::Ry | GateKind::Rz => (self.kind, vec![-p[0]]),
            GateKind::U => (GateKind::U, vec![-p[0], -p[2], -p[1]]),
            k => (k, vec![]),
        };
        Gate {
            kind,
            targets: t,
            params,
        }
    }
}

fn permutation_matrix(d: usize, image: impl Fn(usize) -> usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(image(i), i)] = cr(1.0);
    }
    m
}

/// Applies `mat` to the listed qubits of an `n_qubits` statevector in place.
/// `targets[0]` is the most significant qubit of `mat`'s index.
pub fn apply_matrix(state: &mut [Complex64], n_qubits: usize, targets: &[usize], mat: &CMatrix) {
    let k = targets.len();
    let dim = 1usize << k;
    assert_eq!(state.len(), 1usize << n_qubits, "statevector length");
    assert_eq!(mat.shape(), (dim, dim), "gate matrix shape");
    let masks: Vec<usize> = targets
        .iter()
        .map(|&q| {
            assert!(q < n_qubits, "target {q} outside {n_qubits} qubits");
            1usize << (n_qubits - 1 - q)
        })
        .collect();
    let any_mask: usize = masks.iter().fold(0, |acc, m| acc | m);
    let offsets: Vec<usize> = (0..dim)
        .map(|m| {
            (0..k)
                .filter(|t| m & (1 << (k - 1 - t)) != 0)
                .fold(0, |acc, t| acc | masks[t])
        })
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    for base in 0..state.len() {
        if base & any_mask != 0 {
            continue;
        }
        for (slot, off) in buf.iter_mut().zip(&offsets) {
            *slot = state[base | off];
        }
        for (row, off) in offsets.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (col, amp) in buf.iter().enumerate() {
                acc += mat[(row, col)] * amp;
            }
            state[base | off] = acc;
        }
    }
}

/// Reorders qubits of a statevector: qubit `q` of the input lands on qubit `perm[q]`.
pub fn permute_qubits(state: &[Complex64], n_qubits: usize, perm: &[usize]) -> Vec<Complex64> {
    assert_eq!(perm.len(), n_qubits);
    let mut out = vec![Complex64::new(0.0, 0.0); state.len()];
    for (i, amp) in state.iter().enumerate() {
        let mut j = 0usize;
        for (q, &dest) in perm.iter().enumerate() {
            if i & (1 << (n_qubits - 1 - q)) != 0 {
                j |= 1 << (n_qubits - 1 - dest);
            }
        }
        out[j] = *amp;
    }
    out
}

/// Builds the matrix of a linear map on `n_qubits` from its action on basis vectors.
pub fn matrix_of_action(n_qubits: usize, action: impl Fn(&mut Vec<Complex64>)) -> CMatrix {
    let d = 1usize << n_qubits;
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        let mut col = vec![Complex64::new(0.0, 0.0); d];
        col[j] = cr(1.0);
        action(&mut col);
        for (i, amp) in col.into_iter().enumerate() {
            m[(i, j)] = amp;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    r: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, r: usize, gates: Vec<Gate>) -> Result<Self> {
        if n == 0 || r == 0 || r > n {
            return Err(Error::InvalidShape(format!(
                "need 1 <= r <= n, got n = {n}, r = {r}"
            )));
        }
        for (i, g) in gates.iter().enumerate() {
            if let Some(q) = g.targets.iter().find(|&&q| q >= n) {
                return Err(Error::InvalidShape(format!(
                    "gates[{i}] ({}) targets qubit {q} outside width {n}",
                    g.kind
                )));
            }
        }
        Ok(Circuit { n, r, gates })
    }

    pub fn empty(n: usize, r: usize) -> Result<Self> {
        Circuit::new(n, r, Vec::new())
    }

    /// Appends a gate, panicking if it does not fit; intended for literals.
    pub fn with(mut self, gate: Gate) -> Self {
        assert!(gate.targets.iter().all(|&q| q < self.n), "gate outside circuit");
        self.gates.push(gate);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of reference (non-output) qubits.
    pub fn reference_qubits(&self) -> usize {
        self.n - self.r
    }

    fn check_width(&self, qubits: usize) -> Result<()> {
        if qubits > MAX_WIDTH {
            return Err(Error::TooWide {
                qubits,
                limit: MAX_WIDTH,
            });
        }
        Ok(())
    }

    /// Applies the circuit to qubits `offset..offset + n` of a larger register.
    pub fn apply_embedded(&self, state: &mut [Complex64], total_qubits: usize, offset: usize) {
        assert!(offset + self.n <= total_qubits);
        for g in &self.gates {
            let targets: Vec<usize> = g.targets.iter().map(|q| q + offset).collect();
            apply_matrix(state, total_qubits, &targets, &g.matrix());
        }
    }

    pub fn apply(&self, state: &mut [Complex64]) {
        self.apply_embedded(state, self.n, 0);
    }

    pub fn unitary(&self) -> Result<CMatrix> {
        self.check_width(self.n)?;
        Ok(matrix_of_action(self.n, |col| self.apply(col)))
    }

    /// `Q |0...0>`
    pub fn purification(&self) -> Result<CVector> {
        self.check_width(self.n)?;
        let mut state = vec![Complex64::new(0.0, 0.0); 1 << self.n];
        state[0] = cr(1.0);
        self.apply(&mut state);
        Ok(CVector::from_vec(state))
    }

    /// Output-register state after tracing out the reference register.
    pub fn reduced_state(&self) -> Result<CMatrix> {
        let psi = self.purification()?;
        let m = amplitude_matrix(&psi, self.r, self.n);
        let rho = &m * m.adjoint();
        Ok((&rho + rho.adjoint()).scale(0.5))
    }

    pub fn adjoint(&self) -> Circuit {
        Circuit {
            n: self.n,
            r: self.r,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }
}

/// Reshapes an `n`-qubit amplitude vector into the `2^r x 2^(n-r)` matrix
/// `M[a][b] = <a, b | psi>` (output register as rows).
pub fn amplitude_matrix(psi: &CVector, r: usize, n: usize) -> CMatrix {
    let ref_dim = 1usize << (n - r);
    CMatrix::from_fn(1 << r, ref_dim, |a, b| psi[a * ref_dim + b])
}

pub fn unitary_of(c: &Circuit) -> Result<CMatrix> {
    c.unitary()
}

pub fn prepare_purification(c: &Circuit) -> Result<CVector> {
    c.purification()
}

pub fn reduced_state(c: &Circuit) -> Result<CMatrix> {
    c.reduced_state()
}

pub fn adjoint(c: &Circuit) -> Circuit {
    c.adjoint()
}

/// `r` EPR pairs on `n = 2r` qubits; output qubit `k` is paired with reference qubit `r + k`.
pub fn epr_prep(r: usize) -> Result<Circuit> {
    if r == 0 {
        return Err(Error::InvalidShape("epr_prep needs r >= 1".into()));
    }
    if 2 * r > MAX_WIDTH {
        return Err(Error::TooWide {
            qubits: 2 * r,
            limit: MAX_WIDTH,
        });
    }
    let mut c = Circuit::empty(2 * r, r)?;
    for k in 0..r {
        c = c.with(Gate::h(k)).with(Gate::cx(k, r + k));
    }
    Ok(c)
}

/// Two-qubit Bell-pair preparation with one output qubit.
pub fn bell_prep() -> Circuit {
    Circuit::empty(2, 1)
        .unwrap()
        .with(Gate::h(0))
        .with(Gate::cx(0, 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatePrepPair {
    pub q0: Circuit,
    pub q1: Circuit,
    pub label: String,
}

impl StatePrepPair {
    pub fn new(q0: Circuit, q1: Circuit, label: impl Into<String>) -> Result<Self> {
        if q0.n != q1.n || q0.r != q1.r {
            return Err(Error::InvalidShape(format!(
                "pair shapes differ: (n, r) = ({}, {}) vs ({}, {})",
                q0.n, q0.r, q1.n, q1.r
            )));
        }
        Ok(StatePrepPair {
            q0,
            q1,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.q0.n
    }

    pub fn r(&self) -> usize {
        self.q0.r
    }

    /// `(rho0, rho1)`
    pub fn reduced_states(&self) -> Result<(CMatrix, CMatrix)> {
        Ok((self.q0.reduced_state()?, self.q1.reduced_state()?))
    }

    /// `(|psi0>, |psi1>)`
    pub fn purifications(&self) -> Result<(CVector, CVector)> {
        Ok((self.q0.purification()?, self.q1.purification()?))
    }

    /// The same pair with the roles of `Q0` and `Q1` exchanged.
    pub fn swapped(&self) -> StatePrepPair {
        StatePrepPair {
            q0: self.q1.clone(),
            q1: self.q0.clone(),
            label: format!("{} (swapped)", self.label),
        }
    }
}

fn random_circuit<R: Rng>(n: usize, r: usize, depth: usize, rng: &mut R) -> Circuit {
    let kinds: Vec<GateKind> = GateKind::ALL
        .into_iter()
        .filter(|k| k.arity() <= n)
        .collect();
    let mut gates = Vec::with_capacity(depth);
    for _ in 0..depth {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let mut targets = Vec::with_capacity(kind.arity());
        while targets.len() < kind.arity() {
            let q = rng.random_range(0..n);
            if !targets.contains(&q) {
                targets.push(q);
            }
        }
        let params = (0..kind.param_count())
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect();
        gates.push(Gate::new(kind, targets, params).expect("sampled gate is well formed"));
    }
    Circuit { n, r, gates }
}

/// Two independent random circuits of `depth` gates each, deterministic in `seed`.
pub fn random_pair(n: usize, r: usize, depth: usize, seed: u64) -> Result<StatePrepPair> {
    if r == 0 || r > n {
        return Err(Error::InvalidShape(format!(
            "need 1 <= r <= n, got n = {n}, r = {r}"
        )));
    }
    if n > MAX_WIDTH {
        return Err(Error::TooWide {
            qubits: n,
            limit: MAX_WIDTH,
        });
    }
    let mut rng = rng_for(seed, 0);
    let q0 = random_circuit(n, r, depth, &mut rng);
    let q1 = random_circuit(n, r, depth, &mut rng);
    StatePrepPair::new(q0, q1, format!("random n={n} r={r} depth={depth} seed={seed}"))
}

// ---------------------------------------------------------------------------
// JSON format

#[derive(Serialize)]
struct GateOut<'a> {
    name: &'a str,
    targets: &'a [usize],
    params: Vec<Sig17>,
}

#[derive(Serialize)]
struct CircuitOut<'a> {
    n: usize,
    r: usize,
    gates: Vec<GateOut<'a>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GateIn {
    name: String,
    targets: Vec<usize>,
    #[serde(default)]
    params: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitIn {
    n: usize,
    r: usize,
    gates: Vec<GateIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairIn {
    #[serde(default)]
    label: String,
    q0: CircuitIn,
    q1: CircuitIn,
}

#[derive(Serialize)]
struct PairOut<'a> {
    label: &'a str,
    q0: CircuitOut<'a>,
    q1: CircuitOut<'a>,
}

fn circuit_out(c: &Circuit) -> CircuitOut<'_> {
    CircuitOut {
        n: c.n,
        r: c.r,
        gates: c
            .gates
            .iter()
            .map(|g| GateOut {
                name: g.kind.name(),
                targets: &g.targets,
                params: sig17_vec(&g.params),
            })
            .collect(),
    }
}

fn circuit_in(raw: CircuitIn, context: &str) -> Result<Circuit> {
    let mut gates = Vec::with_capacity(raw.gates.len());
    for (i, g) in raw.gates.into_iter().enumerate() {
        let kind: GateKind = g
            .name
            .parse()
            .map_err(|e| Error::Parse(format!("{context}gates[{i}]: {e}")))?;
        let gate = Gate::new(kind, g.targets, g.params)
            .map_err(|e| Error::Parse(format!("{context}gates[{i}]: {e}")))?;
        gates.push(gate);
    }
    Circuit::new(raw.n, raw.r, gates).map_err(|e| Error::Parse(format!("{context}{e}")))
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
}

pub fn serialize_circuit(c: &Circuit) -> String {
    serde_json::to_string_pretty(&circuit_out(c)).expect("circuit serializes")
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let raw: CircuitIn = serde_json::from_str(text).map_err(json_error)?;
    circuit_in(raw, "")
}

pub fn serialize_pair(pair: &StatePrepPair) -> String {
    let doc = PairOut {
        label: &pair.label,
        q0: circuit_out(&pair.q0),
        q1: circuit_out(&pair.q1),
    };
    serde_json::to_string_pretty(&doc).expect("pair serializes")
}

pub fn parse_pair(text: &str) -> Result<StatePrepPair> {
    let raw: PairIn = serde_json::from_str(text).map_err(json_error)?;
    let q0 = circuit_in(raw.q0, "q0.")?;
    let q1 = circuit_in(raw.q1, "q1.")?;
    StatePrepPair::new(q0, q1, raw.label).map_err(|e| Error::Parse(e.to_string()))
}
