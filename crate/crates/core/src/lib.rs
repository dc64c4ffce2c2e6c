//! Numerical laboratory for algorithmic state discrimination and the
//! algorithmic Uhlmann transform.
//!
//! Everything is dense and exact at desk scale: state-preparation circuits are
//! simulated as statevectors, block-encodings are materialized as unitaries, and
//! the sign-polynomial singular value transformation is applied either through
//! an SVD oracle or through the Chebyshev three-term recurrence. The honest
//! prover strategies built from these pieces are then dropped into the
//! two-message distance and fidelity tests and checked against brute-force
//! trace-distance and fidelity oracles.
//!
//! Register conventions used throughout:
//!
//! * qubit 0 is the most significant bit of a basis index;
//! * in an `n`-qubit state-preparation circuit with `r` outputs, qubits
//!   `0..r` form the output register and `r..n` the reference register;
//! * in a block-encoding the ancilla register leads and the system register
//!   trails, so the encoded block is the top-left `2^s x 2^s` corner.

pub mod blockenc;
pub mod circuits;
mod error;
pub mod format;
pub mod helstrom;
pub mod numerics;
pub mod protocols;
pub mod qsvt;
pub mod random;
pub mod signpoly;
pub mod uhlmann;

pub use error::{Error, Result};
pub use numerics::CMatrix;

/// Constant in the sign-approximation error bound `|sgn(x) - P(x)| <= C_SGN * eps`.
pub const C_SGN: f64 = 5.0;
