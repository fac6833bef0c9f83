//! Dense state-vector simulation.
//!
//! Conventions:
//!
//! * qubit 0 is the least-significant bit of the basis index;
//! * `RX`, `RY`, `RZ` use the half-angle form `exp(-i θ P / 2)`;
//! * `RZZ(θ)` is `exp(-i θ Z_i Z_j)` with the full angle.

mod dense;
mod gate;
mod observable;
mod prefix;
mod state;

pub use dense::{dense_unitary, operator_norm, operator_norm_with, CMatrix, KRYLOV_STEPS, NORM_TOLERANCE};
pub use gate::GateOp;
pub(crate) use prefix::PrefixRunner;
pub use observable::{Observable, PauliZTerm};
pub use state::{zero_state, StateVector};

pub use num_complex::Complex64;

pub const MAX_QUBITS: usize = 16;
pub const MAX_DENSE_QUBITS: usize = 10;
