use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One gate of a circuit. Angles are in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    H(usize),
    RX(usize, f64),
    RY(usize, f64),
    RZ(usize, f64),
    Cnot { control: usize, target: usize },
    RZZ(usize, usize, f64),
}

impl GateOp {
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q < num_qubits {
                Ok(())
            } else {
                Err(Error::QubitIndex {
                    index: q,
                    num_qubits,
                })
            }
        };
        match *self {
            GateOp::H(q) | GateOp::RX(q, _) | GateOp::RY(q, _) | GateOp::RZ(q, _) => check(q),
            GateOp::Cnot { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(Error::InvalidGate(format!(
                        "CNOT control and target are both {control}"
                    )));
                }
                Ok(())
            }
            GateOp::RZZ(i, j, _) => {
                check(i)?;
                check(j)?;
                if i == j {
                    return Err(Error::InvalidGate(format!("RZZ on a single qubit {i}")));
                }
                Ok(())
            }
        }
    }

    /// The inverse gate.
    pub fn inverse(&self) -> GateOp {
        match *self {
            GateOp::H(q) => GateOp::H(q),
            GateOp::RX(q, t) => GateOp::RX(q, -t),
            GateOp::RY(q, t) => GateOp::RY(q, -t),
            GateOp::RZ(q, t) => GateOp::RZ(q, -t),
            c @ GateOp::Cnot { .. } => c,
            GateOp::RZZ(i, j, t) => GateOp::RZZ(i, j, -t),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, GateOp::RZ(..) | GateOp::RZZ(..))
    }
}
