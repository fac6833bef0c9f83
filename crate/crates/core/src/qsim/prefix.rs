use super::{zero_state, GateOp, StateVector};
use crate::Result;

/// Runs circuits that share a prefix with a reference circuit, resuming
/// from a stored state instead of starting over. States are kept at the
/// start and end of every RZZ run, where most of the cost sits.
pub(crate) struct PrefixRunner {
    base: Vec<GateOp>,
    snapshots: Vec<(usize, StateVector)>,
    final_state: StateVector,
}

impl PrefixRunner {
    pub fn new(k: usize, base: Vec<GateOp>) -> Result<Self> {
        for g in &base {
            g.validate(k)?;
        }
        let leading_h = base.len() >= k && (0..k).all(|q| base[q] == GateOp::H(q));
        let (mut pos, mut state) = if leading_h {
            (k, StateVector::uniform(k)?)
        } else {
            (0, zero_state(k)?)
        };
        let mut snapshots = vec![(pos, state.clone())];
        let is_zz = |g: &GateOp| matches!(g, GateOp::RZZ(..));
        for i in pos + 1..=base.len() {
            let boundary = i == base.len() || is_zz(&base[i]) != is_zz(&base[i - 1]);
            if boundary {
                state.run(&base[pos..i])?;
                pos = i;
                if i < base.len() {
                    snapshots.push((i, state.clone()));
                }
            }
        }
        Ok(PrefixRunner {
            base,
            snapshots,
            final_state: state,
        })
    }

    pub fn base(&self) -> &[GateOp] {
        &self.base
    }

    pub fn final_state(&self) -> &StateVector {
        &self.final_state
    }

    pub fn run(&self, circuit: &[GateOp]) -> Result<StateVector> {
        let k = self.final_state.num_qubits();
        for g in circuit {
            g.validate(k)?;
        }
        let common = circuit
            .iter()
            .zip(&self.base)
            .take_while(|(a, b)| a == b)
            .count();
        if common == circuit.len() && circuit.len() == self.base.len() {
            return Ok(self.final_state.clone());
        }
        let (start, snap) = self
            .snapshots
            .iter()
            .rev()
            .find(|(i, _)| *i <= common)
            .map(|(i, s)| (*i, s.clone()))
            .unwrap_or((0, zero_state(k)?));
        let mut s = snap;
        s.run(&circuit[start..])?;
        Ok(s)
    }
}
