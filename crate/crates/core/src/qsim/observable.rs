use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `coefficient · Π_{q ∈ support} Z_q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliZTerm {
    pub coefficient: f64,
    pub support: Vec<usize>,
}

/// A real linear combination of Z-strings. Every term is diagonal in the
/// computational basis.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub terms: Vec<PauliZTerm>,
}

impl Observable {
    pub fn z(q: usize) -> Self {
        Self::term(1.0, &[q])
    }

    pub fn zz(i: usize, j: usize) -> Self {
        Self::term(1.0, &[i, j])
    }

    pub fn term(coefficient: f64, support: &[usize]) -> Self {
        Observable {
            terms: vec![PauliZTerm {
                coefficient,
                support: support.to_vec(),
            }],
        }
    }

    pub fn plus(mut self, other: Observable) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub(crate) fn masks(&self, num_qubits: usize) -> Result<Vec<(f64, usize)>> {
        self.terms
            .iter()
            .map(|t| {
                let mut mask = 0usize;
                for &q in &t.support {
                    if q >= num_qubits {
                        return Err(Error::QubitIndex {
                            index: q,
                            num_qubits,
                        });
                    }
                    // Z_q Z_q = I
                    mask ^= 1 << q;
                }
                Ok((t.coefficient, mask))
            })
            .collect()
    }

    /// Largest eigenvalue magnitude, i.e. the operator norm.
    ///
    /// The observable is diagonal, so this maximises `|Σ c_t (±1)|` over the
    /// sign patterns that basis states realise.
    pub fn operator_norm(&self) -> f64 {
        let max_q = self
            .terms
            .iter()
            .flat_map(|t| t.support.iter().copied())
            .max()
            .map_or(0, |q| q + 1);
        let masks = self.masks(max_q).expect("support within its own range");
        if max_q <= 20 {
            (0..1usize << max_q)
                .map(|x| eigenvalue(&masks, x).abs())
                .fold(0.0, f64::max)
        } else {
            masks.iter().map(|(c, _)| c.abs()).sum()
        }
    }
}

pub(crate) fn eigenvalue(masks: &[(f64, usize)], basis: usize) -> f64 {
    masks
        .iter()
        .map(|&(c, m)| {
            if (basis & m).count_ones() % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .sum()
}
