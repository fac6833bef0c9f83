use serde::{Deserialize, Serialize};

use super::{held_karp, nearest_neighbor_from, TspInstance};
use crate::Result;

/// Affine normalisation anchors for one instance: the exact optimum and the
/// nearest-neighbour tour from city 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfNormalizer {
    pub l_opt: f64,
    pub l_max: f64,
}

/// Normalised performance in `[0, 1]`, 1 = optimal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Performance {
    pub value: f64,
    /// Set when `l_max == l_opt`; the value is then defined as 1.
    pub degenerate: bool,
}

impl PerfNormalizer {
    pub fn for_instance(instance: &TspInstance) -> Result<Self> {
        let l_opt = held_karp(instance)?.length;
        let l_max = nearest_neighbor_from(instance, 0)?.length.max(l_opt);
        Ok(PerfNormalizer { l_opt, l_max })
    }

    pub fn is_degenerate(&self) -> bool {
        self.l_max - self.l_opt <= 1e-9 * self.l_opt.abs().max(1.0)
    }
}

/// `1 − (L − L_opt)/(L_max − L_opt)`, clamped to `[0, 1]`.
pub fn normalize_performance(length: f64, norm: &PerfNormalizer) -> Performance {
    if norm.is_degenerate() {
        return Performance {
            value: 1.0,
            degenerate: true,
        };
    }
    let raw = 1.0 - (length - norm.l_opt) / (norm.l_max - norm.l_opt);
    Performance {
        value: raw.clamp(0.0, 1.0),
        degenerate: false,
    }
}
