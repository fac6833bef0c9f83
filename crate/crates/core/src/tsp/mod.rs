//! TSP instances, the tour-building MDP, classical solvers and the
//! normalised performance metric.

mod christofides;
mod env;
mod exact;
mod heuristics;
mod instance;
mod metric;

pub use christofides::{christofides_like, christofides_with_info};
pub use env::{env_reset, env_step, StepOutcome, TourState};
pub use exact::{brute_force, held_karp, BRUTE_FORCE_MAX_K, HELD_KARP_MAX_K};
pub use heuristics::{nearest_neighbor, nearest_neighbor_from};
pub use instance::{gen_instance, Generator, TspInstance, MAX_CITIES, MIN_CITIES};
pub use metric::{normalize_performance, PerfNormalizer, Performance};

use crate::{Error, Result};

/// A closed tour. `order` starts at the tour's first city; the closing edge
/// back to it is included in `length`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
}

impl Tour {
    pub fn from_order(instance: &TspInstance, order: Vec<usize>) -> Result<Tour> {
        let k = instance.k();
        if order.len() != k {
            return Err(Error::SizeMismatch(format!(
                "tour has {} cities, instance has {k}",
                order.len()
            )));
        }
        let mut seen = vec![false; k];
        for &c in &order {
            if c >= k {
                return Err(Error::CityIndex { city: c, k });
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::AlreadyVisited(c));
            }
        }
        let length = tour_length(instance, &order);
        Ok(Tour { order, length })
    }
}

/// Sum of consecutive weights plus the closing edge.
pub fn tour_length(instance: &TspInstance, order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    let w = instance.weights();
    let open: f64 = order.windows(2).map(|p| w[p[0]][p[1]]).sum();
    open + w[order[order.len() - 1]][order[0]]
}

/// In-place lexicographic successor; `false` once the last permutation is reached.
pub(crate) fn next_permutation(xs: &mut [usize]) -> bool {
    if xs.len() < 2 {
        return false;
    }
    let mut i = xs.len() - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = xs.len() - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}
