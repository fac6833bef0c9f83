use super::{Tour, TspInstance};
use crate::{Error, Result};

/// Greedy nearest unvisited city from `start`; ties go to the lowest index.
pub fn nearest_neighbor(instance: &TspInstance, start: usize) -> Result<Tour> {
    nearest_neighbor_from(instance, start)
}

pub fn nearest_neighbor_from(instance: &TspInstance, start: usize) -> Result<Tour> {
    let k = instance.k();
    if start >= k {
        return Err(Error::CityIndex { city: start, k });
    }
    let w = instance.weights();
    let mut visited = vec![false; k];
    visited[start] = true;
    let mut order = vec![start];
    let mut cur = start;
    for _ in 1..k {
        let mut next = usize::MAX;
        for c in 0..k {
            if !visited[c] && (next == usize::MAX || w[cur][c] < w[cur][next]) {
                next = c;
            }
        }
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    Tour::from_order(instance, order)
}
