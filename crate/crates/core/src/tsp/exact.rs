use super::{next_permutation, tour_length, Tour, TspInstance};
use crate::{Error, Result};

pub const HELD_KARP_MAX_K: usize = 18;
pub const BRUTE_FORCE_MAX_K: usize = 9;

fn tie_tol(scale: f64) -> f64 {
    1e-10 * scale.abs().max(1.0)
}

/// Exact optimum by dynamic programming over (visited subset, endpoint).
///
/// Tours start at city 0. Among optimal tours the lexicographically smallest
/// order is returned, which also fixes the direction.
pub fn held_karp(instance: &TspInstance) -> Result<Tour> {
    let k = instance.k();
    if k > HELD_KARP_MAX_K {
        return Err(Error::CityCount {
            k,
            min: 2,
            max: HELD_KARP_MAX_K,
        });
    }
    let w = instance.weights();
    let full = (1usize << k) - 1;
    // rest[mask * k + j]: cheapest completion from j, having visited mask
    // (which contains 0 and j), through all other cities and back to 0.
    let mut rest = vec![f64::INFINITY; (1usize << k) * k];
    for j in 0..k {
        rest[full * k + j] = w[j][0];
    }
    for mask in (1..full).rev() {
        if mask & 1 == 0 {
            continue;
        }
        for j in 0..k {
            if mask & (1 << j) == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            for u in 0..k {
                if mask & (1 << u) != 0 {
                    continue;
                }
                let c = w[j][u] + rest[(mask | (1 << u)) * k + u];
                if c < best {
                    best = c;
                }
            }
            rest[mask * k + j] = best;
        }
    }
    let optimum = rest[k]; // mask = {0}, j = 0
    let tol = tie_tol(optimum);

    // Forward pass: smallest next city that stays on an optimal completion.
    let mut order = vec![0usize];
    let mut mask = 1usize;
    let mut cur = 0usize;
    let mut spent = 0.0;
    while mask != full {
        let target = optimum - spent;
        let next = (0..k)
            .filter(|&u| mask & (1 << u) == 0)
            .find(|&u| w[cur][u] + rest[(mask | (1 << u)) * k + u] <= target + tol)
            .expect("an optimal continuation exists");
        spent += w[cur][next];
        mask |= 1 << next;
        cur = next;
        order.push(next);
    }
    let length = tour_length(instance, &order);
    Ok(Tour { order, length })
}

/// Minimum over all `(k-1)!/2` undirected tours through city 0.
pub fn brute_force(instance: &TspInstance) -> Result<Tour> {
    let k = instance.k();
    if k > BRUTE_FORCE_MAX_K {
        return Err(Error::CityCount {
            k,
            min: 2,
            max: BRUTE_FORCE_MAX_K,
        });
    }
    let mut rest: Vec<usize> = (1..k).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        // Each undirected tour once: the second city is below the last.
        if rest.len() < 2 || rest[0] < rest[rest.len() - 1] {
            let mut order = Vec::with_capacity(k);
            order.push(0);
            order.extend_from_slice(&rest);
            let len = tour_length(instance, &order);
            let better = match &best {
                None => true,
                Some((b, _)) => len < *b - tie_tol(*b),
            };
            if better {
                best = Some((len, order));
            }
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    let (length, order) = best.expect("at least one tour");
    Ok(Tour { order, length })
}
