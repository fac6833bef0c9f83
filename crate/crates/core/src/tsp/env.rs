use serde::{Deserialize, Serialize};

use super::TspInstance;
use crate::{Error, Result};

/// MDP state while a tour is being built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TourState {
    pub start: usize,
    pub current: usize,
    /// Bit `i` set iff city `i` has been visited.
    pub visited: u32,
    pub partial_cost: f64,
}

impl TourState {
    pub fn is_visited(&self, city: usize) -> bool {
        self.visited & (1 << city) != 0
    }

    pub fn num_visited(&self) -> usize {
        self.visited.count_ones() as usize
    }

    pub fn unvisited(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..k).filter(move |&c| !self.is_visited(c))
    }

    /// `s_i = 1` iff city `i` is unvisited.
    pub fn encode(&self, k: usize) -> Vec<u8> {
        (0..k).map(|c| u8::from(!self.is_visited(c))).collect()
    }

    /// Same state after relabelling cities by `perm` (old `i` → `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> TourState {
        let mut visited = 0u32;
        for (i, &p) in perm.iter().enumerate() {
            if self.is_visited(i) {
                visited |= 1 << p;
            }
        }
        TourState {
            start: perm[self.start],
            current: perm[self.current],
            visited,
            partial_cost: self.partial_cost,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: TourState,
    pub reward: f64,
    pub done: bool,
}

pub fn env_reset(instance: &TspInstance, start: usize) -> Result<TourState> {
    let k = instance.k();
    if start >= k {
        return Err(Error::CityIndex { city: start, k });
    }
    Ok(TourState {
        start,
        current: start,
        visited: 1 << start,
        partial_cost: 0.0,
    })
}

/// Move to `action`. The reward is the negative edge weight; the step that
/// visits the last city also pays the closing edge back to the start.
pub fn env_step(instance: &TspInstance, state: &TourState, action: usize) -> Result<StepOutcome> {
    let k = instance.k();
    if action >= k {
        return Err(Error::CityIndex { city: action, k });
    }
    if state.num_visited() == k {
        return Err(Error::EpisodeDone);
    }
    if state.is_visited(action) {
        return Err(Error::AlreadyVisited(action));
    }
    let w = instance.weight(state.current, action);
    let mut next = TourState {
        start: state.start,
        current: action,
        visited: state.visited | (1 << action),
        partial_cost: state.partial_cost + w,
    };
    let mut reward = -w;
    let done = next.num_visited() == k;
    if done {
        let closing = instance.weight(action, state.start);
        next.partial_cost += closing;
        reward -= closing;
    }
    Ok(StepOutcome {
        state: next,
        reward,
        done,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::triangle;
    use super::*;

    #[test]
    fn reset() {
        let inst = super::super::gen_instance(4, super::super::Generator::RandomUniform, 0).unwrap();
        let s = env_reset(&inst, 0).unwrap();
        assert_eq!(s.visited, 0b0001);
        assert_eq!(s.partial_cost, 0.0);
        assert_eq!(s.current, 0);
        assert!(env_reset(&inst, 4).is_err());
    }

    #[test]
    fn steps_and_closing_edge() {
        let inst = triangle();
        let s0 = env_reset(&inst, 0).unwrap();
        let a = env_step(&inst, &s0, 1).unwrap();
        assert_eq!(a.reward, -1.0);
        assert!(!a.done);
        let b = env_step(&inst, &a.state, 2).unwrap();
        assert!(b.done);
        assert_eq!(b.reward, -5.0);
        assert_eq!(b.state.partial_cost, 6.0);
        assert_eq!(a.reward + b.reward, -6.0);
        assert!(matches!(env_step(&inst, &a.state, 1), Err(Error::AlreadyVisited(1))));
        assert!(matches!(env_step(&inst, &b.state, 0), Err(Error::EpisodeDone)));
    }

    #[test]
    fn encoding_is_complement_of_visited() {
        let s = TourState {
            start: 0,
            current: 2,
            visited: 0b0101,
            partial_cost: 0.0,
        };
        assert_eq!(s.encode(4), vec![0, 1, 0, 1]);
    }
}
