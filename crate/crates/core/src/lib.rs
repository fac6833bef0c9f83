//! Equivariant quantum-circuit Q-learning for the Traveling Salesman Problem.
//!
//! The crate is a small laboratory: a dense state-vector simulator ([`qsim`]),
//! the two circuit families used as Q-function approximators ([`ansatz`]), the
//! TSP world with exact and heuristic solvers ([`tsp`]), an ε-greedy Q-learning
//! agent ([`agent`]), the zero-shot transfer bound and its numerical checks
//! ([`bound`]), and an experiment grid with a resumable results store
//! ([`harness`]).
//!
//! ```
//! use eqc_transfer::tsp::{self, Generator};
//!
//! let inst = tsp::gen_instance(6, Generator::RandomUniform, 7).unwrap();
//! let opt = tsp::held_karp(&inst).unwrap();
//! let nn = tsp::nearest_neighbor(&inst, 0).unwrap();
//! assert!(nn.length >= opt.length - 1e-12);
//! ```

pub mod agent;
pub mod ansatz;
pub mod bound;
mod error;
pub mod harness;

pub mod qsim;
pub mod seeding;
pub mod tsp;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/tsp.md")]
    mod tsp {}
    #[doc = include_str!("../../../book/src/agent.md")]
    mod agent {}
    #[doc = include_str!("../../../book/src/bound.md")]
    mod bound {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
