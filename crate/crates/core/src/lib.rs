//! Transductive robust learning over finite instance spaces.
//!
//! The instance space is `{0, .., |X|-1}`, labels are `±1`, hypotheses are
//! full label tables and perturbation sets are finite relations. On top of
//! that sit the robust selectors, a white-box adversary that searches the
//! perturbation product space, brute-force combinatorial dimensions, the
//! closed-form bounds and a seeded Monte-Carlo harness.

pub mod adversary;
pub mod bounds;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod experiment;
pub mod learner;
pub mod model;
pub mod perturb;
pub mod random;
pub mod risk;
pub mod scenario;

pub use error::{Error, Result};
