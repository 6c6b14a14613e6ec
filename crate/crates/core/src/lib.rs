//! Admissible control sets for safety and multi-objective priority control.
//!
//! Two constructions are provided side by side:
//!
//! * [`cbf`]: the barrier-function set `K_cbf(x) = {u : L_f h + L_g h·u + h/k ≥ 0}`,
//!   a sampling validity checker and a min-norm safety filter.
//! * [`bclf`]: priority tables of bounded objectives, the current priority
//!   level, the level-preserving set `U_sat`, the level-raising set `U_inc`
//!   and a min-norm controller over their intersection.
//!
//! [`equivalence`] checks that the two sets coincide for `V = −h`, a single
//! bound `b = 0` and the linear class-K function `α(y) = y/k`. [`sim`] runs
//! closed-loop rollouts and monitors invariance, level monotonicity and
//! exponential approach rates.

pub mod bclf;
pub mod cbf;
pub mod equivalence;
mod error;
pub mod model;
pub mod sim;
pub mod solver;
mod validity;

pub use error::{Error, Result};
pub use model::{
    class_kappa, AxisBox, BarrierSpec, Bound, ControlAffineSystem, ControlBox, Halfspace, Objective, PriorityTable,
    ScalarField, Sense, StateBox,
};
pub use solver::{solve_min_norm, Certificate, MinNormProblem, SolveResult, SolveStatus};
pub use validity::{SamplingOptions, ValidityReport};
