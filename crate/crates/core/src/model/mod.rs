//! Domain types shared by the constraint constructions, the solver and the
//! simulator: control-affine dynamics, scalar fields with gradients, barrier
//! specifications, canonicalized objectives, priority tables, axis boxes and
//! affine control constraints.

mod barrier;
mod bounds;
mod field;
mod halfspace;
mod objective;
mod poly;
mod system;

pub use barrier::{class_kappa, BarrierSpec};
pub use bounds::{AxisBox, ControlBox, StateBox};
pub use field::{finite_difference_gradient, GradientCheck, ScalarField, ScalarFn, VectorFn};
pub use halfspace::{Degeneracy, Halfspace, Sense};
pub use objective::{Bound, Objective, PriorityTable};
pub use poly::{Monomial, Polynomial};
pub use system::{ControlAffineSystem, LieDerivatives, MatrixFn};
