//! Fixtures for the min-norm filter and rollout benchmarks.

use invfilter_core::{AxisBox, Halfspace, MinNormProblem};
use nalgebra::{dvector, DVector};

/// Two-dimensional projection onto `count` halfspaces whose normals are
/// spread around the circle, with a target outside all of them.
pub fn polygon_problem(count: usize) -> MinNormProblem {
    let hs = (0..count)
        .map(|i| {
            let th = i as f64 * 0.7;
            Halfspace::ge(dvector![th.cos(), th.sin()], -0.5)
        })
        .collect();
    MinNormProblem::new(dvector![2.5, -1.5], hs, AxisBox::symmetric(2, 2.0).expect("box")).expect("problem")
}

/// Mission state between the first and second priority levels.
pub fn mission_state() -> DVector<f64> {
    dvector![0.3, 0.05]
}
