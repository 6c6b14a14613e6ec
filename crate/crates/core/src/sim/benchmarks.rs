//! Reference scenarios shared by the acceptance suite, the benches and the
//! bundled scenario files.

use nalgebra::{dvector, DVector};

use super::builtins::{single_integrator_1d, unicycle_linearized};
use super::{Controller, NominalPolicy, Scenario};
use crate::bclf::BclfProblem;
use crate::model::{AxisBox, BarrierSpec, Bound, ControlBox, Objective, PriorityTable, ScalarField, Sense};

/// `h(x) = x` on `[-2, 2]` with gain `k`.
pub fn identity_barrier(k: f64) -> BarrierSpec {
    BarrierSpec::new(
        ScalarField::affine(dvector![1.0], 0.0),
        k,
        AxisBox::symmetric(1, 2.0).expect("box"),
    )
    .expect("positive gain")
}

/// Single integrator, `h = x`, `x0 = 1`, hostile nominal `u = −5`,
/// horizon 10 s, box `[-10, 10]`. The filter saturates immediately and
/// `h(t)` follows `e^{−t/k}`.
pub fn cbf_1d(k: f64, dt: f64) -> Scenario {
    Scenario {
        system: single_integrator_1d(),
        controller: Controller::Cbf(vec![identity_barrier(k)]),
        x0: dvector![1.0],
        dt,
        horizon: 10.0,
        control_box: ControlBox::symmetric(1, 10.0).expect("box"),
        nominal: NominalPolicy::constant(dvector![-5.0]),
        seed: 0,
    }
}

/// [`cbf_1d`] with the nominal control applied unfiltered.
pub fn unfiltered_1d(dt: f64) -> Scenario {
    Scenario {
        controller: Controller::Passthrough(vec![identity_barrier(1.0)]),
        ..cbf_1d(1.0, dt)
    }
}

/// Single integrator with `V = x ≤ 0`, `x0 = −1` and the saturating
/// controller: `b − V` decays as `e^{−t/k}`.
pub fn saturating_1d(k: f64, dt: f64) -> Scenario {
    let problem = BclfProblem::new(
        vec![Objective::le("position", ScalarField::affine(dvector![1.0], 0.0))],
        PriorityTable::single(&[0.0]).expect("table"),
        k,
        1e-2,
    )
    .expect("problem");
    Scenario {
        system: single_integrator_1d(),
        controller: Controller::Saturating(problem),
        x0: dvector![-1.0],
        dt,
        horizon: 10.0,
        control_box: ControlBox::symmetric(1, 10.0).expect("box"),
        nominal: NominalPolicy::constant(dvector![0.0]),
        seed: 0,
    }
}

fn squared_distance(center: [f64; 2]) -> ScalarField {
    let c = DVector::from_column_slice(&center);
    let c2 = c.clone();
    ScalarField::new(2, move |p| (p - &c).norm_squared(), move |p| (p - &c2) * 2.0)
}

/// Three-objective mission on a planar point robot at desk scale (metres):
///
/// | objective                          | CPL 0 | CPL 1  | CPL 2  | CPL 3  |
/// |------------------------------------|-------|--------|--------|--------|
/// | squared clearance to origin `≥`    | −∞    | 0.01   | 0.01   | 0.04   |
/// | squared distance to (0.5, 0) `≤`   | ∞     | ∞      | 0.0025 | 0.0025 |
/// | squared x-offset from 0.5 `≤`      | ∞     | ∞      | ∞      | 1e-4   |
///
/// Starting at (0.15, 0) the robot is at level 1 and climbs 1 → 2 → 3.
pub fn priority_mission(dt: f64) -> Scenario {
    use Bound::{Finite as F, Unbounded as Inf};
    let objectives = vec![
        Objective::ge("clearance", squared_distance([0.0, 0.0])),
        Objective::le("arrival", squared_distance([0.5, 0.0])),
        Objective::le(
            "alignment",
            ScalarField::new(2, |p| (p[0] - 0.5).powi(2), |p| dvector![2.0 * (p[0] - 0.5), 0.0]),
        ),
    ];
    let table = PriorityTable::from_sensed_rows(
        vec![
            vec![Inf, F(0.01), F(0.01), F(0.04)],
            vec![Inf, Inf, F(0.0025), F(0.0025)],
            vec![Inf, Inf, Inf, F(1e-4)],
        ],
        &[Sense::Ge, Sense::Le, Sense::Le],
    )
    .expect("table");
    Scenario {
        system: unicycle_linearized([0.0, 0.0]),
        controller: Controller::Bclf(BclfProblem::new(objectives, table, 1.0, 0.02).expect("problem")),
        x0: dvector![0.15, 0.0],
        dt,
        horizon: 10.0,
        control_box: ControlBox::symmetric(2, 2.0).expect("box"),
        nominal: NominalPolicy::constant(dvector![0.0, 0.0]),
        seed: 0,
    }
}
