//! Fixed-step closed-loop simulation with zero-order-hold control, plus the
//! monitors that read the resulting logs.

pub mod benchmarks;
pub mod builtins;
mod log;
mod monitor;

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::bclf::{bclf_controller, current_priority_level, u_sat_constraints_at_level, BclfProblem, Tier};
use crate::cbf::{cbf_constraint, cbf_filter_detailed, CbfConstraint};
use crate::error::{check_dim, Error, Result};
use crate::model::{BarrierSpec, Bound, ControlAffineSystem, ControlBox, Halfspace};

pub use self::log::{fmt_f64, LevelChange, StepRecord, TrajectoryLog};
pub use monitor::{
    fit_exponential_rate, monitor_cpl, monitor_invariance, CplEvent, CplMonitorReport, ExponentialFit, InvarianceReport,
};

/// Classical fourth-order Runge–Kutta step with `u` held over the step.
pub fn step_rk4(system: &ControlAffineSystem, u: &DVector<f64>, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::config(format!("step size must be positive, got {dt}")));
    }
    let k1 = system.eval_dynamics(x, u)?;
    let k2 = system.eval_dynamics(&(x + &k1 * (0.5 * dt)), u)?;
    let k3 = system.eval_dynamics(&(x + &k2 * (0.5 * dt)), u)?;
    let k4 = system.eval_dynamics(&(x + &k3 * dt), u)?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence(format!("non-finite state {:?}", next.as_slice())));
    }
    Ok(next)
}

type PolicyFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// Nominal control policy `x ↦ u`.
#[derive(Clone)]
pub struct NominalPolicy(Arc<PolicyFn>);

impl NominalPolicy {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        NominalPolicy(Arc::new(f))
    }

    pub fn constant(u: DVector<f64>) -> Self {
        NominalPolicy::new(move |_| u.clone())
    }

    /// `u = −gain (x − target)`; requires `m = n`.
    pub fn proportional(gain: f64, target: DVector<f64>) -> Self {
        NominalPolicy::new(move |x| (x - &target) * -gain)
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.0)(x)
    }
}

impl fmt::Debug for NominalPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NominalPolicy(..)")
    }
}

#[derive(Debug, Clone)]
pub enum Controller {
    /// Min-norm filter over every barrier constraint and the box.
    Cbf(Vec<BarrierSpec>),
    /// Min-norm controller over `U_sat ∩ U_inc ∩ box` with `U_sat` fallback.
    Bclf(BclfProblem),
    /// Minimum-norm control achieving equality in the first finite `U_sat`
    /// row; the box is not applied. Falls back to the nominal control when
    /// the current level has no finite row.
    Saturating(BclfProblem),
    /// Applies the nominal control unchanged while logging the barriers.
    Passthrough(Vec<BarrierSpec>),
}

impl Controller {
    fn gains(&self) -> Vec<f64> {
        match self {
            Controller::Cbf(bs) | Controller::Passthrough(bs) => bs.iter().map(BarrierSpec::k_gain).collect(),
            Controller::Bclf(p) | Controller::Saturating(p) => vec![p.k_gain()],
        }
    }

    fn value_labels(&self) -> Vec<String> {
        match self {
            Controller::Cbf(bs) | Controller::Passthrough(bs) => (1..=bs.len()).map(|i| format!("h_{i}")).collect(),
            Controller::Bclf(p) | Controller::Saturating(p) => {
                (1..=p.objectives.len()).map(|i| format!("V_{i}")).collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: ControlAffineSystem,
    pub controller: Controller,
    pub x0: DVector<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub control_box: ControlBox,
    pub nominal: NominalPolicy,
    pub seed: u64,
}

impl Scenario {
    /// Number of integration steps; the horizon must be a whole number of steps.
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.horizon / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::config(format!(
                "horizon {} is not a whole number of steps of {}",
                self.horizon, self.dt
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.horizon.is_nan() || self.horizon < self.dt {
            return Err(Error::config(format!(
                "horizon {} is shorter than dt {}",
                self.horizon, self.dt
            )));
        }
        for k in self.controller.gains() {
            if self.dt > k / 100.0 {
                return Err(Error::config(format!("dt {} exceeds k/100 = {}", self.dt, k / 100.0)));
            }
        }
        check_dim("initial state", self.system.state_dim(), self.x0.len())?;
        check_dim("control box", self.system.control_dim(), self.control_box.dim())?;
        check_dim(
            "nominal control",
            self.system.control_dim(),
            self.nominal.eval(&self.x0).len(),
        )?;
        match &self.controller {
            Controller::Cbf(bs) | Controller::Passthrough(bs) => {
                if bs.is_empty() {
                    return Err(Error::config("barrier controller needs at least one barrier"));
                }
                for b in bs {
                    check_dim("barrier dimension", self.system.state_dim(), b.h.dim())?;
                }
            }
            Controller::Bclf(p) | Controller::Saturating(p) => {
                for o in &p.objectives {
                    check_dim("objective dimension", self.system.state_dim(), o.field().dim())?;
                }
            }
        }
        self.steps().map(|_| ())
    }
}

/// Which control law produced a logged control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogTier {
    Cbf,
    SatInc,
    SatOnly,
    Saturating,
    Nominal,
}

impl LogTier {
    pub fn as_str(self) -> &'static str {
        match self {
            LogTier::Cbf => "cbf",
            LogTier::SatInc => Tier::SatInc.as_str(),
            LogTier::SatOnly => Tier::SatOnly.as_str(),
            LogTier::Saturating => "saturating",
            LogTier::Nominal => "nominal",
        }
    }
}

impl From<Tier> for LogTier {
    fn from(t: Tier) -> Self {
        match t {
            Tier::SatInc => LogTier::SatInc,
            Tier::SatOnly => LogTier::SatOnly,
        }
    }
}

/// Constraints a controller enforced at one step, kept so their residual can
/// be re-evaluated at the end of the hold interval.
enum Enforced {
    Barriers,
    Rows { level: usize },
    Single { objective: usize, level: usize },
    Nothing,
}

struct Decision {
    u: DVector<f64>,
    tier: LogTier,
    cpl: usize,
    values: Vec<f64>,
    min_residual: f64,
    enforced: Enforced,
}

fn barrier_constraints(
    bs: &[BarrierSpec],
    system: &ControlAffineSystem,
    x: &DVector<f64>,
) -> Result<Vec<CbfConstraint>> {
    bs.iter().map(|b| cbf_constraint(b, system, x)).collect()
}

fn min_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

fn decide(scenario: &Scenario, x: &DVector<f64>) -> Result<Decision> {
    let system = &scenario.system;
    let nominal = scenario.nominal.eval(x);
    match &scenario.controller {
        Controller::Cbf(bs) | Controller::Passthrough(bs) => {
            let cs = barrier_constraints(bs, system, x)?;
            let (u, tier) = if matches!(scenario.controller, Controller::Cbf(_)) {
                (
                    cbf_filter_detailed(&nominal, &cs, &scenario.control_box)?.into_point()?,
                    LogTier::Cbf,
                )
            } else {
                (nominal, LogTier::Nominal)
            };
            let values: Vec<f64> = cs.iter().map(|c| c.h).collect();
            Ok(Decision {
                min_residual: min_of(cs.iter().map(|c| c.residual_at(&u))),
                cpl: usize::from(values.iter().all(|&h| h >= 0.0)),
                values,
                u,
                tier,
                enforced: Enforced::Barriers,
            })
        }
        Controller::Bclf(p) => {
            let step = bclf_controller(p, system, x, &nominal, &scenario.control_box)?;
            Ok(Decision {
                min_residual: step.min_residual(),
                u: step.control.clone(),
                tier: step.tier.into(),
                cpl: step.cpl.level,
                values: step.cpl.values.clone(),
                enforced: Enforced::Rows { level: step.cpl.level },
            })
        }
        Controller::Saturating(p) => {
            let cpl = current_priority_level(p, x)?;
            let rows = u_sat_constraints_at_level(p, system, x, cpl.level)?;
            let Some(row) = rows.first() else {
                return Ok(Decision {
                    u: nominal,
                    tier: LogTier::Saturating,
                    cpl: cpl.level,
                    values: cpl.values,
                    min_residual: f64::INFINITY,
                    enforced: Enforced::Nothing,
                });
            };
            let u = equality_control(&row.halfspace)?;
            Ok(Decision {
                min_residual: row.halfspace.slack(&u),
                u,
                tier: LogTier::Saturating,
                cpl: cpl.level,
                values: cpl.values,
                enforced: Enforced::Single {
                    objective: row.objective,
                    level: cpl.level,
                },
            })
        }
    }
}

/// Minimum-norm `u` with `a·u = c`.
fn equality_control(h: &Halfspace) -> Result<DVector<f64>> {
    let aa = h.normal.norm_squared();
    if aa <= f64::EPSILON {
        return Err(Error::Inconsistent(format!(
            "saturating row {h} does not depend on the control"
        )));
    }
    Ok(&h.normal * (h.offset / aa))
}

/// Residual of the invariance constraints (barrier rows or `U_sat` rows)
/// enforced at step `k`, for the held control, at the state reached at the
/// end of the step.
fn hold_residual(scenario: &Scenario, enforced: &Enforced, x_next: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
    let system = &scenario.system;
    Ok(match (&scenario.controller, enforced) {
        (Controller::Cbf(bs) | Controller::Passthrough(bs), Enforced::Barriers) => min_of(
            barrier_constraints(bs, system, x_next)?
                .iter()
                .map(|c| c.residual_at(u)),
        ),
        (Controller::Bclf(p), Enforced::Rows { level }) => min_of(
            u_sat_constraints_at_level(p, system, x_next, *level)?
                .iter()
                .map(|c| c.halfspace.slack(u)),
        ),
        (Controller::Saturating(p), Enforced::Single { objective, level }) => {
            u_sat_constraints_at_level(p, system, x_next, *level)?
                .iter()
                .find(|c| c.objective == *objective)
                .map_or(f64::INFINITY, |c| c.halfspace.slack(u))
        }
        _ => f64::INFINITY,
    })
}

/// Margin of the invariance condition at `x`: `min h_i` for barriers, and
/// `min_i (b_{i,j0} − V_i)` over the finite rows of the initial level `j0`
/// for priority problems.
fn invariance_margin(controller: &Controller, values: &[f64], initial_level: usize) -> f64 {
    match controller {
        Controller::Cbf(_) | Controller::Passthrough(_) => min_of(values.iter().copied()),
        Controller::Bclf(p) | Controller::Saturating(p) => {
            min_of(
                values
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &v)| match p.table.bound(i, initial_level) {
                        Bound::Finite(b) => Some(b - v),
                        Bound::Unbounded => None,
                    }),
            )
        }
    }
}

/// Result of a rollout; `failure` is set when the run stopped early.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub log: TrajectoryLog,
    pub failure: Option<Error>,
}

/// Closed-loop rollout. The controller is evaluated once per step at the
/// step's initial state and its output held through the RK4 step.
pub fn simulate(scenario: &Scenario) -> Result<SimOutcome> {
    scenario.validate()?;
    let steps = scenario.steps()?;
    let top_level = match &scenario.controller {
        Controller::Cbf(_) | Controller::Passthrough(_) => 1,
        Controller::Bclf(p) | Controller::Saturating(p) => p.top_level(),
    };
    let mut log = TrajectoryLog::new(
        scenario.system.state_dim(),
        scenario.system.control_dim(),
        scenario.controller.value_labels(),
        scenario.dt,
        top_level,
    );
    let mut x = scenario.x0.clone();
    let mut initial_level = None;
    let mut failure = None;

    for k in 0..=steps {
        let t = k as f64 * scenario.dt;
        let decision = match decide(scenario, &x) {
            Ok(d) => d,
            Err(e) => {
                ::log::error!("controller failed at t = {t}: {e}");
                failure = Some(e);
                break;
            }
        };
        let j0 = *initial_level.get_or_insert(decision.cpl);
        log.push(StepRecord {
            t,
            x: x.clone(),
            u: decision.u.clone(),
            margin: invariance_margin(&scenario.controller, &decision.values, j0),
            values: decision.values,
            cpl: decision.cpl,
            tier: decision.tier,
            min_residual: decision.min_residual,
            hold_residual: None,
        });
        if k == steps {
            break;
        }
        let next = match step_rk4(&scenario.system, &decision.u, &x, scenario.dt) {
            Ok(next) => next,
            Err(e) => {
                ::log::error!("integration failed at t = {t}: {e}");
                failure = Some(e);
                break;
            }
        };
        let held = hold_residual(scenario, &decision.enforced, &next, &decision.u)?;
        log.set_last_hold_residual(held);
        x = next;
    }
    Ok(SimOutcome { log, failure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn rk4_examples() {
        let si = builtins::single_integrator_1d();
        assert_eq!(
            step_rk4(&si, &dvector![1.0], &dvector![0.0], 0.1).unwrap(),
            dvector![0.1]
        );
        let decay = ControlAffineSystem::linear(dmatrix![-1.0], dmatrix![1.0]).unwrap();
        let x = step_rk4(&decay, &dvector![0.0], &dvector![1.0], 0.1).unwrap();
        // One RK4 step reproduces the degree-4 Taylor polynomial of e^{-h};
        // the local error h^5/120 ≈ 8.3e-8 bounds the gap to the exact value.
        let h = 0.1f64;
        assert_abs_diff_eq!(
            x[0],
            1.0 - h + h * h / 2.0 - h.powi(3) / 6.0 + h.powi(4) / 24.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(x[0], (-0.1f64).exp(), epsilon = 1e-7);
        assert_eq!(
            step_rk4(&si, &dvector![0.0], &dvector![0.7], 0.1).unwrap(),
            dvector![0.7]
        );
        assert!(step_rk4(&si, &dvector![0.0], &dvector![0.7], 0.0).is_err());
    }

    #[test]
    fn rk4_reports_divergence() {
        let blowup = ControlAffineSystem::new(1, 1, |x| dvector![x[0] * x[0]], |_| dmatrix![0.0]).unwrap();
        let err = step_rk4(&blowup, &dvector![0.0], &dvector![1e200], 1.0).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let decay = ControlAffineSystem::linear(dmatrix![-1.0], dmatrix![1.0]).unwrap();
        let terminal_error = |dt: f64| {
            let mut x = dvector![1.0];
            for _ in 0..(1.0 / dt).round() as usize {
                x = step_rk4(&decay, &dvector![0.0], &x, dt).unwrap();
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = terminal_error(0.1) / terminal_error(0.05);
        assert!(ratio >= 8.0, "ratio {ratio}");
    }

    #[test]
    fn scenario_validation() {
        let mut s = benchmarks::cbf_1d(1.0, 1e-3);
        assert!(s.validate().is_ok());
        s.dt = 0.02;
        assert!(s.validate().is_err(), "dt above k/100");
        s.dt = 1e-3;
        s.horizon = 1e-4;
        assert!(s.validate().is_err());
        s.horizon = 1.00005;
        assert!(s.validate().is_err(), "fractional step count");
        s.horizon = 1.0;
        s.x0 = dvector![1.0, 2.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn log_schema_holds_for_every_controller() {
        let scenarios = [
            benchmarks::cbf_1d(1.0, 1e-3),
            benchmarks::unfiltered_1d(1e-3),
            benchmarks::saturating_1d(1.0, 1e-3),
            benchmarks::priority_mission(1e-3),
        ];
        for mut s in scenarios {
            s.horizon = 0.5;
            let out = simulate(&s).unwrap();
            assert!(out.failure.is_none());
            let log = &out.log;
            assert_eq!(log.records().len(), 501);
            for (k, w) in log.records().windows(2).enumerate() {
                assert!(w[1].t > w[0].t);
                assert_abs_diff_eq!(w[1].t - w[0].t, 1e-3, epsilon = 1e-12);
                assert!(w[0].hold_residual.is_some(), "step {k}");
            }
            assert!(log.records().last().unwrap().hold_residual.is_none());
            for r in log.records() {
                assert_eq!(r.x.len(), s.system.state_dim());
                assert_eq!(r.u.len(), s.system.control_dim());
                assert_eq!(r.values.len(), log.value_labels().len());
            }
        }
    }

    #[test]
    fn saturating_controller_holds_equality() {
        let out = simulate(&benchmarks::saturating_1d(2.0, 1e-3)).unwrap();
        for r in out.log.records() {
            assert_eq!(r.tier, LogTier::Saturating);
            assert!(r.min_residual.abs() <= 1e-9);
        }
    }

    #[test]
    fn infeasible_controller_stops_with_partial_log() {
        // Barrier h = x with k = 0.1 at x0 = -1 needs u >= 10 but the box is [-1, 1].
        let mut s = benchmarks::cbf_1d(0.1, 1e-3);
        s.x0 = dvector![-1.0];
        s.control_box = ControlBox::symmetric(1, 1.0).unwrap();
        let out = simulate(&s).unwrap();
        assert!(matches!(out.failure, Some(Error::Infeasible(_))));
        assert!(out.log.records().is_empty());
    }
}
