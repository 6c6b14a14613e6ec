//! Priority-level control sets: current priority level, the
//! level-preserving set `U_sat`, the focus set `I_next`, the level-raising
//! set `U_inc`, a sampling validity checker and a min-norm controller.
//!
//! Objectives and bounds are in canonical `≤` sense throughout.

use std::fmt;

use log::warn;
use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::model::{Bound, ControlAffineSystem, ControlBox, Halfspace, Objective, PriorityTable, StateBox};
use crate::solver::{solve_min_norm, MinNormProblem, SolveResult};
use crate::validity::{sample_states, SamplingOptions, ValidityReport};

pub const DEFAULT_K_GAIN: f64 = 1.0;
pub const DEFAULT_EPSILON: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct BclfProblem {
    pub objectives: Vec<Objective>,
    pub table: PriorityTable,
    k_gain: f64,
    epsilon: f64,
}

impl BclfProblem {
    pub fn new(objectives: Vec<Objective>, table: PriorityTable, k_gain: f64, epsilon: f64) -> Result<Self> {
        if objectives.len() != table.objective_count() {
            return Err(Error::config(format!(
                "{} objectives but the priority table has {} rows",
                objectives.len(),
                table.objective_count()
            )));
        }
        if let Some(o) = objectives.windows(2).find(|w| w[0].field().dim() != w[1].field().dim()) {
            return Err(Error::config(format!(
                "objective '{}' has a different state dimension",
                o[1].label
            )));
        }
        if !(k_gain > 0.0 && k_gain.is_finite()) {
            return Err(Error::config(format!("k must be positive, got {k_gain}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(BclfProblem {
            objectives,
            table,
            k_gain,
            epsilon,
        })
    }

    pub fn k_gain(&self) -> f64 {
        self.k_gain
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn top_level(&self) -> usize {
        self.table.top_level()
    }

    pub fn values(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        self.objectives
            .iter()
            .map(|o| {
                check_dim("state", o.field().dim(), x.len())?;
                Ok(o.value(x))
            })
            .collect()
    }
}

/// Current priority level at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct CplReport {
    pub level: usize,
    /// `V_i(x) ≤ b_{i,level}` per objective (all true by construction).
    pub satisfied: Vec<bool>,
    pub values: Vec<f64>,
}

/// Largest column whose bounds all admit `values`. Column 0 always does.
pub fn cpl_from_values(table: &PriorityTable, values: &[f64]) -> usize {
    (0..=table.top_level())
        .rev()
        .find(|&j| table.column_admits(j, values))
        .unwrap_or(0)
}

pub fn current_priority_level(problem: &BclfProblem, x: &DVector<f64>) -> Result<CplReport> {
    let values = problem.values(x)?;
    let level = cpl_from_values(&problem.table, &values);
    let satisfied = values
        .iter()
        .enumerate()
        .map(|(i, &v)| problem.table.bound(i, level).admits(v))
        .collect();
    Ok(CplReport {
        level,
        satisfied,
        values,
    })
}

/// A control constraint derived from one objective.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveConstraint {
    pub objective: usize,
    pub halfspace: Halfspace,
    /// `∇V_i·f(x)`, the control-free part of `V̇_i`.
    pub drift_rate: f64,
}

impl ObjectiveConstraint {
    /// `V̇_i(x, u)`.
    pub fn rate(&self, u: &DVector<f64>) -> f64 {
        self.drift_rate + self.halfspace.normal.dot(u)
    }
}

fn rate_terms(obj: &Objective, system: &ControlAffineSystem, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let dv = obj.field().checked_gradient(x)?;
    let lie = system.lie_derivatives_at(&dv, x)?;
    Ok((lie.lf, lie.lg))
}

/// `U_sat` rows at an explicit level: `∇V_i·f + (∇V_iᵀg)·u ≤ (b_ij − V_i)/k`.
/// Rows whose bound is unbounded are omitted.
pub fn u_sat_constraints_at_level(
    problem: &BclfProblem,
    system: &ControlAffineSystem,
    x: &DVector<f64>,
    level: usize,
) -> Result<Vec<ObjectiveConstraint>> {
    if level > problem.top_level() {
        return Err(Error::config(format!(
            "level {level} exceeds top level {}",
            problem.top_level()
        )));
    }
    let mut out = Vec::new();
    for (i, obj) in problem.objectives.iter().enumerate() {
        let Bound::Finite(b) = problem.table.bound(i, level) else {
            continue;
        };
        let (drift_rate, normal) = rate_terms(obj, system, x)?;
        let rhs = (b - obj.value(x)) / problem.k_gain;
        out.push(ObjectiveConstraint {
            objective: i,
            halfspace: Halfspace::le(normal, rhs - drift_rate),
            drift_rate,
        });
    }
    Ok(out)
}

/// `U_sat(x)` at the current priority level.
pub fn u_sat_constraints(
    problem: &BclfProblem,
    system: &ControlAffineSystem,
    x: &DVector<f64>,
) -> Result<Vec<ObjectiveConstraint>> {
    let level = current_priority_level(problem, x)?.level;
    u_sat_constraints_at_level(problem, system, x, level)
}

pub fn in_u_sat(
    problem: &BclfProblem,
    system: &ControlAffineSystem,
    x: &DVector<f64>,
    u: &DVector<f64>,
    tol: f64,
) -> Result<bool> {
    check_dim("control", system.control_dim(), u.len())?;
    Ok(u_sat_constraints(problem, system, x)?
        .iter()
        .all(|c| c.halfspace.contains(u, tol)))
}

/// `{i : V_i ≥ b_{i,level+1}}`, empty at the top level.
///
/// Below the top level the set cannot be empty, otherwise `level + 1` would
/// have been the priority level; that case is reported as an inconsistency.
pub fn i_next_from_values(table: &PriorityTable, values: &[f64], level: usize) -> Result<Vec<usize>> {
    if level >= table.top_level() {
        return Ok(Vec::new());
    }
    let next: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|&(i, &v)| match table.bound(i, level + 1) {
            Bound::Unbounded => false,
            Bound::Finite(b) => v >= b,
        })
        .map(|(i, _)| i)
        .collect();
    if next.is_empty() {
        return Err(Error::Inconsistent(format!(
            "every bound of level {} holds, so level {level} is not the priority level",
            level + 1
        )));
    }
    Ok(next)
}

pub fn i_next(problem: &BclfProblem, x: &DVector<f64>) -> Result<Vec<usize>> {
    let cpl = current_priority_level(problem, x)?;
    i_next_from_values(&problem.table, &cpl.values, cpl.level)
}

/// `U_inc(x)`: `∇V_i·f + (∇V_iᵀg)·u ≤ −ε` for every `i ∈ I_next(x)`.
/// A row with vanishing `∇V_iᵀg` and `∇V_i·f > −ε` is unsatisfiable; such
/// rows are kept and show up through [`Halfspace::degeneracy`].
pub fn u_inc_constraints(
    problem: &BclfProblem,
    system: &ControlAffineSystem,
    x: &DVector<f64>,
) -> Result<Vec<ObjectiveConstraint>> {
    let mut out = Vec::new();
    for i in i_next(problem, x)? {
        let (drift_rate, normal) = rate_terms(&problem.objectives[i], system, x)?;
        out.push(ObjectiveConstraint {
            objective: i,
            halfspace: Halfspace::le(normal, -problem.epsilon - drift_rate),
            drift_rate,
        });
    }
    Ok(out)
}

/// General dynamics `f(x, u)`.
pub type DynamicsFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Sync;

/// Dynamics accepted by [`is_bclf`]: control-affine, or a general `f(x, u)`.
#[derive(Clone, Copy)]
pub enum Dynamics<'a> {
    Affine(&'a ControlAffineSystem),
    General {
        state_dim: usize,
        control_dim: usize,
        f: &'a DynamicsFn,
    },
}

impl Dynamics<'_> {
    fn dims(&self) -> (usize, usize) {
        match self {
            Dynamics::Affine(s) => (s.state_dim(), s.control_dim()),
            Dynamics::General {
                state_dim, control_dim, ..
            } => (*state_dim, *control_dim),
        }
    }
}

/// Checks `min_{u ∈ box} ∇V·f(x, u) ≤ −ε` on sampled states of
/// `{V ≥ b} ∩ domain` (canonical sense). The minimum is exact at a box
/// vertex for affine dynamics and taken over a control grid otherwise.
/// An empty sampled region is a vacuous pass.
pub fn is_bclf(
    objective: &Objective,
    dynamics: Dynamics<'_>,
    cbox: &ControlBox,
    domain: &StateBox,
    bound: f64,
    epsilon: f64,
    opts: &SamplingOptions,
) -> Result<ValidityReport> {
    let (n, m) = dynamics.dims();
    check_dim("control box", m, cbox.dim())?;
    check_dim("state domain", n, domain.dim())?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::config(format!("epsilon must be positive, got {epsilon}")));
    }
    let control_grid = match dynamics {
        Dynamics::Affine(_) => Vec::new(),
        Dynamics::General { .. } => cbox.grid(opts.control_grid),
    };
    let mut margins = Vec::new();
    for x in sample_states(domain, objective.field(), bound, opts) {
        if objective.value(&x) < bound {
            continue;
        }
        let dv = objective.field().checked_gradient(&x)?;
        let min_rate = match dynamics {
            Dynamics::Affine(sys) => {
                let lie = sys.lie_derivatives_at(&dv, &x)?;
                lie.rate(&cbox.minimizing_vertex(&lie.lg))
            }
            Dynamics::General { f, .. } => control_grid
                .iter()
                .map(|u| {
                    let xdot = f(&x, u);
                    check_dim("dynamics output", n, xdot.len()).map(|_| dv.dot(&xdot))
                })
                .try_fold(f64::INFINITY, |acc, r| r.map(|r| acc.min(r)))?,
        };
        margins.push((x, -epsilon - min_rate));
    }
    let report = ValidityReport::from_margins(margins, opts.tol);
    if report.vacuous {
        warn!(
            "objective '{}': no sampled state has V >= {bound}; validity holds vacuously",
            objective.label
        );
    }
    Ok(report)
}

/// Which constraint family the controller satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    /// `U_sat ∩ U_inc ∩ box`.
    SatInc,
    /// `U_inc` dropped after `U_sat ∩ U_inc ∩ box` proved empty.
    SatOnly,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::SatInc => "sat+inc",
            Tier::SatOnly => "sat-only",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct BclfStep {
    pub control: DVector<f64>,
    pub tier: Tier,
    pub cpl: CplReport,
    pub sat: Vec<ObjectiveConstraint>,
    /// Empty when `tier` is [`Tier::SatOnly`].
    pub inc: Vec<ObjectiveConstraint>,
    pub solve: SolveResult,
}

impl BclfStep {
    /// Smallest slack of the enforced constraints at the chosen control.
    pub fn min_residual(&self) -> f64 {
        self.sat
            .iter()
            .chain(&self.inc)
            .map(|c| c.halfspace.slack(&self.control))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Closest control to `nominal` in `U_sat ∩ U_inc ∩ box`, falling back to
/// `U_sat ∩ box` when the level-raising rows make the set empty.
pub fn bclf_controller(
    problem: &BclfProblem,
    system: &ControlAffineSystem,
    x: &DVector<f64>,
    nominal: &DVector<f64>,
    cbox: &ControlBox,
) -> Result<BclfStep> {
    let cpl = current_priority_level(problem, x)?;
    let sat = u_sat_constraints_at_level(problem, system, x, cpl.level)?;
    let inc = u_inc_constraints(problem, system, x)?;

    let halfspaces: Vec<Halfspace> = sat.iter().chain(&inc).map(|c| c.halfspace.clone()).collect();
    let full = solve_min_norm(&MinNormProblem::new(nominal.clone(), halfspaces, cbox.clone())?)?;
    if full.is_optimal() {
        return Ok(BclfStep {
            control: full.point.clone().expect("optimal result has a point"),
            tier: Tier::SatInc,
            cpl,
            sat,
            inc,
            solve: full,
        });
    }

    let halfspaces: Vec<Halfspace> = sat.iter().map(|c| c.halfspace.clone()).collect();
    let fallback = solve_min_norm(&MinNormProblem::new(nominal.clone(), halfspaces, cbox.clone())?)?;
    let control = fallback.clone().into_point()?;
    Ok(BclfStep {
        control,
        tier: Tier::SatOnly,
        cpl,
        sat,
        inc: Vec::new(),
        solve: fallback,
    })
}
