//! Barrier-function admissible set `K_cbf(x) = {u ∈ U : L_f h + L_g h·u + h/k ≥ 0}`.

use log::warn;
use nalgebra::DVector;

use crate::error::{check_dim, Result};
use crate::model::{BarrierSpec, ControlAffineSystem, ControlBox, Halfspace, LieDerivatives};
use crate::solver::{solve_min_norm, MinNormProblem, SolveResult};
use crate::validity::{sample_states, SamplingOptions, ValidityReport};

pub const DEFAULT_TOL: f64 = 1e-9;

/// The barrier condition at one state, as a `≥` halfspace in `u`:
/// `L_g h·u ≥ −(L_f h + h/k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CbfConstraint {
    pub halfspace: Halfspace,
    pub lie: LieDerivatives,
    /// `h(x)`.
    pub h: f64,
    /// `α(h(x)) = h(x)/k`.
    pub alpha_h: f64,
}

impl CbfConstraint {
    /// `L_f h + L_g h·u + α(h)`; nonnegative exactly on `K_cbf(x)`.
    pub fn residual_at(&self, u: &DVector<f64>) -> f64 {
        self.lie.lf + self.lie.lg.dot(u) + self.alpha_h
    }

    /// `ḣ = L_f h + L_g h·u`.
    pub fn h_dot(&self, u: &DVector<f64>) -> f64 {
        self.lie.rate(u)
    }
}

pub fn cbf_constraint(barrier: &BarrierSpec, system: &ControlAffineSystem, x: &DVector<f64>) -> Result<CbfConstraint> {
    let dh = barrier.h.checked_gradient(x)?;
    let h = barrier.h.value(x);
    if h.abs() < 1e-3 && dh.norm() < 1e-6 {
        warn!(
            "barrier gradient vanishes near the safe-set boundary at x = {:?}",
            x.as_slice()
        );
    }
    let lie = system.lie_derivatives_at(&dh, x)?;
    let alpha_h = barrier.alpha(h);
    let halfspace = Halfspace::ge(lie.lg.clone(), -(lie.lf + alpha_h));
    Ok(CbfConstraint {
        halfspace,
        lie,
        h,
        alpha_h,
    })
}

/// Whether `u ∈ K_cbf(x)` with residual tolerance `tol`.
pub fn in_k_cbf(
    barrier: &BarrierSpec,
    system: &ControlAffineSystem,
    x: &DVector<f64>,
    u: &DVector<f64>,
    tol: f64,
) -> Result<bool> {
    check_dim("control", system.control_dim(), u.len())?;
    Ok(cbf_constraint(barrier, system, x)?.residual_at(u) >= -tol)
}

/// Checks `sup_{u ∈ box} [L_f h + L_g h·u] ≥ −h/k` on sampled states of the
/// barrier domain. The supremum of the affine residual is taken exactly at
/// the box vertex selected by the sign of `L_g h`. States are a uniform grid
/// plus random points projected onto `h = 0`.
pub fn is_cbf(
    barrier: &BarrierSpec,
    system: &ControlAffineSystem,
    cbox: &ControlBox,
    opts: &SamplingOptions,
) -> Result<ValidityReport> {
    check_dim("control box", system.control_dim(), cbox.dim())?;
    check_dim("barrier domain", system.state_dim(), barrier.domain.dim())?;
    let states = sample_states(&barrier.domain, &barrier.h, 0.0, opts);
    let mut margins = Vec::with_capacity(states.len());
    for x in states {
        let c = cbf_constraint(barrier, system, &x)?;
        let best = cbox.maximizing_vertex(&c.lie.lg);
        margins.push((x, c.residual_at(&best)));
    }
    Ok(ValidityReport::from_margins(margins, opts.tol))
}

/// Closest control to `nominal` satisfying every barrier constraint and the
/// box. Returns `nominal` untouched when it is already admissible.
pub fn cbf_filter(nominal: &DVector<f64>, constraints: &[CbfConstraint], cbox: &ControlBox) -> Result<DVector<f64>> {
    let res = cbf_filter_detailed(nominal, constraints, cbox)?;
    res.into_point()
}

/// [`cbf_filter`] returning the full solver result.
pub fn cbf_filter_detailed(
    nominal: &DVector<f64>,
    constraints: &[CbfConstraint],
    cbox: &ControlBox,
) -> Result<SolveResult> {
    let halfspaces = constraints.iter().map(|c| c.halfspace.clone()).collect();
    let problem = MinNormProblem::new(nominal.clone(), halfspaces, cbox.clone())?;
    solve_min_norm(&problem)
}
