//! Sampled check that the barrier set `K_cbf(x)` and the level-preserving set
//! `U_sat(x)` of the reduced single-objective problem (`V = −h`, table
//! `[+∞, 0]`, same `k`) coincide.
//!
//! Two quantities are compared for every sampled `(x, u)`:
//!
//! * residual identity: `L_f h + L_g h·u + h/k` against the slack
//!   `(0 − V)/k − V̇` of the `b = 0` row, which must match to rounding;
//! * boolean membership, excluding pairs within `tol` of either boundary.

use std::io::{self, Write};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::bclf::{current_priority_level, u_sat_constraints_at_level, BclfProblem, DEFAULT_EPSILON};
use crate::cbf::cbf_constraint;
use crate::error::{check_dim, Result};
use crate::model::{BarrierSpec, ControlAffineSystem, ControlBox, Objective, PriorityTable};
use crate::sim::fmt_f64;

/// Single objective `V = −h` with bounds `[+∞, 0]` and the barrier's gain.
pub fn reduce_cbf_to_bclf(barrier: &BarrierSpec) -> BclfProblem {
    let objective = Objective::le("neg_h", barrier.h.negated());
    let table = PriorityTable::single(&[0.0]).expect("static table is well formed");
    BclfProblem::new(vec![objective], table, barrier.k_gain(), DEFAULT_EPSILON).expect("barrier gain is positive")
}

/// How `U_sat` membership is read for states outside the safe set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComparisonMode {
    /// The `b = 0` row is enforced at every state.
    #[default]
    RowActive,
    /// `U_sat` uses the current priority level. Where `h < 0` the level is 0
    /// and `U_sat` is unconstrained; pairs excluded from `K_cbf` there are
    /// counted as asymmetric rather than as disagreements.
    PriorityLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementOptions {
    /// Approximate number of states; rounded up to a full grid.
    pub state_samples: usize,
    /// Approximate number of controls per state; rounded up to a full grid.
    pub control_samples: usize,
    pub tol: f64,
    pub mode: ComparisonMode,
}

impl Default for AgreementOptions {
    fn default() -> Self {
        AgreementOptions {
            state_samples: 100,
            control_samples: 100,
            tol: 1e-9,
            mode: ComparisonMode::RowActive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub cbf_residual: f64,
    pub sat_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgreementReport {
    pub pairs_checked: usize,
    /// Pairs with either residual inside the `±tol` band.
    pub boundary_excluded: usize,
    /// Pairs outside the safe set where only `K_cbf` constrains the control.
    pub asymmetric_pairs: usize,
    pub disagreements: Vec<PairRecord>,
    pub max_identity_error: f64,
}

impl AgreementReport {
    pub fn pass(&self) -> bool {
        self.disagreements.is_empty()
    }

    /// Identity holds when the residuals match to `tol` at every pair,
    /// relative to `max(1, |residual|)`.
    pub fn identity_holds(&self, tol: f64) -> bool {
        self.max_identity_error <= tol
    }

    fn merge(mut self, other: AgreementReport) -> AgreementReport {
        self.pairs_checked += other.pairs_checked;
        self.boundary_excluded += other.boundary_excluded;
        self.asymmetric_pairs += other.asymmetric_pairs;
        self.disagreements.extend(other.disagreements);
        self.max_identity_error = self.max_identity_error.max(other.max_identity_error);
        self
    }

    pub fn summary(&self) -> String {
        format!(
            "pairs_checked: {}\nboundary_excluded: {}\nasymmetric_pairs: {}\ndisagreements: {}\nmax_identity_error: {}\nverdict: {}\n",
            self.pairs_checked,
            self.boundary_excluded,
            self.asymmetric_pairs,
            self.disagreements.len(),
            fmt_f64(self.max_identity_error),
            if self.pass() { "PASS" } else { "FAIL" },
        )
    }

    /// One row per disagreement: `x_1..x_n,u_1..u_m,cbf_residual,sat_slack`.
    pub fn write_csv<W: Write>(&self, mut w: W, state_dim: usize, control_dim: usize) -> io::Result<()> {
        let mut header: Vec<String> = (1..=state_dim).map(|i| format!("x_{i}")).collect();
        header.extend((1..=control_dim).map(|i| format!("u_{i}")));
        header.push("cbf_residual".into());
        header.push("sat_slack".into());
        writeln!(w, "{}", header.join(","))?;
        for d in &self.disagreements {
            let mut row: Vec<String> = d.x.iter().chain(d.u.iter()).map(|&v| fmt_f64(v)).collect();
            row.push(fmt_f64(d.cbf_residual));
            row.push(fmt_f64(d.sat_slack));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn per_axis(total: usize, dims: usize) -> usize {
    let mut p = 1usize;
    while p.checked_pow(dims as u32).is_some_and(|v| v < total) {
        p += 1;
    }
    p
}

/// [`sets_agree_with`] against the reduction of `barrier` itself.
pub fn sets_agree(
    barrier: &BarrierSpec,
    system: &ControlAffineSystem,
    cbox: &ControlBox,
    opts: &AgreementOptions,
) -> Result<AgreementReport> {
    sets_agree_with(barrier, &reduce_cbf_to_bclf(barrier), system, cbox, opts)
}

/// Compares `K_cbf` of `barrier` with `U_sat` of `reduced`, which must be a
/// single-objective problem with a level-1 row.
pub fn sets_agree_with(
    barrier: &BarrierSpec,
    reduced: &BclfProblem,
    system: &ControlAffineSystem,
    cbox: &ControlBox,
    opts: &AgreementOptions,
) -> Result<AgreementReport> {
    check_dim("control box", system.control_dim(), cbox.dim())?;
    check_dim("barrier domain", system.state_dim(), barrier.domain.dim())?;
    check_dim("reduced objectives", 1, reduced.objectives.len())?;
    let states = barrier.domain.grid(per_axis(opts.state_samples, system.state_dim()));
    let controls = cbox.grid(per_axis(opts.control_samples, system.control_dim()));
    let tol = opts.tol;

    let partials: Vec<Result<AgreementReport>> = states
        .par_iter()
        .map(|x| {
            let mut part = AgreementReport::default();
            let kcbf = cbf_constraint(barrier, system, x)?;
            let row = u_sat_constraints_at_level(reduced, system, x, 1)?;
            let row = &row.first().expect("level-1 bound is finite").halfspace;
            let level = current_priority_level(reduced, x)?.level;
            let row_active = opts.mode == ComparisonMode::RowActive || level >= 1;
            for u in &controls {
                part.pairs_checked += 1;
                let r = kcbf.residual_at(u);
                let s = row.slack(u);
                part.max_identity_error = part.max_identity_error.max((r - s).abs() / r.abs().max(1.0));
                let in_k = r >= -tol;
                if !row_active {
                    if !in_k {
                        part.asymmetric_pairs += 1;
                    }
                    continue;
                }
                if r.abs() < tol || s.abs() < tol {
                    part.boundary_excluded += 1;
                    continue;
                }
                if in_k != (s >= -tol) {
                    part.disagreements.push(PairRecord {
                        x: x.clone(),
                        u: u.clone(),
                        cbf_residual: r,
                        sat_slack: s,
                    });
                }
            }
            Ok(part)
        })
        .collect();

    partials
        .into_iter()
        .try_fold(AgreementReport::default(), |acc, p| Ok(acc.merge(p?)))
}
