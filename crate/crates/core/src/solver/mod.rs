//! Dense min-norm projection onto an intersection of halfspaces and a box.
//!
//! Minimizes `½‖u − target‖²` with a dual active-set iteration (Goldfarb and
//! Idnani, specialised to an identity Hessian). The iteration starts from the
//! unconstrained minimizer and adds the most violated constraint until the
//! point is primal feasible, so no phase-1 point is required. When a violated
//! constraint is linearly dependent on the active set with nonpositive dual
//! direction, the active set plus that constraint is returned as the
//! infeasibility certificate.
//!
//! Constraint order is halfspaces in input order, then for each box axis the
//! upper and lower faces. Ties are broken by that order.

mod oracle;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::model::{ControlBox, Degeneracy, Halfspace};

pub use oracle::{oracle_min_norm, oracle_min_norm_enumerated};

/// Rows whose normalized violation exceeds this are added to the active set.
const ADD_TOL: f64 = 1e-13;
/// A projected direction shorter than this (unit normals) is treated as zero.
const DEPENDENT_TOL: f64 = 1e-10;

/// Identifies one constraint of a [`MinNormProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintRef {
    Halfspace(usize),
    BoxUpper(usize),
    BoxLower(usize),
}

impl fmt::Display for ConstraintRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintRef::Halfspace(i) => write!(f, "halfspace[{i}]"),
            ConstraintRef::BoxUpper(i) => write!(f, "u[{i}] <= upper"),
            ConstraintRef::BoxLower(i) => write!(f, "u[{i}] >= lower"),
        }
    }
}

/// A set of constraints that cannot hold simultaneously.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub constraints: Vec<ConstraintRef>,
    /// Human-readable constraint forms, aligned with `constraints`.
    pub rendered: Vec<String>,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (c, r)) in self.constraints.iter().zip(&self.rendered).enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{c}: {r}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone)]
pub struct MinNormProblem {
    pub target: DVector<f64>,
    pub halfspaces: Vec<Halfspace>,
    pub cbox: ControlBox,
}

impl MinNormProblem {
    pub fn new(target: DVector<f64>, halfspaces: Vec<Halfspace>, cbox: ControlBox) -> Result<Self> {
        check_dim("min-norm target", cbox.dim(), target.len())?;
        for h in &halfspaces {
            check_dim("halfspace normal", cbox.dim(), h.dim())?;
            if !h.is_finite() {
                return Err(Error::config(format!("non-finite halfspace {h}")));
            }
        }
        if target.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("non-finite min-norm target"));
        }
        Ok(MinNormProblem {
            target,
            halfspaces,
            cbox,
        })
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    /// Every constraint in solver order as `(ref, a, c)` meaning `a·u ≥ c`.
    pub fn ge_rows(&self) -> Vec<(ConstraintRef, DVector<f64>, f64)> {
        let m = self.dim();
        let mut rows = Vec::with_capacity(self.halfspaces.len() + 2 * m);
        for (i, h) in self.halfspaces.iter().enumerate() {
            let (a, c) = h.to_ge();
            rows.push((ConstraintRef::Halfspace(i), a, c));
        }
        for i in 0..m {
            let e = DVector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 });
            rows.push((ConstraintRef::BoxUpper(i), -&e, -self.cbox.upper()[i]));
            rows.push((ConstraintRef::BoxLower(i), e, self.cbox.lower()[i]));
        }
        rows
    }

    /// Largest constraint violation of `u`, including box faces.
    pub fn max_violation(&self, u: &DVector<f64>) -> f64 {
        self.ge_rows()
            .iter()
            .map(|(_, a, c)| (c - a.dot(u)).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn render(&self, c: ConstraintRef) -> String {
        match c {
            ConstraintRef::Halfspace(i) => self.halfspaces[i].to_string(),
            ConstraintRef::BoxUpper(i) => format!("u[{i}] <= {}", self.cbox.upper()[i]),
            ConstraintRef::BoxLower(i) => format!("u[{i}] >= {}", self.cbox.lower()[i]),
        }
    }

    fn certificate(&self, mut constraints: Vec<ConstraintRef>) -> Certificate {
        constraints.sort();
        constraints.dedup();
        let rendered = constraints.iter().map(|&c| self.render(c)).collect();
        Certificate { constraints, rendered }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub point: Option<DVector<f64>>,
    /// Constraints in the final working set.
    pub active_set: Vec<ConstraintRef>,
    /// Multipliers of `active_set` for the `a·u ≥ c` forms returned by
    /// [`MinNormProblem::ge_rows`]: `u − target = Σ λ_k a_k`, `λ_k ≥ 0`.
    pub multipliers: Vec<f64>,
    pub max_violation: f64,
    pub certificate: Option<Certificate>,
    pub iterations: usize,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// The optimal point, or the infeasibility certificate as an error.
    pub fn into_point(self) -> Result<DVector<f64>> {
        match (self.status, self.point, self.certificate) {
            (SolveStatus::Optimal, Some(p), _) => Ok(p),
            (_, _, Some(c)) => Err(Error::Infeasible(c)),
            _ => Err(Error::Inconsistent(
                "solver returned neither a point nor a certificate".into(),
            )),
        }
    }
}

struct Row {
    source: ConstraintRef,
    normal: DVector<f64>,
    offset: f64,
    scale: f64,
}

/// Exact minimizer of `‖u − target‖²` over the halfspaces and box.
pub fn solve_min_norm(problem: &MinNormProblem) -> Result<SolveResult> {
    let m = problem.dim();
    let mut rows: Vec<Row> = Vec::new();
    for (source, a, c) in problem.ge_rows() {
        if let ConstraintRef::Halfspace(i) = source {
            match problem.halfspaces[i].degeneracy() {
                Some(Degeneracy::AlwaysSatisfied) => continue,
                Some(Degeneracy::Unsatisfiable) => {
                    return Ok(infeasible(problem, vec![source], 0));
                }
                None => {}
            }
        }
        let scale = a.norm();
        rows.push(Row {
            source,
            normal: a / scale,
            offset: c / scale,
            scale,
        });
    }

    let mut u = problem.target.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut lambda: Vec<f64> = Vec::new();
    let max_iter = 100 * (rows.len() + 1);
    let mut iterations = 0usize;

    loop {
        // Most violated inactive row; first in order on ties.
        let mut pick: Option<(usize, f64)> = None;
        for (k, row) in rows.iter().enumerate() {
            if active.contains(&k) {
                continue;
            }
            let s = row.normal.dot(&u) - row.offset;
            if s < -ADD_TOL * (1.0 + row.offset.abs()) && pick.is_none_or(|(_, best)| s < best) {
                pick = Some((k, s));
            }
        }
        let Some((p, _)) = pick else {
            break;
        };
        let mut lambda_p = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::Inconsistent(format!(
                    "active-set iteration did not terminate after {max_iter} steps"
                )));
            }
            let np = &rows[p].normal;
            let (z, r) = project_out(&rows, &active, np, m);
            let blocking = r
                .iter()
                .enumerate()
                .filter(|(_, &rj)| rj > 0.0)
                .map(|(j, &rj)| (j, lambda[j] / rj))
                .fold(None, |acc: Option<(usize, f64)>, (j, t)| match acc {
                    Some((_, best)) if best <= t => acc,
                    _ => Some((j, t)),
                });

            if z.norm() <= DEPENDENT_TOL {
                let Some((j, t1)) = blocking else {
                    let mut cert: Vec<ConstraintRef> = active.iter().map(|&k| rows[k].source).collect();
                    cert.push(rows[p].source);
                    return Ok(infeasible(problem, cert, iterations));
                };
                for (l, rl) in lambda.iter_mut().zip(&r) {
                    *l -= t1 * rl;
                }
                lambda_p += t1;
                active.remove(j);
                lambda.remove(j);
                continue;
            }

            let s_p = np.dot(&u) - rows[p].offset;
            let t2 = -s_p / z.dot(np);
            let full = blocking.is_none_or(|(_, t1)| t2 <= t1);
            let t = if full { t2 } else { blocking.unwrap().1 };
            u.axpy(t, &z, 1.0);
            for (l, rl) in lambda.iter_mut().zip(&r) {
                *l -= t * rl;
            }
            lambda_p += t;
            if full {
                active.push(p);
                lambda.push(lambda_p);
                break;
            }
            let (j, _) = blocking.unwrap();
            active.remove(j);
            lambda.remove(j);
        }
    }

    let active_set = active.iter().map(|&k| rows[k].source).collect();
    let multipliers = active
        .iter()
        .zip(&lambda)
        .map(|(&k, &l)| l.max(0.0) / rows[k].scale)
        .collect();
    let max_violation = problem.max_violation(&u);
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        point: Some(u),
        active_set,
        multipliers,
        max_violation,
        certificate: None,
        iterations,
    })
}

/// `z = (I − N(NᵀN)⁻¹Nᵀ) n` and `r = (NᵀN)⁻¹Nᵀ n` for the active normals `N`.
fn project_out(rows: &[Row], active: &[usize], n: &DVector<f64>, m: usize) -> (DVector<f64>, Vec<f64>) {
    if active.is_empty() {
        return (n.clone(), Vec::new());
    }
    let basis = DMatrix::from_fn(m, active.len(), |i, j| rows[active[j]].normal[i]);
    let gram = basis.tr_mul(&basis);
    let rhs = basis.tr_mul(n);
    let r = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .pseudo_inverse(1e-14)
            .map(|pinv| pinv * &rhs)
            .unwrap_or_else(|_| DVector::zeros(active.len())),
    };
    let z = n - &basis * &r;
    (z, r.iter().copied().collect())
}

fn infeasible(problem: &MinNormProblem, cert: Vec<ConstraintRef>, iterations: usize) -> SolveResult {
    SolveResult {
        status: SolveStatus::Infeasible,
        point: None,
        active_set: Vec::new(),
        multipliers: Vec::new(),
        max_violation: f64::INFINITY,
        certificate: Some(problem.certificate(cert)),
        iterations,
    }
}

/// Emptiness test for a halfspace intersection within a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<DVector<f64>>,
    pub certificate: Option<Certificate>,
}

/// Projects the box center onto the region; feasible iff that succeeds.
pub fn feasible(halfspaces: &[Halfspace], cbox: &ControlBox) -> Result<Feasibility> {
    let problem = MinNormProblem::new(cbox.center(), halfspaces.to_vec(), cbox.clone())?;
    let res = solve_min_norm(&problem)?;
    Ok(Feasibility {
        feasible: res.is_optimal(),
        witness: res.point,
        certificate: res.certificate,
    })
}

/// Stationarity residual `‖(u − target) − Σ λ_k a_k‖∞` of an optimal result.
pub fn stationarity_residual(problem: &MinNormProblem, result: &SolveResult) -> Option<f64> {
    let u = result.point.as_ref()?;
    let rows = problem.ge_rows();
    let mut r = u - &problem.target;
    for (c, l) in result.active_set.iter().zip(&result.multipliers) {
        let (_, a, _) = rows.iter().find(|(s, _, _)| s == c)?;
        r.axpy(-l, a, 1.0);
    }
    Some(r.amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    fn problem(target: DVector<f64>, hs: Vec<Halfspace>, r: f64) -> MinNormProblem {
        let m = target.len();
        MinNormProblem::new(target, hs, ControlBox::symmetric(m, r).unwrap()).unwrap()
    }

    #[test]
    fn interior_target_is_returned() {
        let p = problem(dvector![0.2, -0.3], vec![Halfspace::ge(dvector![1.0, 0.0], -1.0)], 2.0);
        let res = solve_min_norm(&p).unwrap();
        assert_eq!(res.point.unwrap(), dvector![0.2, -0.3]);
        assert!(res.active_set.is_empty());
    }

    #[test]
    fn halfspace_projection() {
        let p = problem(dvector![0.0, 0.0], vec![Halfspace::ge(dvector![1.0, 1.0], 1.0)], 2.0);
        let res = solve_min_norm(&p).unwrap();
        let u = res.point.clone().unwrap();
        assert_abs_diff_eq!(u[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(u[1], 0.5, epsilon = 1e-12);
        assert_eq!(res.active_set, vec![ConstraintRef::Halfspace(0)]);
        assert_abs_diff_eq!(res.multipliers[0], 0.5, epsilon = 1e-12);
        assert!(stationarity_residual(&p, &res).unwrap() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let p = problem(
            dvector![0.0],
            vec![Halfspace::ge(dvector![1.0], 1.0), Halfspace::le(dvector![1.0], -1.0)],
            5.0,
        );
        let res = solve_min_norm(&p).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
        let cert = res.certificate.clone().unwrap();
        assert_eq!(
            cert.constraints,
            vec![ConstraintRef::Halfspace(0), ConstraintRef::Halfspace(1)]
        );
        assert!(matches!(res.into_point(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn box_participates_in_certificate() {
        let p = problem(dvector![0.0], vec![Halfspace::ge(dvector![1.0], 3.0)], 2.0);
        let res = solve_min_norm(&p).unwrap();
        let cert = res.certificate.unwrap();
        assert!(cert.constraints.contains(&ConstraintRef::Halfspace(0)));
        assert!(cert.constraints.contains(&ConstraintRef::BoxUpper(0)));
    }

    #[test]
    fn degenerate_rows() {
        let ok = problem(dvector![1.0], vec![Halfspace::le(dvector![0.0], 1.0)], 2.0);
        assert_eq!(solve_min_norm(&ok).unwrap().point.unwrap(), dvector![1.0]);
        let bad = problem(dvector![1.0], vec![Halfspace::le(dvector![0.0], -0.1)], 2.0);
        let res = solve_min_norm(&bad).unwrap();
        assert_eq!(res.certificate.unwrap().constraints, vec![ConstraintRef::Halfspace(0)]);
    }

    #[test]
    fn corner_of_box_and_halfspace() {
        // Project (3, 3) onto u1 + 2u2 <= 2 within [-1, 1]^2.
        let p = problem(dvector![3.0, 3.0], vec![Halfspace::le(dvector![1.0, 2.0], 2.0)], 1.0);
        let res = solve_min_norm(&p).unwrap();
        let u = res.point.clone().unwrap();
        assert_abs_diff_eq!(u[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u[1], 0.5, epsilon = 1e-12);
        assert!(res.max_violation <= 1e-12);
        assert!(res.multipliers.iter().all(|&l| l >= 0.0));
        assert!(stationarity_residual(&p, &res).unwrap() < 1e-12);
    }

    #[test]
    fn feasibility_examples() {
        let b1 = ControlBox::symmetric(1, 1.0).unwrap();
        let f = feasible(&[], &b1).unwrap();
        assert!(f.feasible);
        assert_eq!(f.witness.unwrap(), dvector![0.0]);
        let f = feasible(
            &[Halfspace::ge(dvector![1.0], 0.1), Halfspace::le(dvector![1.0], -0.1)],
            &b1,
        )
        .unwrap();
        assert!(!f.feasible);
        let b2 = ControlBox::from_slices(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let h = Halfspace::ge(dvector![1.0, 1.0], 1.0);
        let f = feasible(std::slice::from_ref(&h), &b2).unwrap();
        let w = f.witness.unwrap();
        assert!(h.contains(&w, 1e-12) && b2.contains(&w, 1e-12));
    }

    #[test]
    fn dimension_checks() {
        let b = ControlBox::symmetric(2, 1.0).unwrap();
        assert!(MinNormProblem::new(dvector![0.0], vec![], b.clone()).is_err());
        assert!(MinNormProblem::new(dvector![0.0, 0.0], vec![Halfspace::ge(dvector![1.0], 0.0)], b).is_err());
    }
}
