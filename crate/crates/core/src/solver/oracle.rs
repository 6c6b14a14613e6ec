//! Brute-force references used to cross-check [`super::solve_min_norm`]: a
//! tensor grid search and an exhaustive active-set enumeration. Both are
//! exponential in the control dimension; meant for `m ≤ 3`.

use nalgebra::{DMatrix, DVector};

use super::MinNormProblem;
use crate::model::AxisBox;

const GRID_FEAS_TOL: f64 = 1e-9;

fn admissible(problem: &MinNormProblem, u: &DVector<f64>) -> bool {
    problem.cbox.contains(u, GRID_FEAS_TOL) && problem.halfspaces.iter().all(|h| h.contains(u, GRID_FEAS_TOL))
}

fn best_on_grid(problem: &MinNormProblem, window: &AxisBox, points: usize) -> Option<(DVector<f64>, f64)> {
    let mut best: Option<(DVector<f64>, f64)> = None;
    for u in window.grid(points) {
        if !admissible(problem, &u) {
            continue;
        }
        let d = (&u - &problem.target).norm_squared();
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((u, d));
        }
    }
    best
}

/// Best feasible point of a `points_per_axis` tensor grid over the box, or
/// `None` when no grid point satisfies every constraint to `1e-9`.
pub fn oracle_min_norm(problem: &MinNormProblem, points_per_axis: usize) -> Option<DVector<f64>> {
    best_on_grid(problem, &problem.cbox, points_per_axis).map(|(u, _)| u)
}

/// Exact minimiser by enumeration: projects the target onto the affine
/// intersection of every subset of at most `m` constraints (halfspaces and box
/// faces), and keeps the closest projection that satisfies every constraint to
/// `1e-9`. Cost grows combinatorially with the constraint count.
pub fn oracle_min_norm_enumerated(problem: &MinNormProblem) -> Option<DVector<f64>> {
    let rows = problem.ge_rows();
    let m = problem.dim();
    let t = &problem.target;
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut consider = |u: DVector<f64>| {
        if rows.iter().any(|(_, a, c)| a.dot(&u) < c - GRID_FEAS_TOL) {
            return;
        }
        let d = (&u - t).norm_squared();
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((u, d));
        }
    };
    consider(t.clone());
    let mut subset: Vec<usize> = Vec::with_capacity(m);
    subsets(rows.len(), m, 0, &mut subset, &mut |idx| {
        let a = DMatrix::from_fn(idx.len(), m, |r, c| rows[idx[r]].1[c]);
        let rhs = DVector::from_fn(idx.len(), |r, _| rows[idx[r]].2 - rows[idx[r]].1.dot(t));
        let gram = &a * a.transpose();
        if gram.determinant().abs() < 1e-12 {
            return;
        }
        if let Some(lambda) = gram.lu().solve(&rhs) {
            consider(t + a.transpose() * lambda);
        }
    });
    best.map(|(u, _)| u)
}

fn subsets(n: usize, max_len: usize, from: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if cur.len() == max_len {
        return;
    }
    for i in from..n {
        cur.push(i);
        visit(cur);
        subsets(n, max_len, i + 1, cur, visit);
        cur.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ControlBox, Halfspace};
    use nalgebra::dvector;

    #[test]
    fn projection_onto_diagonal_halfspace() {
        let p = MinNormProblem::new(
            dvector![0.0, 0.0],
            vec![Halfspace::ge(dvector![1.0, 1.0], 1.0)],
            ControlBox::symmetric(2, 2.0).unwrap(),
        )
        .unwrap();
        let coarse = oracle_min_norm(&p, 201).unwrap();
        assert!((coarse - dvector![0.5, 0.5]).amax() <= 4.0 / 200.0);
        let exact = oracle_min_norm_enumerated(&p).unwrap();
        assert!((exact - dvector![0.5, 0.5]).amax() <= 1e-12);
    }

    #[test]
    fn infeasible_has_no_grid_point() {
        let p = MinNormProblem::new(
            dvector![0.0],
            vec![Halfspace::ge(dvector![1.0], 0.1), Halfspace::le(dvector![1.0], -0.1)],
            ControlBox::symmetric(1, 1.0).unwrap(),
        )
        .unwrap();
        assert!(oracle_min_norm(&p, 201).is_none());
        assert!(oracle_min_norm_enumerated(&p).is_none());
    }

    #[test]
    fn interior_target_on_grid() {
        let p = MinNormProblem::new(dvector![0.5], vec![], ControlBox::symmetric(1, 1.0).unwrap()).unwrap();
        assert_eq!(oracle_min_norm(&p, 201).unwrap(), dvector![0.5]);
        assert_eq!(oracle_min_norm_enumerated(&p).unwrap(), dvector![0.5]);
    }
}
