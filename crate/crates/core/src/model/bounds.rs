use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// Closed axis-aligned box `lower ≤ v ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

/// Admissible controls. Used both as the control set of the barrier
/// condition and as the admissible set of the priority-level construction.
pub type ControlBox = AxisBox;

/// Sampling domain over the state space.
pub type StateBox = AxisBox;

impl AxisBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::config("box must have at least one axis"));
        }
        for i in 0..lower.len() {
            if !lower[i].is_finite() || !upper[i].is_finite() {
                return Err(Error::config(format!("box axis {i} is unbounded")));
            }
            if lower[i] > upper[i] {
                return Err(Error::config(format!(
                    "box axis {i} is empty: lower {} > upper {}",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(AxisBox { lower, upper })
    }

    /// Symmetric box `[-r, r]^dim`.
    pub fn symmetric(dim: usize, r: f64) -> Result<Self> {
        AxisBox::new(DVector::from_element(dim, -r), DVector::from_element(dim, r))
    }

    pub fn from_slices(lower: &[f64], upper: &[f64]) -> Result<Self> {
        AxisBox::new(DVector::from_column_slice(lower), DVector::from_column_slice(upper))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        v.len() == self.dim() && (0..self.dim()).all(|i| v[i] >= self.lower[i] - tol && v[i] <= self.upper[i] + tol)
    }

    pub fn clamp(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| v[i].clamp(self.lower[i], self.upper[i]))
    }

    /// The vertex maximizing `c·v` over the box (lower corner on ties).
    pub fn maximizing_vertex(&self, c: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(
            self.dim(),
            |i, _| if c[i] > 0.0 { self.upper[i] } else { self.lower[i] },
        )
    }

    /// The vertex minimizing `c·v` over the box.
    pub fn minimizing_vertex(&self, c: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(
            self.dim(),
            |i, _| if c[i] < 0.0 { self.upper[i] } else { self.lower[i] },
        )
    }

    /// Coordinates of a uniform grid along one axis, endpoints included.
    /// A single point collapses to the axis midpoint.
    pub fn axis_grid(&self, axis: usize, points: usize) -> Vec<f64> {
        let (lo, hi) = (self.lower[axis], self.upper[axis]);
        match points {
            0 => Vec::new(),
            1 => vec![0.5 * (lo + hi)],
            _ => (0..points)
                .map(|k| {
                    if k + 1 == points {
                        hi
                    } else {
                        lo + (hi - lo) * k as f64 / (points - 1) as f64
                    }
                })
                .collect(),
        }
    }

    /// Full tensor grid with `points` per axis, in row-major order (last
    /// axis fastest).
    pub fn grid(&self, points: usize) -> Vec<DVector<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_grid(a, points)).collect();
        tensor_grid(&axes)
    }
}

pub(crate) fn tensor_grid(axes: &[Vec<f64>]) -> Vec<DVector<f64>> {
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    if total == 0 {
        return out;
    }
    loop {
        out.push(DVector::from_fn(axes.len(), |i, _| axes[i][idx[i]]));
        let mut axis = axes.len();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < axes[axis].len() {
                break;
            }
            idx[axis] = 0;
        }
    }
}
