use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{check_dim, Result};

pub type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Central finite-difference step used by the gradient validation oracle.
pub const FD_STEP: f64 = 1e-6;

/// A scalar function of the state together with its user-supplied gradient.
///
/// Evaluators must be pure. The gradient is never approximated in the
/// control path; [`ScalarField::check_gradient`] compares it against central
/// finite differences at validation time only.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    value: ScalarFn,
    gradient: VectorFn,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new<V, G>(dim: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        ScalarField {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField::new(dim, move |_| c, move |_| DVector::zeros(dim))
    }

    /// `x ↦ coeffs·x + offset`.
    pub fn affine(coeffs: DVector<f64>, offset: f64) -> Self {
        let dim = coeffs.len();
        let c = coeffs.clone();
        ScalarField::new(dim, move |x| c.dot(x) + offset, move |_| coeffs.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }

    /// Gradient with dimension checks on both the argument and the result.
    pub fn checked_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("scalar field argument", self.dim, x.len())?;
        let g = self.gradient(x);
        check_dim("gradient length", self.dim, g.len())?;
        Ok(g)
    }

    /// The field `−self`, with negated gradient.
    pub fn negated(&self) -> ScalarField {
        let v = Arc::clone(&self.value);
        let g = Arc::clone(&self.gradient);
        ScalarField::new(self.dim, move |x| -v(x), move |x| -g(x))
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        let v = Arc::clone(&self.value);
        let g = Arc::clone(&self.gradient);
        ScalarField::new(self.dim, move |x| c * v(x), move |x| c * g(x))
    }

    /// Compares the supplied gradient against central finite differences at
    /// every sample. A sample passes when
    /// `‖∇ − ∇_fd‖∞ ≤ rel_tol · max(1, ‖∇_fd‖∞)`.
    pub fn check_gradient(&self, samples: &[DVector<f64>], rel_tol: f64) -> Result<GradientCheck> {
        let mut worst = GradientCheck {
            pass: true,
            worst_error: 0.0,
            worst_state: None,
        };
        for x in samples {
            let g = self.checked_gradient(x)?;
            let fd = finite_difference_gradient(|y| self.value(y), x);
            let err = (&g - &fd).amax() / fd.amax().max(1.0);
            if err > worst.worst_error || worst.worst_state.is_none() {
                worst.worst_error = err;
                worst.worst_state = Some(x.clone());
            }
        }
        worst.pass = worst.worst_error <= rel_tol;
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub pass: bool,
    pub worst_error: f64,
    pub worst_state: Option<DVector<f64>>,
}

/// Central difference `(f(x + he_i) − f(x − he_i)) / 2h` with `h = 1e-6`.
pub fn finite_difference_gradient<F>(f: F, x: &DVector<f64>) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut grad = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + FD_STEP;
        let fp = f(&probe);
        probe[i] = xi - FD_STEP;
        let fm = f(&probe);
        probe[i] = xi;
        grad[i] = (fp - fm) / (2.0 * FD_STEP);
    }
    grad
}
