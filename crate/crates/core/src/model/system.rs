use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::field::VectorFn;
use crate::error::{check_dim, Error, Result};

pub type MatrixFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// `ẋ = f(x) + g(x)u` with `x ∈ ℝⁿ`, `u ∈ ℝᵐ`.
#[derive(Clone)]
pub struct ControlAffineSystem {
    state_dim: usize,
    control_dim: usize,
    drift: VectorFn,
    input_matrix: MatrixFn,
}

impl fmt::Debug for ControlAffineSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlAffineSystem")
            .field("state_dim", &self.state_dim)
            .field("control_dim", &self.control_dim)
            .finish_non_exhaustive()
    }
}

/// `L_f h = ∇h·f(x)` and `L_g h = ∇hᵀ g(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieDerivatives {
    pub lf: f64,
    pub lg: DVector<f64>,
}

impl LieDerivatives {
    /// Time derivative `L_f + L_g·u` of the differentiated function.
    pub fn rate(&self, u: &DVector<f64>) -> f64 {
        self.lf + self.lg.dot(u)
    }
}

impl ControlAffineSystem {
    pub fn new<F, G>(state_dim: usize, control_dim: usize, drift: F, input_matrix: G) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if state_dim == 0 || control_dim == 0 {
            return Err(Error::config("state and control dimensions must be positive"));
        }
        Ok(ControlAffineSystem {
            state_dim,
            control_dim,
            drift: Arc::new(drift),
            input_matrix: Arc::new(input_matrix),
        })
    }

    /// Constant-coefficient system `ẋ = Ax + B u`.
    pub fn linear(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        check_dim("linear system A columns", a.nrows(), a.ncols())?;
        check_dim("linear system B rows", a.nrows(), b.nrows())?;
        let (n, m) = (b.nrows(), b.ncols());
        ControlAffineSystem::new(n, m, move |x| &a * x, move |_| b.clone())
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn drift(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("state", self.state_dim, x.len())?;
        let f = (self.drift)(x);
        check_dim("drift output", self.state_dim, f.len())?;
        Ok(f)
    }

    pub fn input_matrix(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("state", self.state_dim, x.len())?;
        let g = (self.input_matrix)(x);
        check_dim("input matrix rows", self.state_dim, g.nrows())?;
        check_dim("input matrix columns", self.control_dim, g.ncols())?;
        Ok(g)
    }

    /// `f(x) + g(x)·u`.
    pub fn eval_dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("control", self.control_dim, u.len())?;
        let mut xdot = self.drift(x)?;
        xdot.gemv(1.0, &self.input_matrix(x)?, u, 1.0);
        Ok(xdot)
    }

    /// Lie derivatives of a function whose gradient at `x` is `grad(x)`.
    pub fn lie_derivatives<G>(&self, grad: G, x: &DVector<f64>) -> Result<LieDerivatives>
    where
        G: Fn(&DVector<f64>) -> DVector<f64>,
    {
        check_dim("state", self.state_dim, x.len())?;
        let dh = grad(x);
        check_dim("gradient length", self.state_dim, dh.len())?;
        self.lie_derivatives_at(&dh, x)
    }

    /// Lie derivatives from an already evaluated gradient vector.
    pub fn lie_derivatives_at(&self, dh: &DVector<f64>, x: &DVector<f64>) -> Result<LieDerivatives> {
        check_dim("gradient length", self.state_dim, dh.len())?;
        let lf = dh.dot(&self.drift(x)?);
        let lg = self.input_matrix(x)?.tr_mul(dh);
        Ok(LieDerivatives { lf, lg })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn single_integrator() -> ControlAffineSystem {
        ControlAffineSystem::new(1, 1, |_| dvector![0.0], |_| dmatrix![1.0]).unwrap()
    }

    fn drift_integrator() -> ControlAffineSystem {
        ControlAffineSystem::new(2, 1, |x| dvector![x[1], 0.0], |_| dmatrix![0.0; 1.0]).unwrap()
    }

    #[test]
    fn dynamics_examples() {
        let si = single_integrator();
        assert_eq!(si.eval_dynamics(&dvector![1.0], &dvector![2.0]).unwrap(), dvector![2.0]);
        let di = drift_integrator();
        let x = dvector![1.0, 3.0];
        assert_eq!(di.eval_dynamics(&x, &dvector![0.5]).unwrap(), dvector![3.0, 0.5]);
        assert_eq!(di.eval_dynamics(&x, &dvector![0.0]).unwrap(), di.drift(&x).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_argument_error() {
        let di = drift_integrator();
        assert!(matches!(
            di.eval_dynamics(&dvector![1.0], &dvector![0.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(di.eval_dynamics(&dvector![1.0, 2.0], &dvector![0.0, 1.0]).is_err());
        let bad = ControlAffineSystem::new(2, 1, |_| dvector![0.0], |_| dmatrix![0.0; 1.0]).unwrap();
        assert!(bad.drift(&dvector![0.0, 0.0]).is_err());
        assert!(di.lie_derivatives(|_| dvector![1.0], &dvector![1.0, 3.0]).is_err());
    }

    #[test]
    fn lie_derivative_examples() {
        let si = single_integrator();
        let l = si.lie_derivatives(|_| dvector![1.0], &dvector![1.0]).unwrap();
        assert_eq!((l.lf, l.lg.clone()), (0.0, dvector![1.0]));
        let l = si.lie_derivatives(|_| dvector![0.0], &dvector![1.0]).unwrap();
        assert_eq!((l.lf, l.lg.clone()), (0.0, dvector![0.0]));
        let l = drift_integrator()
            .lie_derivatives(|_| dvector![1.0, 1.0], &dvector![1.0, 3.0])
            .unwrap();
        assert_eq!((l.lf, l.lg.clone()), (3.0, dvector![1.0]));
    }

    #[test]
    fn linear_constructor() {
        let sys = ControlAffineSystem::linear(dmatrix![-1.0], dmatrix![1.0]).unwrap();
        assert_eq!(
            sys.eval_dynamics(&dvector![2.0], &dvector![0.5]).unwrap(),
            dvector![-1.5]
        );
        assert!(ControlAffineSystem::linear(dmatrix![1.0, 0.0], dmatrix![1.0]).is_err());
    }
}
