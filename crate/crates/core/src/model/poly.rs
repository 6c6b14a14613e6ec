use nalgebra::DVector;

use super::field::ScalarField;
use crate::error::{Error, Result};

/// `coeff · Π x_i^{powers_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Multivariate polynomial with an exact gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        for (k, t) in terms.iter().enumerate() {
            if t.powers.len() != dim {
                return Err(Error::config(format!(
                    "polynomial term {k} has {} exponents, expected {dim}",
                    t.powers.len()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::config(format!(
                    "polynomial term {k} has a non-finite coefficient"
                )));
            }
        }
        Ok(Polynomial { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.powers
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| x[i].powi(p as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for t in &self.terms {
            for i in 0..self.dim {
                let p = t.powers[i];
                if p == 0 {
                    continue;
                }
                let mut d = t.coeff * p as f64 * x[i].powi(p as i32 - 1);
                for (k, &q) in t.powers.iter().enumerate() {
                    if k != i {
                        d *= x[k].powi(q as i32);
                    }
                }
                g[i] += d;
            }
        }
        g
    }

    pub fn negated(&self) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coeff: -t.coeff,
                    powers: t.powers.clone(),
                })
                .collect(),
        }
    }

    pub fn into_field(self) -> ScalarField {
        let dim = self.dim;
        let p = std::sync::Arc::new(self);
        let q = std::sync::Arc::clone(&p);
        ScalarField::new(dim, move |x| p.eval(x), move |x| q.gradient(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::finite_difference_gradient;
    use nalgebra::dvector;

    fn m(coeff: f64, powers: &[u32]) -> Monomial {
        Monomial {
            coeff,
            powers: powers.to_vec(),
        }
    }

    #[test]
    fn evaluates_and_differentiates() {
        // 1 + 2 x0^2 x1 - x1^3
        let p = Polynomial::new(2, vec![m(1.0, &[0, 0]), m(2.0, &[2, 1]), m(-1.0, &[0, 3])]).unwrap();
        let x = dvector![1.5, -0.5];
        assert_eq!(p.eval(&x), 1.0 + 2.0 * 2.25 * -0.5 + 0.125);
        let g = p.gradient(&x);
        assert_eq!(g, dvector![4.0 * 1.5 * -0.5, 2.0 * 2.25 - 3.0 * 0.25]);
        let fd = finite_difference_gradient(|y| p.eval(y), &x);
        assert!((g - fd).amax() < 1e-8);
    }

    #[test]
    fn rejects_wrong_arity() {
        assert!(Polynomial::new(2, vec![m(1.0, &[1])]).is_err());
    }
}
