use super::bounds::StateBox;
use super::field::ScalarField;
use crate::error::{check_dim, Error, Result};

/// Linear extended class-K function `α(y) = y / k`.
pub fn class_kappa(k_gain: f64, y: f64) -> Result<f64> {
    if k_gain.is_nan() || k_gain <= 0.0 || !k_gain.is_finite() {
        return Err(Error::config(format!("class-K gain must be positive, got {k_gain}")));
    }
    Ok(y / k_gain)
}

/// A barrier `h` whose superlevel set `{h ≥ 0}` is the safe set, with the
/// gain `k` of `α(y) = y/k` and the sampling domain used by the checkers.
#[derive(Debug, Clone)]
pub struct BarrierSpec {
    pub h: ScalarField,
    k_gain: f64,
    pub domain: StateBox,
}

impl BarrierSpec {
    pub fn new(h: ScalarField, k_gain: f64, domain: StateBox) -> Result<Self> {
        class_kappa(k_gain, 0.0)?;
        check_dim("barrier domain", h.dim(), domain.dim())?;
        Ok(BarrierSpec { h, k_gain, domain })
    }

    pub fn k_gain(&self) -> f64 {
        self.k_gain
    }

    pub fn alpha(&self, y: f64) -> f64 {
        y / self.k_gain
    }

    /// Same barrier with a different gain.
    pub fn with_gain(&self, k_gain: f64) -> Result<Self> {
        BarrierSpec::new(self.h.clone(), k_gain, self.domain.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AxisBox;
    use proptest::prelude::*;

    #[test]
    fn class_kappa_examples() {
        assert_eq!(class_kappa(2.0, 0.0).unwrap(), 0.0);
        assert_eq!(class_kappa(2.0, 1.0).unwrap(), 0.5);
        assert_eq!(class_kappa(4.0, -2.0).unwrap(), -0.5);
        assert!(matches!(class_kappa(0.0, 1.0), Err(Error::Config(_))));
        assert!(class_kappa(-1.0, 1.0).is_err());
        assert!(class_kappa(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn barrier_rejects_nonpositive_gain() {
        let dom = AxisBox::symmetric(1, 1.0).unwrap();
        assert!(BarrierSpec::new(ScalarField::constant(1, 1.0), 0.0, dom.clone()).is_err());
        assert!(BarrierSpec::new(ScalarField::constant(2, 1.0), 1.0, dom).is_err());
    }

    proptest! {
        #[test]
        fn class_kappa_is_strictly_increasing(k in 1e-3f64..1e3, a in -1e3f64..1e3, d in 1e-6f64..1e3) {
            let lo = class_kappa(k, a).unwrap();
            let hi = class_kappa(k, a + d).unwrap();
            prop_assert!(lo < hi);
            prop_assert_eq!(class_kappa(k, -a).unwrap(), -lo);
        }
    }
}
