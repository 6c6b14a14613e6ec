//! Named systems used by the scenario files and the benchmark suite.

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::ControlAffineSystem;

pub const SYSTEM_NAMES: [&str; 3] = ["single_integrator_1d", "double_integrator_drift", "unicycle_linearized"];

/// `ẋ = u`.
pub fn single_integrator_1d() -> ControlAffineSystem {
    ControlAffineSystem::new(1, 1, |_| dvector![0.0], |_| dmatrix![1.0]).expect("static dimensions")
}

/// `ẋ₁ = x₂`, `ẋ₂ = u`.
pub fn double_integrator_drift() -> ControlAffineSystem {
    ControlAffineSystem::new(2, 1, |x| dvector![x[1], 0.0], |_| dmatrix![0.0; 1.0]).expect("static dimensions")
}

/// Look-ahead point of a unicycle after feedback linearization: the planar
/// point is commanded directly, `ṗ = w + u`, with a constant drift `w`
/// (e.g. wind or a moving frame).
pub fn unicycle_linearized(wind: [f64; 2]) -> ControlAffineSystem {
    let w = DVector::from_column_slice(&wind);
    ControlAffineSystem::new(2, 2, move |_| w.clone(), |_| DMatrix::identity(2, 2)).expect("static dimensions")
}

/// Looks up a builtin by name. `wind` is only accepted by `unicycle_linearized`.
pub fn system_by_name(name: &str, wind: Option<[f64; 2]>) -> Result<ControlAffineSystem> {
    match (name, wind) {
        ("single_integrator_1d", None) => Ok(single_integrator_1d()),
        ("double_integrator_drift", None) => Ok(double_integrator_drift()),
        ("unicycle_linearized", w) => Ok(unicycle_linearized(w.unwrap_or([0.0, 0.0]))),
        (n, Some(_)) if SYSTEM_NAMES.contains(&n) => {
            Err(Error::config(format!("system '{n}' takes no wind parameter")))
        }
        (n, _) => Err(Error::config(format!(
            "unknown system '{n}'; expected one of {}",
            SYSTEM_NAMES.join(", ")
        ))),
    }
}
