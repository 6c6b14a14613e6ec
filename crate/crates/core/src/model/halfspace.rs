use std::fmt;

use nalgebra::DVector;

/// Direction of an inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    /// `≤`
    Le,
    /// `≥`
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
        })
    }
}

/// Normals with every component at or below this magnitude are treated as zero.
pub const ZERO_NORMAL_TOL: f64 = 1e-12;

/// Status of a constraint whose normal vanishes, so that it no longer
/// depends on the control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    AlwaysSatisfied,
    Unsatisfiable,
}

/// Affine control constraint `normal·u ≤ offset` or `normal·u ≥ offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub offset: f64,
    pub sense: Sense,
}

impl Halfspace {
    pub fn new(normal: DVector<f64>, offset: f64, sense: Sense) -> Self {
        debug_assert!(normal.iter().all(|a| a.is_finite()), "non-finite halfspace normal");
        Halfspace { normal, offset, sense }
    }

    pub fn le(normal: DVector<f64>, offset: f64) -> Self {
        Halfspace::new(normal, offset, Sense::Le)
    }

    pub fn ge(normal: DVector<f64>, offset: f64) -> Self {
        Halfspace::new(normal, offset, Sense::Ge)
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed slack, nonnegative exactly when `u` satisfies the constraint.
    pub fn slack(&self, u: &DVector<f64>) -> f64 {
        let au = self.normal.dot(u);
        match self.sense {
            Sense::Le => self.offset - au,
            Sense::Ge => au - self.offset,
        }
    }

    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        self.slack(u) >= -tol
    }

    /// Equivalent `≥` form `(a, c)` with `a·u ≥ c`.
    pub fn to_ge(&self) -> (DVector<f64>, f64) {
        match self.sense {
            Sense::Ge => (self.normal.clone(), self.offset),
            Sense::Le => (-&self.normal, -self.offset),
        }
    }

    /// `None` when the normal is nonzero; otherwise whether the constant
    /// inequality `0 {≤,≥} offset` holds.
    pub fn degeneracy(&self) -> Option<Degeneracy> {
        if self.normal.amax() > ZERO_NORMAL_TOL {
            return None;
        }
        let holds = match self.sense {
            Sense::Le => 0.0 <= self.offset,
            Sense::Ge => 0.0 >= self.offset,
        };
        Some(if holds {
            Degeneracy::AlwaysSatisfied
        } else {
            Degeneracy::Unsatisfiable
        })
    }

    pub fn is_finite(&self) -> bool {
        self.offset.is_finite() && self.normal.iter().all(|a| a.is_finite())
    }
}

impl fmt::Display for Halfspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.normal.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]·u {} {}", self.sense, self.offset)
    }
}
