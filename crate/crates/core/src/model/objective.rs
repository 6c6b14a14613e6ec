use std::fmt;

use nalgebra::DVector;

use super::field::ScalarField;
use super::halfspace::Sense;
use crate::error::{Error, Result};

/// Entry of a priority table: a finite bound or the unbounded marker.
///
/// `Unbounded` admits every value and never takes part in arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Unbounded,
    Finite(f64),
}

impl Bound {
    /// Whether `value ≤ self` (non-strict).
    pub fn admits(self, value: f64) -> bool {
        match self {
            Bound::Unbounded => true,
            Bound::Finite(b) => value <= b,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Unbounded => None,
            Bound::Finite(b) => Some(b),
        }
    }

    pub fn negated(self) -> Bound {
        match self {
            Bound::Unbounded => Bound::Unbounded,
            Bound::Finite(b) => Bound::Finite(-b),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Unbounded => f.write_str("inf"),
            Bound::Finite(b) => write!(f, "{b}"),
        }
    }
}

/// Objective function stored in `≤` sense.
///
/// An objective given as `V ≥ b` is stored as `−V ≤ −b`; its table row must
/// be negated the same way (see [`PriorityTable::from_sensed_rows`]).
#[derive(Debug, Clone)]
pub struct Objective {
    pub label: String,
    field: ScalarField,
    original_sense: Sense,
}

impl Objective {
    pub fn new(label: impl Into<String>, sense: Sense, field: ScalarField) -> Self {
        let field = match sense {
            Sense::Le => field,
            Sense::Ge => field.negated(),
        };
        Objective {
            label: label.into(),
            field,
            original_sense: sense,
        }
    }

    pub fn le(label: impl Into<String>, field: ScalarField) -> Self {
        Objective::new(label, Sense::Le, field)
    }

    pub fn ge(label: impl Into<String>, field: ScalarField) -> Self {
        Objective::new(label, Sense::Ge, field)
    }

    pub fn original_sense(&self) -> Sense {
        self.original_sense
    }

    /// The canonical (`≤` sense) field.
    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.field.value(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.field.gradient(x)
    }

    /// Value in the user's original sense.
    pub fn original_value(&self, x: &DVector<f64>) -> f64 {
        match self.original_sense {
            Sense::Le => self.value(x),
            Sense::Ge => -self.value(x),
        }
    }
}

/// Bound matrix `b_ij`, rows are objectives and columns `0..=J` are priority
/// levels, stored in `≤` sense.
///
/// Column 0 is entirely unbounded and each row is non-increasing in `j`
/// (bounds tighten with priority; once a row is finite it stays finite).
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityTable {
    rows: Vec<Vec<Bound>>,
}

impl PriorityTable {
    pub fn new(rows: Vec<Vec<Bound>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::config("priority table has no rows"));
        };
        let cols = first.len();
        if cols == 0 {
            return Err(Error::config("priority table has no columns"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::config(format!(
                    "priority table row {i} has {} columns, expected {cols}",
                    row.len()
                )));
            }
            if row[0] != Bound::Unbounded {
                return Err(Error::config(format!(
                    "priority table entry ({i}, 0) must be unbounded"
                )));
            }
            let mut prev = Bound::Unbounded;
            for (j, &b) in row.iter().enumerate() {
                match (prev, b) {
                    (_, Bound::Finite(v)) if !v.is_finite() => {
                        return Err(Error::config(format!(
                            "priority table entry ({i}, {j}) is not finite; use the unbounded marker"
                        )));
                    }
                    (Bound::Finite(p), Bound::Unbounded) => {
                        return Err(Error::config(format!(
                            "priority table row {i} loosens at column {j}: {p} -> inf"
                        )));
                    }
                    (Bound::Finite(p), Bound::Finite(v)) if v > p => {
                        return Err(Error::config(format!(
                            "priority table row {i} loosens at column {j}: {p} -> {v}"
                        )));
                    }
                    _ => {}
                }
                prev = b;
            }
        }
        Ok(PriorityTable { rows })
    }

    /// Builds a canonical table from rows written in each objective's
    /// original sense. `Ge` rows are negated; their `Unbounded` entries stand
    /// for `−∞`.
    pub fn from_sensed_rows(rows: Vec<Vec<Bound>>, senses: &[Sense]) -> Result<Self> {
        if rows.len() != senses.len() {
            return Err(Error::config(format!(
                "priority table has {} rows for {} objectives",
                rows.len(),
                senses.len()
            )));
        }
        let rows = rows
            .into_iter()
            .zip(senses)
            .map(|(row, sense)| match sense {
                Sense::Le => row,
                Sense::Ge => row.into_iter().map(Bound::negated).collect(),
            })
            .collect();
        PriorityTable::new(rows)
    }

    /// Single-objective table `[+∞, b_1, …]` from finite canonical bounds.
    pub fn single(bounds: &[f64]) -> Result<Self> {
        let mut row = vec![Bound::Unbounded];
        row.extend(bounds.iter().map(|&b| Bound::Finite(b)));
        PriorityTable::new(vec![row])
    }

    pub fn objective_count(&self) -> usize {
        self.rows.len()
    }

    /// Highest priority level `J`.
    pub fn top_level(&self) -> usize {
        self.rows[0].len() - 1
    }

    pub fn bound(&self, objective: usize, level: usize) -> Bound {
        self.rows[objective][level]
    }

    pub fn rows(&self) -> &[Vec<Bound>] {
        &self.rows
    }

    /// Whether every value satisfies its bound in column `level`.
    pub fn column_admits(&self, level: usize, values: &[f64]) -> bool {
        self.rows.iter().zip(values).all(|(row, &v)| row[level].admits(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Bound::{Finite as F, Unbounded as Inf};

    #[test]
    fn table_invariants() {
        assert!(PriorityTable::new(vec![vec![Inf, F(1.0), F(0.5)]]).is_ok());
        assert!(PriorityTable::new(vec![vec![F(1.0), F(0.5)]]).is_err());
        assert!(PriorityTable::new(vec![vec![Inf, F(0.5), F(1.0)]]).is_err());
        assert!(PriorityTable::new(vec![vec![Inf, F(0.5), Inf]]).is_err());
        assert!(PriorityTable::new(vec![vec![Inf, F(0.5)], vec![Inf]]).is_err());
        assert!(PriorityTable::new(vec![vec![Inf, F(f64::INFINITY)]]).is_err());
        assert!(PriorityTable::new(vec![]).is_err());
    }

    #[test]
    fn ge_rows_are_negated() {
        // separation >= [-inf, 10, 10, 20]
        let t = PriorityTable::from_sensed_rows(
            vec![vec![Inf, F(10.0), F(10.0), F(20.0)], vec![Inf, Inf, F(60.0), F(60.0)]],
            &[Sense::Ge, Sense::Le],
        )
        .unwrap();
        assert_eq!(t.rows()[0], vec![Inf, F(-10.0), F(-10.0), F(-20.0)]);
        assert_eq!(t.top_level(), 3);
        // Without negation the GE row would loosen.
        assert!(PriorityTable::from_sensed_rows(vec![vec![Inf, F(10.0), F(20.0)]], &[Sense::Le]).is_err());
    }

    #[test]
    fn ties_count_as_satisfied() {
        assert!(F(1.0).admits(1.0));
        assert!(!F(1.0).admits(1.0 + 1e-15));
        assert!(Inf.admits(f64::MAX));
    }

    #[test]
    fn objective_canonicalization() {
        let x = nalgebra::dvector![3.0];
        let sep = Objective::ge("sep", ScalarField::affine(nalgebra::dvector![2.0], 0.0));
        assert_eq!(sep.value(&x), -6.0);
        assert_eq!(sep.gradient(&x), nalgebra::dvector![-2.0]);
        assert_eq!(sep.original_value(&x), 6.0);
    }
}
