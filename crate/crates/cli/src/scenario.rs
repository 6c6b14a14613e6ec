//! Scenario files: a JSON document naming a builtin system and describing the
//! controller, gains, initial state and horizon.

use std::fmt;
use std::path::Path;

use invfilter_core::bclf::BclfProblem;
use invfilter_core::equivalence::{reduce_cbf_to_bclf, ComparisonMode};
use invfilter_core::model::{Monomial, Polynomial};
use invfilter_core::sim::builtins::system_by_name;
use invfilter_core::sim::{Controller, NominalPolicy, Scenario};
use invfilter_core::{AxisBox, BarrierSpec, Bound, ControlAffineSystem, Objective, PriorityTable, Sense};
use nalgebra::DVector;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub system: SystemSpec,
    pub controller: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<PolySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objectives: Vec<ObjectiveSpec>,
    /// One row per objective, one column per priority level.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<Vec<TableEntry>>,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub x0: Vec<f64>,
    pub dt: f64,
    pub horizon: f64,
    pub control_box: BoxSpec,
    /// State region used for validity sampling and equivalence checks.
    pub domain: BoxSpec,
    #[serde(default)]
    pub nominal: NominalSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceSpec>,
}

fn default_k() -> f64 {
    invfilter_core::bclf::DEFAULT_K_GAIN
}

fn default_epsilon() -> f64 {
    invfilter_core::bclf::DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "SystemParams::is_empty")]
    pub params: SystemParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind: Option<[f64; 2]>,
}

impl SystemParams {
    fn is_empty(&self) -> bool {
        self.wind.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Cbf,
    Bclf,
    Saturating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Polynomial as a list of monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SenseSpec {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub label: String,
    pub sense: SenseSpec,
    pub terms: Vec<TermSpec>,
}

/// A bound table cell: a number, `"inf"`, `"-inf"`, or `null` for the
/// unbounded entry in the objective's own direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableEntry {
    Finite(f64),
    PosInf,
    NegInf,
    Open,
}

impl Serialize for TableEntry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TableEntry::Finite(v) => s.serialize_f64(*v),
            TableEntry::PosInf => s.serialize_str("inf"),
            TableEntry::NegInf => s.serialize_str("-inf"),
            TableEntry::Open => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for TableEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
            Null(()),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(TableEntry::Finite(v)),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(TableEntry::PosInf),
                "-inf" => Ok(TableEntry::NegInf),
                other => Err(de::Error::custom(format!(
                    "table entry must be a number, \"inf\", \"-inf\" or null, got {other:?}"
                ))),
            },
            Raw::Null(()) => Ok(TableEntry::Open),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NominalSpec {
    #[default]
    Zero,
    Constant(Vec<f64>),
    Proportional {
        gain: f64,
        target: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    RowActive,
    PriorityLevel,
}

/// Overrides for `check-equivalence`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceSpec {
    /// Gain of the priority-form side when it should differ from `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bclf_k: Option<f64>,
    #[serde(default)]
    pub mode: ModeSpec,
}

/// Scenario file contents converted into core types.
#[derive(Debug, Clone)]
pub struct Built {
    pub scenario: Scenario,
    pub system: ControlAffineSystem,
    pub barrier: Option<BarrierSpec>,
    pub problem: Option<BclfProblem>,
    pub domain: AxisBox,
}

struct Located<'a>(&'a str, String);

impl fmt::Display for Located<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.0, self.1)
    }
}

fn at(field: &str, e: impl fmt::Display) -> CliError {
    CliError::Config(Located(field, e.to_string()).to_string())
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            CliError::Parse {
                path: e.path().to_string(),
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn build(&self) -> Result<Built, CliError> {
        let system = system_by_name(&self.system.name, self.system.params.wind).map_err(|e| at("system.name", e))?;
        let n = system.state_dim();
        let domain = AxisBox::from_slices(&self.domain.lower, &self.domain.upper).map_err(|e| at("domain", e))?;
        if domain.dim() != n {
            return Err(at("domain", format!("expected {n} axes, got {}", domain.dim())));
        }
        let control_box =
            AxisBox::from_slices(&self.control_box.lower, &self.control_box.upper).map_err(|e| at("control_box", e))?;

        let (controller, barrier, problem) = match self.controller {
            ControllerKind::Cbf => {
                let Some(poly) = &self.barrier else {
                    return Err(at("barrier", "required by the cbf controller"));
                };
                if !self.objectives.is_empty() || !self.table.is_empty() {
                    return Err(at("objectives", "not used by the cbf controller"));
                }
                let h = polynomial(n, &poly.terms).map_err(|e| at("barrier.terms", e))?;
                let b = BarrierSpec::new(h.into_field(), self.k, domain.clone()).map_err(|e| at("k", e))?;
                (Controller::Cbf(vec![b.clone()]), Some(b), None)
            }
            ControllerKind::Bclf | ControllerKind::Saturating => {
                if self.barrier.is_some() {
                    return Err(at("barrier", "not used by priority controllers"));
                }
                let p = self.priority_problem(n)?;
                let c = if self.controller == ControllerKind::Bclf {
                    Controller::Bclf(p.clone())
                } else {
                    Controller::Saturating(p.clone())
                };
                (c, None, Some(p))
            }
        };

        let nominal = match &self.nominal {
            NominalSpec::Zero => NominalPolicy::constant(DVector::zeros(system.control_dim())),
            NominalSpec::Constant(u) => NominalPolicy::constant(DVector::from_column_slice(u)),
            NominalSpec::Proportional { gain, target } => {
                if target.len() != n {
                    return Err(at(
                        "nominal.proportional.target",
                        format!("expected {n} entries, got {}", target.len()),
                    ));
                }
                if system.control_dim() != n {
                    return Err(at("nominal.proportional", "needs as many controls as states"));
                }
                NominalPolicy::proportional(*gain, DVector::from_column_slice(target))
            }
        };

        let scenario = Scenario {
            system: system.clone(),
            controller,
            x0: DVector::from_column_slice(&self.x0),
            dt: self.dt,
            horizon: self.horizon,
            control_box,
            nominal,
            seed: self.seed,
        };
        scenario.validate().map_err(|e| at("scenario", e))?;
        Ok(Built {
            scenario,
            system,
            barrier,
            problem,
            domain,
        })
    }

    fn priority_problem(&self, n: usize) -> Result<BclfProblem, CliError> {
        if self.objectives.is_empty() {
            return Err(at("objectives", "priority controllers need at least one objective"));
        }
        if self.table.len() != self.objectives.len() {
            return Err(at(
                "table",
                format!("{} rows for {} objectives", self.table.len(), self.objectives.len()),
            ));
        }
        let mut objectives = Vec::with_capacity(self.objectives.len());
        let mut senses = Vec::with_capacity(self.objectives.len());
        let mut rows = Vec::with_capacity(self.table.len());
        for (i, (o, row)) in self.objectives.iter().zip(&self.table).enumerate() {
            let field = polynomial(n, &o.terms)
                .map_err(|e| at(&format!("objectives[{i}].terms"), e))?
                .into_field();
            let sense = match o.sense {
                SenseSpec::Le => Sense::Le,
                SenseSpec::Ge => Sense::Ge,
            };
            let bounds = row
                .iter()
                .enumerate()
                .map(|(j, &e)| bound(e, sense).map_err(|msg| at(&format!("table[{i}][{j}]"), msg)))
                .collect::<Result<Vec<_>, _>>()?;
            objectives.push(Objective::new(o.label.clone(), sense, field));
            senses.push(sense);
            rows.push(bounds);
        }
        let table = PriorityTable::from_sensed_rows(rows, &senses).map_err(|e| at("table", e))?;
        BclfProblem::new(objectives, table, self.k, self.epsilon).map_err(|e| at("k", e))
    }

    /// The priority-form problem compared against the barrier by
    /// `check-equivalence`, honouring any `equivalence.bclf_k` override.
    pub fn equivalence_partner(&self, barrier: &BarrierSpec) -> Result<BclfProblem, CliError> {
        let reduced = reduce_cbf_to_bclf(barrier);
        match self.equivalence.as_ref().and_then(|e| e.bclf_k) {
            None => Ok(reduced),
            Some(k) => {
                let eps = reduced.epsilon();
                BclfProblem::new(reduced.objectives, reduced.table, k, eps).map_err(|e| at("equivalence.bclf_k", e))
            }
        }
    }

    pub fn comparison_mode(&self) -> ComparisonMode {
        match self.equivalence.as_ref().map(|e| e.mode).unwrap_or_default() {
            ModeSpec::RowActive => ComparisonMode::RowActive,
            ModeSpec::PriorityLevel => ComparisonMode::PriorityLevel,
        }
    }
}

fn polynomial(n: usize, terms: &[TermSpec]) -> invfilter_core::Result<Polynomial> {
    Polynomial::new(
        n,
        terms
            .iter()
            .map(|t| Monomial {
                coeff: t.coeff,
                powers: t.powers.clone(),
            })
            .collect(),
    )
}

/// Converts a cell to a bound in the objective's own direction. Infinite
/// entries must point the loose way for the sense (`inf` for `≤`, `-inf`
/// for `≥`).
fn bound(entry: TableEntry, sense: Sense) -> Result<Bound, String> {
    match (entry, sense) {
        (TableEntry::Finite(v), _) if v.is_finite() => Ok(Bound::Finite(v)),
        (TableEntry::Finite(v), _) => Err(format!("non-finite bound {v}")),
        (TableEntry::Open, _) | (TableEntry::PosInf, Sense::Le) | (TableEntry::NegInf, Sense::Ge) => {
            Ok(Bound::Unbounded)
        }
        (TableEntry::PosInf, Sense::Ge) => Err("\"inf\" on a \">=\" objective; use \"-inf\" or null".into()),
        (TableEntry::NegInf, Sense::Le) => Err("\"-inf\" on a \"<=\" objective; use \"inf\" or null".into()),
    }
}
