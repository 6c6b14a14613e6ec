use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ScalarField, StateBox};

/// Outcome of a sampling-based validity check.
///
/// `worst_margin` is the smallest per-sample margin; the check passes when it
/// is at least `−tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub pass: bool,
    pub samples_checked: usize,
    pub worst_margin: f64,
    pub worst_state: Option<DVector<f64>>,
    /// No sample fell into the region the condition quantifies over.
    pub vacuous: bool,
}

impl ValidityReport {
    pub(crate) fn from_margins(margins: impl IntoIterator<Item = (DVector<f64>, f64)>, tol: f64) -> Self {
        let mut report = ValidityReport {
            pass: true,
            samples_checked: 0,
            worst_margin: f64::INFINITY,
            worst_state: None,
            vacuous: true,
        };
        for (x, margin) in margins {
            report.samples_checked += 1;
            report.vacuous = false;
            if margin < report.worst_margin {
                report.worst_margin = margin;
                report.worst_state = Some(x);
            }
        }
        report.pass = report.vacuous || report.worst_margin >= -tol;
        report
    }
}

/// How states are drawn for the validity checkers.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOptions {
    /// Uniform grid points per state axis, endpoints included.
    pub grid_per_axis: usize,
    /// Extra seeded random samples pushed onto the zero level set of the
    /// checked function.
    pub level_set_samples: usize,
    /// Grid points per control axis, used when the dynamics are not affine.
    pub control_grid: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            grid_per_axis: 41,
            level_set_samples: 64,
            control_grid: 21,
            seed: 0,
            tol: 1e-9,
        }
    }
}

/// Grid over the domain plus random points projected onto `{field = level}`
/// by Newton steps along the gradient. Projections that leave the domain or
/// fail to converge are discarded.
pub(crate) fn sample_states(
    domain: &StateBox,
    field: &ScalarField,
    level: f64,
    opts: &SamplingOptions,
) -> Vec<DVector<f64>> {
    let mut out = domain.grid(opts.grid_per_axis);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = domain.dim();
    for _ in 0..opts.level_set_samples {
        let mut x = DVector::from_fn(n, |i, _| {
            let (lo, hi) = (domain.lower()[i], domain.upper()[i]);
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        });
        for _ in 0..30 {
            let r = field.value(&x) - level;
            if r.abs() < 1e-12 {
                break;
            }
            let g = field.gradient(&x);
            let gg = g.norm_squared();
            if gg < 1e-24 {
                break;
            }
            x.axpy(-r / gg, &g, 1.0);
        }
        if (field.value(&x) - level).abs() < 1e-9 && domain.contains(&x, 0.0) {
            out.push(x);
        }
    }
    out
}
