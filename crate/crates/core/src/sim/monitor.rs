use super::{LogTier, TrajectoryLog};
use crate::error::{Error, Result};

/// Forward-invariance verdict over a log.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub pass: bool,
    pub tol: f64,
    pub min_margin: f64,
    pub worst_step: Option<usize>,
    /// `max(0, −min hold_residual)`: the worst violation of the enforced
    /// invariance constraints by the held control within a step.
    pub worst_hold_violation: f64,
}

/// Passes when the logged margin stays at or above `−tol` at every step.
pub fn monitor_invariance(log: &TrajectoryLog, tol: f64) -> InvarianceReport {
    let mut min_margin = f64::INFINITY;
    let mut worst_step = None;
    for (k, r) in log.records().iter().enumerate() {
        if r.margin < min_margin {
            min_margin = r.margin;
            worst_step = Some(k);
        }
    }
    let worst_hold_violation = log
        .records()
        .iter()
        .filter_map(|r| r.hold_residual)
        .fold(0.0f64, |acc, r| acc.max(-r));
    InvarianceReport {
        pass: min_margin >= -tol,
        tol,
        min_margin,
        worst_step,
        worst_hold_violation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CplEvent {
    pub step: usize,
    pub t: f64,
    pub from: usize,
    pub to: usize,
    /// Every step since the previous level change used the `sat+inc` tier.
    pub sat_inc_sustained: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CplMonitorReport {
    pub decreases: Vec<CplEvent>,
    pub increases: Vec<CplEvent>,
    pub initial_level: usize,
    pub final_level: usize,
    pub top_level: usize,
    /// Every logged step used the `sat+inc` tier.
    pub sat_inc_throughout: bool,
}

impl CplMonitorReport {
    pub fn pass(&self) -> bool {
        self.decreases.is_empty()
    }

    pub fn reached_top(&self) -> bool {
        self.final_level == self.top_level
    }

    /// Levels in the order they were visited, starting from the initial one.
    pub fn trace(&self) -> Vec<usize> {
        let mut events: Vec<&CplEvent> = self.decreases.iter().chain(&self.increases).collect();
        events.sort_by_key(|e| e.step);
        std::iter::once(self.initial_level)
            .chain(events.iter().map(|e| e.to))
            .collect()
    }

    /// Time at which `level` was first entered from below.
    pub fn first_increase_to(&self, level: usize) -> Option<f64> {
        self.increases.iter().find(|e| e.to == level).map(|e| e.t)
    }
}

/// Counts priority-level decreases and records every increase.
pub fn monitor_cpl(log: &TrajectoryLog) -> CplMonitorReport {
    let records = log.records();
    let mut report = CplMonitorReport {
        decreases: Vec::new(),
        increases: Vec::new(),
        initial_level: records.first().map_or(0, |r| r.cpl),
        final_level: records.last().map_or(0, |r| r.cpl),
        top_level: log.top_level(),
        sat_inc_throughout: !records.is_empty() && records.iter().all(|r| r.tier == LogTier::SatInc),
    };
    let mut sustained = true;
    for (k, w) in records.windows(2).enumerate() {
        sustained &= w[0].tier == LogTier::SatInc;
        if w[1].cpl == w[0].cpl {
            continue;
        }
        let event = CplEvent {
            step: k + 1,
            t: w[1].t,
            from: w[0].cpl,
            to: w[1].cpl,
            sat_inc_sustained: sustained,
        };
        if w[1].cpl < w[0].cpl {
            report.decreases.push(event);
        } else {
            report.increases.push(event);
        }
        sustained = true;
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    /// `−1/slope` of `ln(residual)` against `t`.
    pub time_constant: f64,
    pub slope: f64,
    pub intercept: f64,
    pub samples_used: usize,
}

/// Least-squares fit of `ln r = intercept + slope·t` after dropping the
/// first 5% of samples.
pub fn fit_exponential_rate(series: &[(f64, f64)]) -> Result<ExponentialFit> {
    let skip = (series.len() as f64 * 0.05).ceil() as usize;
    let window = &series[skip.min(series.len())..];
    if window.len() < 2 {
        return Err(Error::FitDomain(format!(
            "{} samples left in the fit window",
            window.len()
        )));
    }
    if let Some(&(t, r)) = window.iter().find(|(_, r)| r.is_nan() || *r <= 0.0 || !r.is_finite()) {
        return Err(Error::FitDomain(format!("residual {r} at t = {t} is not positive")));
    }
    let n = window.len() as f64;
    let mean_t = window.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_y = window.iter().map(|(_, r)| r.ln()).sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(t, r) in window {
        let dt = t - mean_t;
        stt += dt * dt;
        sty += dt * (r.ln() - mean_y);
    }
    if stt == 0.0 {
        return Err(Error::FitDomain("all samples share one time stamp".into()));
    }
    let slope = sty / stt;
    if slope.is_nan() || slope >= 0.0 {
        return Err(Error::FitDomain(format!("residual is not decaying (slope {slope})")));
    }
    Ok(ExponentialFit {
        time_constant: -1.0 / slope,
        slope,
        intercept: mean_y - slope * mean_t,
        samples_used: window.len(),
    })
}
