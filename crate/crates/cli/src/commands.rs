use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use invfilter_core::bclf::{is_bclf, Dynamics};
use invfilter_core::cbf::is_cbf;
use invfilter_core::equivalence::{sets_agree_with, AgreementOptions};
use invfilter_core::sim::{
    fit_exponential_rate, fmt_f64, monitor_cpl, monitor_invariance, simulate, CplMonitorReport, TrajectoryLog,
};
use invfilter_core::{Bound, Error, SamplingOptions, Sense, ValidityReport};
use log::info;
use nalgebra::DVector;

use crate::scenario::{ControllerKind, ScenarioFile};
use crate::{CliError, Outcome};

/// Tolerance on the logged invariance margin.
pub const INVARIANCE_TOL: f64 = 1e-3;

fn vector(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn trace(r: &CplMonitorReport) -> String {
    r.trace().iter().map(usize::to_string).collect::<Vec<_>>().join(" -> ")
}

fn write_monitors(out: &mut String, file: &ScenarioFile, log: &TrajectoryLog) -> bool {
    let margin_name = if file.controller == ControllerKind::Cbf {
        "min_h"
    } else {
        "min_margin"
    };
    let inv = monitor_invariance(log, INVARIANCE_TOL);
    let initial = log.records().first().map_or(0.0, |r| r.margin);
    // Runs that start outside the invariant set must not move further out.
    let (inv_pass, inv_rule) = if initial >= 0.0 {
        (inv.pass, format!("{margin_name} >= -{INVARIANCE_TOL}"))
    } else {
        (
            inv.min_margin >= initial - INVARIANCE_TOL,
            format!(
                "starts outside at {}; {margin_name} >= initial - {INVARIANCE_TOL}",
                fmt_f64(initial)
            ),
        )
    };
    let cpl = monitor_cpl(log);
    let _ = writeln!(out, "{margin_name}: {}", fmt_f64(inv.min_margin));
    let _ = writeln!(out, "worst_in_step_violation: {}", fmt_f64(inv.worst_hold_violation));
    let _ = writeln!(out, "invariance: {} ({inv_rule})", verdict(inv_pass));
    let _ = writeln!(
        out,
        "cpl_monotonicity: {} (decreases {}, trace {}, final level {} of {}, sat+inc throughout {})",
        verdict(cpl.pass()),
        cpl.decreases.len(),
        trace(&cpl),
        cpl.final_level,
        cpl.top_level,
        cpl.sat_inc_throughout
    );
    let _ = writeln!(out, "cpl_events:");
    let mut events: Vec<_> = cpl.increases.iter().chain(&cpl.decreases).collect();
    events.sort_by_key(|e| e.step);
    if events.is_empty() {
        let _ = writeln!(out, "  none");
    }
    for e in events {
        let _ = writeln!(out, "  step {} t={} {} -> {}", e.step, fmt_f64(e.t), e.from, e.to);
    }
    let series: Vec<(f64, f64)> = log
        .margin_series()
        .into_iter()
        .map(|(t, m)| (t, if initial < 0.0 { -m } else { m }))
        .collect();
    match fit_exponential_rate(&series) {
        Ok(fit) => {
            let _ = writeln!(
                out,
                "time_constant: {} (k = {}, {} samples)",
                fmt_f64(fit.time_constant),
                file.k,
                fit.samples_used
            );
        }
        Err(e) => {
            let _ = writeln!(out, "time_constant: n/a ({e})");
        }
    }
    inv_pass && cpl.pass()
}

/// Simulates the scenario and writes `trajectory.csv` and `report.txt`.
pub fn run(path: &Path, out_dir: &Path) -> Result<Outcome, CliError> {
    let file = ScenarioFile::load(path)?;
    let built = file.build()?;
    fs::create_dir_all(out_dir)?;
    info!("running {} for {} steps", path.display(), built.scenario.steps()?);
    let outcome = simulate(&built.scenario)?;
    fs::write(out_dir.join("trajectory.csv"), outcome.log.to_csv_string())?;

    let mut report = String::new();
    let _ = writeln!(report, "scenario: {}", path.display());
    let _ = writeln!(report, "system: {}", file.system.name);
    let _ = writeln!(
        report,
        "controller: {}",
        serde_json::to_value(file.controller).expect("enum")
    );
    let _ = writeln!(report, "steps_logged: {}", outcome.log.records().len());
    let pass = write_monitors(&mut report, &file, &outcome.log);
    let result = match &outcome.failure {
        None => {
            let _ = writeln!(report, "verdict: {}", verdict(pass));
            if pass {
                Outcome::Pass
            } else {
                Outcome::Fail
            }
        }
        Some(Error::Infeasible(cert)) => {
            let t = outcome.log.records().len() as f64 * built.scenario.dt;
            let _ = writeln!(report, "infeasible_at: {}", fmt_f64(t));
            let _ = writeln!(report, "certificate: {cert}");
            let _ = writeln!(report, "verdict: INFEASIBLE");
            eprintln!("infeasible at t = {t}: certificate {cert}");
            Outcome::Infeasible
        }
        Some(e) => {
            let _ = writeln!(report, "stopped: {e}");
            let _ = writeln!(report, "verdict: FAIL");
            Outcome::Fail
        }
    };
    fs::write(out_dir.join("report.txt"), &report)?;
    print!("{report}");
    Ok(result)
}

/// Splits a pair budget into state and control sample counts.
fn split_samples(samples: usize) -> (usize, usize) {
    let states = (samples.max(1) as f64).sqrt().ceil() as usize;
    (states, samples.max(1).div_ceil(states))
}

/// Compares the barrier set with its priority-form reduction on a sample
/// grid and writes `agreement.txt` and `disagreements.csv`.
pub fn check_equivalence(path: &Path, samples: usize, out_dir: &Path) -> Result<Outcome, CliError> {
    let file = ScenarioFile::load(path)?;
    let built = file.build()?;
    let Some(barrier) = &built.barrier else {
        return Err(CliError::Config(
            "check-equivalence needs a cbf scenario with a barrier".into(),
        ));
    };
    let partner = file.equivalence_partner(barrier)?;
    let (state_samples, control_samples) = split_samples(samples);
    let opts = AgreementOptions {
        state_samples,
        control_samples,
        mode: file.comparison_mode(),
        ..AgreementOptions::default()
    };
    let report = sets_agree_with(barrier, &partner, &built.system, &built.scenario.control_box, &opts)?;
    fs::create_dir_all(out_dir)?;
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", path.display());
    let _ = writeln!(text, "cbf_k: {}", fmt_f64(barrier.k_gain()));
    let _ = writeln!(text, "bclf_k: {}", fmt_f64(partner.k_gain()));
    text.push_str(&report.summary());
    fs::write(out_dir.join("agreement.txt"), &text)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv, built.system.state_dim(), built.system.control_dim())?;
    fs::write(out_dir.join("disagreements.csv"), csv)?;
    print!("{text}");
    Ok(if report.pass() { Outcome::Pass } else { Outcome::Fail })
}

fn describe(out: &mut String, name: &str, r: &ValidityReport) {
    let worst = r.worst_state.as_ref().map_or_else(|| "none".to_string(), vector);
    let _ = writeln!(
        out,
        "{name}: {} (samples {}, worst margin {}, worst x = {worst}{})",
        verdict(r.pass),
        r.samples_checked,
        fmt_f64(r.worst_margin),
        if r.vacuous { ", vacuous" } else { "" }
    );
}

/// Runs the sampling validity checkers on the scenario's barrier or every
/// finite bound of its priority table.
pub fn validate(path: &Path) -> Result<Outcome, CliError> {
    let file = ScenarioFile::load(path)?;
    let built = file.build()?;
    let opts = SamplingOptions {
        seed: file.seed,
        ..SamplingOptions::default()
    };
    let cbox = &built.scenario.control_box;
    let mut out = String::new();
    let mut pass = true;
    if let Some(barrier) = &built.barrier {
        let r = is_cbf(barrier, &built.system, cbox, &opts)?;
        describe(&mut out, &format!("is_cbf (k = {})", barrier.k_gain()), &r);
        pass &= r.pass;
    }
    if let Some(problem) = &built.problem {
        let _ = writeln!(
            out,
            "table: OK (objectives {}, top level {})",
            problem.objectives.len(),
            problem.top_level()
        );
        for (i, o) in problem.objectives.iter().enumerate() {
            let mut seen: Vec<f64> = Vec::new();
            for b in problem.table.rows()[i].iter().filter_map(|b| match b {
                Bound::Finite(v) => Some(*v),
                Bound::Unbounded => None,
            }) {
                if seen.contains(&b) {
                    continue;
                }
                seen.push(b);
                let r = is_bclf(
                    o,
                    Dynamics::Affine(&built.system),
                    cbox,
                    &built.domain,
                    b,
                    problem.epsilon(),
                    &opts,
                )?;
                let shown = match o.original_sense() {
                    Sense::Le => format!("<= {}", fmt_f64(b)),
                    Sense::Ge => format!(">= {}", fmt_f64(-b)),
                };
                describe(&mut out, &format!("is_bclf {} {shown}", o.label), &r);
                pass &= r.pass;
            }
        }
    }
    let _ = writeln!(out, "verdict: {}", if pass { "VALID" } else { "INVALID" });
    print!("{out}");
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}
