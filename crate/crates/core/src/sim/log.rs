use std::io::{self, Write};

use nalgebra::DVector;

use super::LogTier;

/// Formats with 17 significant digits (`d.dddddddddddddddde±x`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    /// `h_i(x)` for barrier controllers, canonical `V_i(x)` otherwise.
    pub values: Vec<f64>,
    pub cpl: usize,
    pub tier: LogTier,
    /// Smallest slack of the enforced constraints at `(x, u)`.
    pub min_residual: f64,
    /// Invariance margin: `min h_i`, or `min (b_{i,j0} − V_i)` at the
    /// initial level `j0`.
    pub margin: f64,
    /// Residual of the same invariance constraints for the held `u` at the
    /// end of the step. `None` on the final record.
    pub hold_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelChange {
    pub step: usize,
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    state_dim: usize,
    control_dim: usize,
    value_labels: Vec<String>,
    dt: f64,
    top_level: usize,
    records: Vec<StepRecord>,
}

impl TrajectoryLog {
    pub fn new(state_dim: usize, control_dim: usize, value_labels: Vec<String>, dt: f64, top_level: usize) -> Self {
        TrajectoryLog {
            state_dim,
            control_dim,
            value_labels,
            dt,
            top_level,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: StepRecord) {
        debug_assert_eq!(record.x.len(), self.state_dim);
        debug_assert_eq!(record.u.len(), self.control_dim);
        self.records.push(record);
    }

    pub(crate) fn set_last_hold_residual(&mut self, r: f64) {
        if let Some(last) = self.records.last_mut() {
            last.hold_residual = Some(r);
        }
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn value_labels(&self) -> &[String] {
        &self.value_labels
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn top_level(&self) -> usize {
        self.top_level
    }

    pub fn min_margin(&self) -> f64 {
        self.records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    /// Every change of the logged priority level, in time order.
    pub fn level_changes(&self) -> Vec<LevelChange> {
        self.records
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].cpl != w[1].cpl)
            .map(|(k, w)| LevelChange {
                step: k + 1,
                t: w[1].t,
                from: w[0].cpl,
                to: w[1].cpl,
            })
            .collect()
    }

    /// `(t, margin)` pairs.
    pub fn margin_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.margin)).collect()
    }

    /// `(t, values[index])` pairs.
    pub fn value_series(&self, index: usize) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.values[index])).collect()
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=self.state_dim).map(|i| format!("x_{i}")));
        cols.extend((1..=self.control_dim).map(|i| format!("u_{i}")));
        cols.extend(self.value_labels.iter().cloned());
        cols.extend(["cpl", "tier", "min_residual"].map(String::from));
        cols.join(",")
    }

    /// `t,x_1..x_n,u_1..u_m,<values>,cpl,tier,min_residual`, one row per step.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            line.push_str(&fmt_f64(r.t));
            for v in r.x.iter().chain(r.u.iter()).chain(r.values.iter()) {
                line.push(',');
                line.push_str(&fmt_f64(*v));
            }
            line.push(',');
            line.push_str(&r.cpl.to_string());
            line.push(',');
            line.push_str(r.tier.as_str());
            line.push(',');
            line.push_str(&fmt_f64(r.min_residual));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}
