//! Machine-readable experiment reports.
//!
//! JSON is emitted by hand so that numeric fields carry exactly 17
//! significant digits and two runs of the same configuration produce
//! byte-identical output (modulo the wall-time field). Non-finite values
//! serialize as `null`. CSV carries one row per verdict (or one row per
//! layer prediction when there are no verdicts).

use crate::moments::{MomentPrediction, ScheduleCheck};
use crate::stats::Verdict;

/// One verdict row of a report, tagged with the probed layer/neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub label: String,
    pub k: Option<usize>,
    pub p: Option<usize>,
    pub predicted: f64,
    pub estimated: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
    pub n_trials: u64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    /// Bound sweeps: smallest observed margin (log2 ratio or linear slack).
    pub min_margin: Option<f64>,
    /// Bound sweeps: index attaining the smallest margin.
    pub worst_index: Option<u64>,
}

impl VerdictRow {
    pub fn new(v: Verdict, k: Option<usize>, p: Option<usize>) -> Self {
        Self {
            label: v.label,
            k,
            p,
            predicted: v.predicted,
            estimated: v.estimated,
            std_error: v.std_error,
            z_score: v.z_score,
            pass: v.pass,
            n_trials: v.n_trials,
            lo: v.lo,
            hi: v.hi,
            min_margin: None,
            worst_index: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
}

impl Summary {
    pub fn from_verdicts(verdicts: &[VerdictRow]) -> Self {
        let passed = verdicts.iter().filter(|v| v.pass).count();
        Self {
            total: verdicts.len(),
            passed,
            failed: verdicts.len() - passed,
            all_pass: passed == verdicts.len(),
        }
    }
}

/// Full outcome of a predict/verify/bounds run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    /// Ordered key-value echo of the configuration.
    pub config: Vec<(String, String)>,
    pub predictions: Vec<MomentPrediction>,
    pub schedule_checks: Vec<ScheduleCheck>,
    pub verdicts: Vec<VerdictRow>,
    pub summary: Summary,
    /// `None` on targets without a monotonic clock (wasm) — and excluded
    /// from reproducibility comparisons either way.
    pub wall_time_seconds: Option<f64>,
}

/// 17 significant digits; non-finite becomes JSON null.
fn json_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn json_opt_usize(v: Option<usize>) -> String {
    v.map_or("null".into(), |x| x.to_string())
}

fn json_opt_f64(v: Option<f64>) -> String {
    v.map_or("null".into(), json_f64)
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        s.push_str(&format!("  \"command\": {},\n", json_str(&self.command)));
        s.push_str("  \"config\": {");
        for (i, (k, v)) in self.config.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("\n    {}: {}", json_str(k), json_str(v)));
        }
        s.push_str("\n  },\n");

        s.push_str("  \"predictions\": [");
        for (i, p) in self.predictions.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!(
                "\n    {{\"k\": {}, \"s_k\": {}, \"first_moment_exact\": {}, \
                 \"first_moment_lo\": {}, \"first_moment_hi\": {}, \"second_moment\": {}, \
                 \"variance_lo\": {}, \"variance_hi\": {}, \"variance_lo_vacuous\": {}, \
                 \"backward_variance\": {}, \"width_ok\": {}}}",
                p.k,
                json_f64(p.s_k),
                json_f64(p.first_moment_exact),
                json_f64(p.first_moment_lo),
                json_f64(p.first_moment_hi),
                json_f64(p.second_moment),
                json_f64(p.variance_lo),
                json_f64(p.variance_hi),
                p.variance_lo_vacuous,
                json_f64(p.backward_variance),
                p.width_ok,
            ));
        }
        s.push_str("\n  ],\n");

        s.push_str("  \"schedule_checks\": [");
        for (i, c) in self.schedule_checks.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!(
                "\n    {{\"k\": {}, \"fan_in_beta_match\": {}, \"forward_scale_preserved\": {}, \
                 \"fan_out_beta_match\": {}, \"backward_variance_preserved\": {}}}",
                c.k,
                c.fan_in_beta_match,
                c.forward_scale_preserved,
                c.fan_out_beta_match,
                c.backward_variance_preserved,
            ));
        }
        s.push_str("\n  ],\n");

        s.push_str("  \"verdicts\": [");
        for (i, v) in self.verdicts.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!(
                "\n    {{\"label\": {}, \"k\": {}, \"p\": {}, \"predicted\": {}, \
                 \"estimated\": {}, \"std_error\": {}, \"z\": {}, \"pass\": {}, \
                 \"n_trials\": {}",
                json_str(&v.label),
                json_opt_usize(v.k),
                json_opt_usize(v.p),
                json_f64(v.predicted),
                json_f64(v.estimated),
                json_f64(v.std_error),
                json_f64(v.z_score),
                v.pass,
                v.n_trials,
            ));
            if v.lo.is_some() || v.hi.is_some() {
                s.push_str(&format!(
                    ", \"lo\": {}, \"hi\": {}",
                    json_opt_f64(v.lo),
                    json_opt_f64(v.hi)
                ));
            }
            if v.min_margin.is_some() {
                s.push_str(&format!(
                    ", \"min_margin\": {}, \"worst_index\": {}",
                    json_opt_f64(v.min_margin),
                    v.worst_index.unwrap_or(0)
                ));
            }
            s.push('}');
        }
        s.push_str("\n  ],\n");

        s.push_str(&format!(
            "  \"summary\": {{\"total\": {}, \"passed\": {}, \"failed\": {}, \"all_pass\": {}}},\n",
            self.summary.total, self.summary.passed, self.summary.failed, self.summary.all_pass
        ));
        s.push_str(&format!(
            "  \"wall_time_seconds\": {}\n",
            json_opt_f64(self.wall_time_seconds)
        ));
        s.push('}');
        s.push('\n');
        s
    }

    /// One row per verdict; for prediction-only reports, one row per layer.
    pub fn to_csv(&self) -> String {
        let f = |v: f64| {
            if v.is_finite() {
                format!("{v:.16e}")
            } else {
                String::new()
            }
        };
        let opt_f = |v: Option<f64>| v.map_or(String::new(), &f);
        if self.verdicts.is_empty() {
            let mut s = String::from(
                "k,s_k,first_moment_exact,first_moment_lo,first_moment_hi,second_moment,\
                 variance_lo,variance_hi,variance_lo_vacuous,backward_variance,width_ok\n",
            );
            for p in &self.predictions {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    p.k,
                    f(p.s_k),
                    f(p.first_moment_exact),
                    f(p.first_moment_lo),
                    f(p.first_moment_hi),
                    f(p.second_moment),
                    f(p.variance_lo),
                    f(p.variance_hi),
                    p.variance_lo_vacuous,
                    f(p.backward_variance),
                    p.width_ok,
                ));
            }
            return s;
        }
        let mut s = String::from(
            "label,k,p,predicted,estimated,std_error,z,pass,n_trials,lo,hi,min_margin,worst_index\n",
        );
        for v in &self.verdicts {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                v.label,
                v.k.map_or(String::new(), |x| x.to_string()),
                v.p.map_or(String::new(), |x| x.to_string()),
                f(v.predicted),
                f(v.estimated),
                f(v.std_error),
                f(v.z_score),
                v.pass,
                v.n_trials,
                opt_f(v.lo),
                opt_f(v.hi),
                opt_f(v.min_margin),
                v.worst_index.map_or(String::new(), |x| x.to_string()),
            ));
        }
        s
    }
}
