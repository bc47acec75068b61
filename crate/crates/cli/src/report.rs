//! Study tables and their CSV and JSON forms.

use std::fmt::Write as _;

use eplp_core::fem::norms::convergence_order;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CSV_HEADER: &str = "H,h,K,err_u_h1,ord_u_h1,err_p_l2,ord_p_l2,err_u_l2,ord_u_l2,wall_time_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    #[serde(rename = "H")]
    pub coarse_h: f64,
    #[serde(rename = "h")]
    pub fine_h: f64,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub err_u_h1: Option<f64>,
    pub ord_u_h1: Option<f64>,
    pub err_p_l2: Option<f64>,
    pub ord_p_l2: Option<f64>,
    pub err_u_l2: Option<f64>,
    pub ord_u_l2: Option<f64>,
    pub wall_time_s: f64,
    /// Largest relative coarse residual over the cycles (EPLP only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_coarse_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub threads: usize,
    pub wall_time_s: f64,
    pub speedup: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingBlock {
    #[serde(rename = "H")]
    pub coarse_h: f64,
    #[serde(rename = "h")]
    pub fine_h: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub entries: Vec<ScalingEntry>,
    /// Whether the error columns agreed bit for bit across thread counts.
    pub errors_identical: bool,
}

impl ScalingBlock {
    /// `S_p = T(J_1) / T(J)` and `E_p = J_1 T(J_1) / (J T(J))` relative to the
    /// smallest thread count.
    pub fn from_timings(coarse_h: f64, fine_h: f64, k: usize, timings: &[(usize, f64)], errors_identical: bool) -> Self {
        let base = timings.iter().copied().min_by_key(|&(j, _)| j);
        let entries = timings
            .iter()
            .map(|&(j, t)| {
                let (j1, t1) = base.expect("nonempty timings");
                ScalingEntry {
                    threads: j,
                    wall_time_s: t,
                    speedup: t1 / t,
                    efficiency: (j1 as f64 * t1) / (j as f64 * t),
                }
            })
            .collect();
        ScalingBlock { coarse_h, fine_h, k, entries, errors_identical }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub rows: Vec<ReportRow>,
    pub scaling: Option<ScalingBlock>,
}

impl StudyReport {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(ReportRow::failed)
    }

    pub fn methods(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method.as_str()) {
                out.push(&r.method);
            }
        }
        out
    }

    pub fn rows_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// Fills the order columns between consecutive rows of each method.
    pub fn compute_orders(&mut self) {
        let methods: Vec<String> = self.methods().into_iter().map(String::from).collect();
        for m in methods {
            let idx: Vec<usize> = (0..self.rows.len()).filter(|&i| self.rows[i].method == m).collect();
            if let Some(&first) = idx.first() {
                let r = &mut self.rows[first];
                (r.ord_u_h1, r.ord_p_l2, r.ord_u_l2) = (None, None, None);
            }
            for w in idx.windows(2) {
                let (a, b) = (self.rows[w[0]].clone(), &mut self.rows[w[1]]);
                let ord = |ea: Option<f64>, eb: Option<f64>| match (ea, eb) {
                    (Some(x), Some(y)) if x > 0.0 && y > 0.0 => Some(convergence_order(x, y, a.fine_h, b.fine_h)),
                    _ => None,
                };
                b.ord_u_h1 = ord(a.err_u_h1, b.err_u_h1);
                b.ord_p_l2 = ord(a.err_p_l2, b.err_p_l2);
                b.ord_u_l2 = ord(a.err_u_l2, b.err_u_l2);
            }
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Serialize(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// One header and one line per row. With several methods each gets a
    /// `# method=` line and its own header. Failed rows have empty error
    /// fields and a trailing comment.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let methods = self.methods();
        let tagged = methods.len() > 1;
        for m in methods {
            if tagged {
                let _ = writeln!(out, "# method={m}");
            }
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in self.rows_for(m) {
                let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{:.6e},{:.6e},{},{},{},{},{},{},{},{:.6e}",
                    r.coarse_h,
                    r.fine_h,
                    r.k.map(|k| k.to_string()).unwrap_or_default(),
                    opt(r.err_u_h1),
                    opt(r.ord_u_h1),
                    opt(r.err_p_l2),
                    opt(r.ord_p_l2),
                    opt(r.err_u_l2),
                    opt(r.ord_u_l2),
                    r.wall_time_s
                );
            }
            for r in self.rows_for(m).filter(|r| r.failed()) {
                let _ = writeln!(out, "# failed H={:.6e} h={:.6e}: {}", r.coarse_h, r.fine_h, r.failure.as_deref().unwrap_or(""));
            }
        }
        if let Some(s) = &self.scaling {
            let _ = writeln!(
                out,
                "# scaling H={:.6e} h={:.6e} K={} errors_identical={}",
                s.coarse_h, s.fine_h, s.k, s.errors_identical
            );
            out.push_str("J,T_J,S_p,E_p\n");
            for e in &s.entries {
                let _ = writeln!(out, "{},{:.6e},{:.6e},{:.6e}", e.threads, e.wall_time_s, e.speedup, e.efficiency);
            }
        }
        out
    }
}
