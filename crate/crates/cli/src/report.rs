//! Machine-readable analysis reports.

use std::io;

use crystal_core::crystal::Timings;
use crystal_core::{Diagnostics, Point, Stage, Vector, Verdict, WindowedSet};
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Key that starts the timing block; everything before it is deterministic.
pub const TIMINGS_KEY: &str = "\"timings_ms\":";

/// Writes every float with 17 significant digits.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    pub path: String,
    pub label: String,
    pub points: usize,
    pub dim: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodEntry {
    #[serde(rename = "T")]
    pub t: Vector,
    pub verified_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub verdict: &'static str,
    pub stage: Option<Stage>,
    pub reason: Option<String>,
    pub input: InputSummary,
    pub config: RunConfig,
    pub epsilon: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub periods: Vec<PeriodEntry>,
    pub basis: Option<Vec<Vector>>,
    pub det: Option<f64>,
    pub residues: Option<Vec<Point>>,
    pub coverage_in: Option<f64>,
    pub coverage_out: Option<f64>,
    pub max_residual: Option<f64>,
    pub witnesses: Vec<Point>,
    pub diagnostics: Diagnostics,
    pub timings_ms: Timings,
}

impl Report {
    pub fn new(path: &str, set: &WindowedSet, config: &RunConfig, verdict: &Verdict) -> Self {
        let diagnostics = verdict.diagnostics().clone();
        let mut report = Report {
            schema_version: SCHEMA_VERSION,
            verdict: "no-crystal",
            stage: None,
            reason: None,
            input: InputSummary {
                path: path.to_string(),
                label: set.label().to_string(),
                points: set.len(),
                dim: set.dim(),
                radius: set.radius(),
            },
            config: config.clone(),
            epsilon: diagnostics.epsilon,
            d: diagnostics.d,
            periods: Vec::new(),
            basis: None,
            det: None,
            residues: None,
            coverage_in: None,
            coverage_out: None,
            max_residual: None,
            witnesses: Vec::new(),
            diagnostics,
            timings_ms: verdict.timings().clone(),
        };
        match verdict {
            Verdict::Crystal(c) => {
                let d = &c.decomposition;
                report.verdict = "crystal";
                report.periods = entries(c.periods.iter().map(|p| (&p.t, p.verified_radius)));
                report.basis = Some(d.lattice.basis().to_vec());
                report.det = Some(d.lattice.det());
                report.residues = Some(d.residues.clone());
                report.coverage_in = Some(d.coverage_in);
                report.coverage_out = Some(d.coverage_out);
                report.max_residual = Some(d.max_residual);
            }
            Verdict::NoCrystal(e) => {
                report.stage = Some(e.stage);
                report.reason = Some(e.reason.clone());
                report.periods = entries(e.periods.iter().map(|p| (&p.t, p.verified_radius)));
                report.witnesses = e.witnesses.clone();
            }
        }
        report
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17);
        self.serialize(&mut ser).expect("report serializes");
        out.push(b'\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<14}{v}\n"));
        line("verdict", self.verdict.to_string());
        if let Some(stage) = self.stage {
            line("stage", stage_name(stage));
        }
        if let Some(r) = &self.reason {
            line("reason", r.clone());
        }
        line(
            "input",
            format!(
                "{} ({} points, dim {}, R = {})",
                self.input.path, self.input.points, self.input.dim, self.input.radius
            ),
        );
        if let Some(e) = self.epsilon {
            line("epsilon", format!("{e:.6}"));
        }
        if let Some(d) = self.d {
            line("D", format!("{d:.6}"));
        }
        line("periods", self.periods.len().to_string());
        if let Some(basis) = &self.basis {
            for (i, b) in basis.iter().enumerate() {
                line(&format!("T{}", i + 1), format!("{b}"));
            }
        }
        if let Some(det) = self.det {
            line("det", format!("{det:.9}"));
        }
        if let Some(f) = &self.residues {
            line("residues", f.len().to_string());
        }
        if let (Some(a), Some(b)) = (self.coverage_in, self.coverage_out) {
            line("coverage", format!("in {a}, out {b}"));
        }
        if let Some(r) = self.max_residual {
            line("max_residual", format!("{r:.3e}"));
        }
        s
    }
}

fn entries<'a>(it: impl Iterator<Item = (&'a Vector, f64)>) -> Vec<PeriodEntry> {
    it.map(|(t, verified_radius)| PeriodEntry {
        t: t.clone(),
        verified_radius,
    })
    .collect()
}

pub fn stage_name(stage: Stage) -> String {
    serde_json::to_value(stage)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// The report bytes before the timing block.
pub fn strip_timings(report: &[u8]) -> &[u8] {
    let key = TIMINGS_KEY.as_bytes();
    report
        .windows(key.len())
        .position(|w| w == key)
        .map_or(report, |i| &report[..i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17);
        vec![1.0, 0.1, -2.5e-10].serialize(&mut ser).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(
            s,
            "[1.0000000000000000e0,1.0000000000000001e-1,-2.5000000000000002e-10]"
        );
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![1.0, 0.1, -2.5e-10]);
    }

    #[test]
    fn stage_names_are_kebab_case() {
        assert_eq!(stage_name(Stage::PeriodVerification), "period-verification");
    }

    #[test]
    fn stripping_timings() {
        assert_eq!(strip_timings(b"{\"a\":1,\"timings_ms\":{}}"), b"{\"a\":1,");
        assert_eq!(strip_timings(b"{}"), b"{}");
    }
}
