//! Statistical tests for association and the weaker positive-dependence
//! notions, with the implication map used as a consistency oracle.

mod estimators;
mod implication;

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::levy::Calibration;

pub use estimators::{
    assoc_test, covariance_with_jackknife, default_partitions, independent_copy, plod_test, pod,
    psa_test, psd_test, puod_test, quantile_thresholds, spatial_suite, spatial_test,
    temporal_assoc_test, wa_test, DEFAULT_QUANTILES, MIN_CELL_COUNT, MIN_SAMPLES,
};
pub use implication::{implication_consistency, implies, ImplicationViolation, ARROWS};

/// Rows of a sample, `n × d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    dim: usize,
}

impl SampleMatrix {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(invalid(
                "samples",
                format!("{} values do not form rows of length {dim}", data.len()),
            ));
        }
        Ok(Self { data, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("samples", "ragged rows"));
        }
        Self::new(rows.concat(), dim)
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Applies `f` coordinatewise, `x_ij ↦ f(j, x_ij)`.
    pub fn map_coordinates(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let d = self.dim;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| f(k % d, *v))
            .collect();
        Self { data, dim: d }
    }

    /// Sample quantile of column `j` (type 7, linear interpolation).
    pub fn quantile(&self, j: usize, q: f64) -> f64 {
        let mut c = self.column(j);
        c.sort_by(f64::total_cmp);
        quantile_sorted(&c, q)
    }

    /// Median location and a robust scale (normalised IQR, falling back to
    /// the standard deviation and then to one) per coordinate.
    pub fn calibration(&self) -> Calibration {
        let mut location = Vec::with_capacity(self.dim);
        let mut scale = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut c = self.column(j);
            c.sort_by(f64::total_cmp);
            location.push(quantile_sorted(&c, 0.5));
            let iqr = (quantile_sorted(&c, 0.75) - quantile_sorted(&c, 0.25)) / 1.349;
            let sd = crate::numeric::sample_variance(&c).sqrt();
            scale.push(if iqr > 0.0 {
                iqr
            } else if sd > 0.0 {
                sd
            } else {
                1.0
            });
        }
        Calibration { location, scale }
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// The dependence notions under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    A,
    WA,
    PSA,
    PSD,
    PUOD,
    PLOD,
    POD,
    TemporalA,
}

impl TestKind {
    pub const SPATIAL: [TestKind; 7] = [
        TestKind::A,
        TestKind::WA,
        TestKind::PSA,
        TestKind::PSD,
        TestKind::PUOD,
        TestKind::PLOD,
        TestKind::POD,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Self::A => "A",
            Self::WA => "WA",
            Self::PSA => "PSA",
            Self::PSD => "PSD",
            Self::PUOD => "PUOD",
            Self::PLOD => "PLOD",
            Self::POD => "POD",
            Self::TemporalA => "TemporalA",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// One-sided rule: violated below `-3 se`, consistent otherwise. A small
    /// absolute floor absorbs rounding in exactly degenerate estimates.
    pub fn from_estimate(estimate: f64, se: f64) -> Self {
        if !(estimate.is_finite() && se.is_finite()) {
            Self::Inconclusive
        } else if estimate < -SE_MULTIPLIER * se - 1e-12 {
            Self::Violated
        } else {
            Self::Consistent
        }
    }

    /// Conjunction used for POD.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Self::Violated, _) | (_, Self::Violated) => Self::Violated,
            (Self::Consistent, Self::Consistent) => Self::Consistent,
            _ => Self::Inconclusive,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Consistent => "consistent",
            Self::Violated => "violated",
            Self::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub const SE_MULTIPLIER: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub estimate: f64,
    pub se: f64,
    pub verdict: Verdict,
}

impl ReportRow {
    pub fn new(id: impl Into<String>, estimate: f64, se: f64) -> Self {
        Self {
            id: id.into(),
            estimate,
            se,
            verdict: Verdict::from_estimate(estimate, se),
        }
    }

    pub fn inconclusive(id: impl Into<String>, estimate: f64, se: f64) -> Self {
        Self {
            id: id.into(),
            estimate,
            se,
            verdict: Verdict::Inconclusive,
        }
    }

    /// Lower end of the one-sided interval.
    pub fn lower_bound(&self) -> f64 {
        self.estimate - SE_MULTIPLIER * self.se
    }

    /// Strictly positive beyond the rule's margin.
    pub fn is_powered(&self) -> bool {
        self.verdict == Verdict::Consistent && self.estimate > SE_MULTIPLIER * self.se
    }
}

/// Per-instance estimates of one dependence test on one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub test: TestKind,
    pub rows: Vec<ReportRow>,
    pub n: usize,
    pub seed: u64,
    pub verdict: Verdict,
    pub rule: String,
}

impl DependenceReport {
    pub fn new(test: TestKind, rows: Vec<ReportRow>, n: usize, seed: u64) -> Self {
        let verdict = overall(&rows);
        let rule = rule_text(rows.len());
        Self {
            test,
            rows,
            n,
            seed,
            verdict,
            rule,
        }
    }

    /// Some row is positive beyond the margin while none is violated.
    pub fn is_powered(&self) -> bool {
        self.verdict == Verdict::Consistent && self.rows.iter().any(ReportRow::is_powered)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Violated)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "test": self.test,
            "rows": self.rows,
            "n": self.n,
            "seed": self.seed,
            "verdict": self.verdict,
            "rule": self.rule,
        })
    }

    pub fn csv_header() -> &'static str {
        "test,id,estimate,se,verdict"
    }

    /// Flattened rows, without the header.
    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.test,
                csv_field(&r.id),
                r.estimate,
                r.se,
                r.verdict
            )?;
        }
        Ok(())
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Violated if any row is, consistent if at least one row is decided and
/// none is violated, otherwise inconclusive.
fn overall(rows: &[ReportRow]) -> Verdict {
    if rows.iter().any(|r| r.verdict == Verdict::Violated) {
        Verdict::Violated
    } else if rows.iter().any(|r| r.verdict == Verdict::Consistent) {
        Verdict::Consistent
    } else {
        Verdict::Inconclusive
    }
}

fn rule_text(k: usize) -> String {
    // One-sided normal tail at 3 s.e. is about 1.35e-3 per row.
    let familywise = (k as f64 * 1.35e-3).min(1.0);
    format!(
        "one-sided: violated if estimate < -3 se; minimum n = {MIN_SAMPLES}; \
         {k} rows, Bonferroni familywise false-violation bound {familywise:.3}"
    )
}
