//! Grid reports shared by all bound-verification suites.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

/// One grid point of a bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub abscissa: f64,
    pub statistic: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
    /// Point excluded from pass/fail because noise or admissibility made it
    /// uninformative.
    pub inconclusive: bool,
}

impl EnvelopePoint {
    /// Builds a point whose pass flag is `lower <= statistic <= upper`.
    pub fn checked(abscissa: f64, statistic: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let pass = statistic.is_finite()
            && lower.is_none_or(|l| l <= statistic)
            && upper.is_none_or(|u| statistic <= u);
        EnvelopePoint { abscissa, statistic, lower, upper, pass, inconclusive: false }
    }

    /// Like [`checked`](Self::checked) with a slack `tol` on both sides.
    pub fn checked_within(abscissa: f64, statistic: f64, lower: Option<f64>, upper: Option<f64>, tol: f64) -> Self {
        let mut p = Self::checked(abscissa, statistic, lower, upper);
        p.pass = statistic.is_finite()
            && lower.is_none_or(|l| l - tol <= statistic)
            && upper.is_none_or(|u| statistic <= u + tol);
        p
    }

    pub fn inconclusive(abscissa: f64, statistic: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        EnvelopePoint { abscissa, statistic, lower, upper, pass: true, inconclusive: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeSummary {
    pub min: f64,
    pub max: f64,
    pub argmin: f64,
    pub argmax: f64,
    pub all_pass: bool,
    pub n_points: usize,
    pub n_inconclusive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub name: String,
    pub points: Vec<EnvelopePoint>,
    pub summary: EnvelopeSummary,
    /// Named scalar side results (fitted slopes, constants, thresholds).
    pub extras: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl EnvelopeReport {
    pub fn new(name: impl Into<String>, points: Vec<EnvelopePoint>) -> Self {
        let summary = summarize(&points);
        EnvelopeReport { name: name.into(), points, summary, extras: BTreeMap::new(), notes: Vec::new() }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Forces the overall verdict to fail while keeping per-point flags.
    pub fn fail_overall(&mut self) {
        self.summary.all_pass = false;
    }

    pub fn all_pass(&self) -> bool {
        self.summary.all_pass
    }

    /// CSV with a versioned header comment, one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {} v1", self.name);
        for (k, v) in &self.extras {
            let _ = writeln!(out, "# {k}={v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "# note: {n}");
        }
        out.push_str("abscissa,statistic,lower,upper,pass\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for p in &self.points {
            let pass = if p.inconclusive { "inconclusive" } else if p.pass { "true" } else { "false" };
            let _ = writeln!(out, "{},{},{},{},{}", p.abscissa, p.statistic, opt(p.lower), opt(p.upper), pass);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn summarize(points: &[EnvelopePoint]) -> EnvelopeSummary {
    let mut s = EnvelopeSummary {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        argmin: f64::NAN,
        argmax: f64::NAN,
        all_pass: true,
        n_points: points.len(),
        n_inconclusive: 0,
    };
    for p in points {
        if p.inconclusive {
            s.n_inconclusive += 1;
            continue;
        }
        s.all_pass &= p.pass;
        if p.statistic < s.min {
            s.min = p.statistic;
            s.argmin = p.abscissa;
        }
        if p.statistic > s.max {
            s.max = p.statistic;
            s.argmax = p.abscissa;
        }
    }
    s
}
