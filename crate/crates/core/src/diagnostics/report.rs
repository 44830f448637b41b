use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

/// Hypothesis a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConditionId {
    B1,
    B2,
    M,
    M1,
    M2,
    M3,
    R,
    R1,
    R2,
    R3,
    G,
    G2,
    G3,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Region over which a verdict is declared: a `u` interval or a `t` range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub variable: &'static str,
    pub lo: f64,
    pub hi: f64,
}

impl Region {
    pub fn u(lo: f64, hi: f64) -> Self {
        Self {
            variable: "u",
            lo,
            hi,
        }
    }

    pub fn t(lo: usize, hi: usize) -> Self {
        Self {
            variable: "t",
            lo: lo as f64,
            hi: hi as f64,
        }
    }
}

/// One evaluation of an inequality `lhs ≤ rhs` (or of a bound).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCheck {
    pub at: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub region: Region,
    /// Summary verdict. For pointwise checks this is the conjunction of
    /// `points[*].holds`; for series checks it is the stated plateau or tail rule.
    pub verdict: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointCheck>,
    pub witnesses: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<ConditionReport>,
}

impl ConditionReport {
    pub fn new(condition: ConditionId, region: Region) -> Self {
        Self {
            condition,
            region,
            verdict: true,
            points: Vec::new(),
            witnesses: BTreeMap::new(),
            parameters: BTreeMap::new(),
            labels: BTreeMap::new(),
            notes: Vec::new(),
            parts: Vec::new(),
        }
    }

    pub fn witness(mut self, key: &str, value: f64) -> Self {
        self.witnesses.insert(key.to_string(), value);
        self
    }

    pub fn parameter(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn label(mut self, key: &str, value: impl Into<String>) -> Self {
        self.labels.insert(key.to_string(), value.into());
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Sets the verdict to the conjunction of the point verdicts.
    pub fn with_points(mut self, points: Vec<PointCheck>) -> Self {
        self.verdict = points.iter().all(|p| p.holds);
        self.points = points;
        self
    }

    /// Attaches sub-reports and ANDs their verdicts into this one.
    pub fn with_parts(mut self, parts: Vec<ConditionReport>) -> Self {
        self.verdict = self.verdict && parts.iter().all(|p| p.verdict);
        self.parts = parts;
        self
    }

    pub fn part(&self, id: ConditionId) -> Option<&ConditionReport> {
        self.parts.iter().find(|p| p.condition == id)
    }
}
