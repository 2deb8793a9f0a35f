//! Property reports shared by every checker.
//!
//! A `holds` verdict is sampling evidence, not a proof. A `fails` verdict
//! always carries at least one witness that violates the inequality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::field::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// One sample at which a checked inequality `lhs <= rhs` was evaluated.
/// For pair-based checks `s` and `t` carry `|ξ|` and `|η|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Point,
    pub s: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Witness {
    pub fn new(x: Point, s: f64, t: f64, lhs: f64, rhs: f64) -> Witness {
        Witness { x, s, t, lhs, rhs }
    }
}

/// Maximum number of witnesses kept in a report.
pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    pub constants: BTreeMap<String, f64>,
    pub witnesses: Vec<Witness>,
    pub samples: usize,
}

impl PropertyReport {
    pub fn holds(property: &str, constants: &[(&str, f64)], samples: usize) -> Self {
        PropertyReport {
            property: property.to_string(),
            verdict: Verdict::Holds,
            constants: constants
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            witnesses: Vec::new(),
            samples,
        }
    }

    /// # Panics
    /// If `witnesses` is empty.
    pub fn fails(property: &str, mut witnesses: Vec<Witness>, samples: usize) -> Self {
        assert!(!witnesses.is_empty(), "a failing report needs a witness");
        witnesses.truncate(MAX_WITNESSES);
        PropertyReport {
            property: property.to_string(),
            verdict: Verdict::Fails,
            constants: BTreeMap::new(),
            witnesses,
            samples,
        }
    }

    pub fn inconclusive(property: &str, samples: usize) -> Self {
        PropertyReport {
            property: property.to_string(),
            verdict: Verdict::Inconclusive,
            constants: BTreeMap::new(),
            witnesses: Vec::new(),
            samples,
        }
    }

    pub fn is_holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Running minimum that keeps the first extremal index, so the
/// result does not depend on how a sweep is partitioned.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Extremum {
    pub value: f64,
    pub index: usize,
}

impl Extremum {
    pub fn min_identity() -> Self {
        Extremum {
            value: f64::INFINITY,
            index: usize::MAX,
        }
    }

    pub fn min(a: Self, b: Self) -> Self {
        if b.value < a.value || (b.value == a.value && b.index < a.index) {
            b
        } else {
            a
        }
    }
}
