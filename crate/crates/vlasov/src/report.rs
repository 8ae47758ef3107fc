//! Claim records and the aggregated verification report.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

/// How `measured` is compared with `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

impl Relation {
    pub fn holds(self, measured: f64, bound: f64) -> bool {
        match self {
            Relation::AtMost => measured <= bound,
            Relation::Below => measured < bound,
            Relation::AtLeast => measured >= bound,
            Relation::Above => measured > bound,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::Below => "<",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub claim_id: String,
    /// What is being checked, in words.
    pub anchor: String,
    pub measured: f64,
    pub bound: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl Claim {
    pub fn new(id: &str, anchor: &str, measured: f64, relation: Relation, bound: f64) -> Self {
        Self {
            claim_id: id.to_string(),
            anchor: anchor.to_string(),
            measured,
            bound,
            relation,
            pass: relation.holds(measured, bound),
            error: None,
        }
    }

    pub fn at_most(id: &str, anchor: &str, measured: f64, bound: f64) -> Self {
        Self::new(id, anchor, measured, Relation::AtMost, bound)
    }

    /// A claim whose computation failed; it never passes.
    pub fn failed(id: &str, anchor: &str, relation: Relation, bound: f64, error: impl fmt::Display) -> Self {
        Self {
            error: Some(error.to_string()),
            pass: false,
            ..Self::new(id, anchor, f64::NAN, relation, bound)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub mode: String,
    pub claims: Vec<Claim>,
    pub summary: Summary,
}

impl VerifyReport {
    pub fn new(mode: &str, claims: Vec<Claim>) -> Self {
        let passed = claims.iter().filter(|c| c.pass).count();
        Self {
            mode: mode.to_string(),
            summary: Summary {
                total: claims.len(),
                passed,
                failed: claims.len() - passed,
            },
            claims,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.claims.iter().find(|c| c.claim_id == id)
    }

    /// Fixed-width table for terminals.
    pub fn table(&self) -> String {
        let width = self.claims.iter().map(|c| c.claim_id.len()).max().unwrap_or(8).max(8);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>12}     {:>12}  result", "claim", "measured", "bound");
        for c in &self.claims {
            let _ = writeln!(
                out,
                "{:<width$}  {:>12.4e} {:>3} {:>12.4e}  {}",
                c.claim_id,
                c.measured,
                c.relation.symbol(),
                c.bound,
                if c.pass { "pass" } else { "FAIL" },
            );
            if let Some(e) = &c.error {
                let _ = writeln!(out, "{:<width$}  error: {e}", "");
            }
        }
        let _ = writeln!(
            out,
            "{} claims, {} passed, {} failed",
            self.summary.total, self.summary.passed, self.summary.failed
        );
        out
    }
}
