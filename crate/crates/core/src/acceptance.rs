//! Acceptance suite: one runnable check per release criterion.
//!
//! Shared by the `acceptance` integration test target and `qrev selftest`.

use serde::{Deserialize, Serialize};

/// Outcome of one criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub metrics: Vec<(String, f64)>,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {}: {} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// Run every acceptance criterion with the given base seed.
pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    let _ = seed;
    Vec::new()
}
