//! Named verification suites behind the `verify` command. Each check
//! pins its tolerance in code and reports one pass/fail line; suites are
//! deterministic in `(seed, scale)` regardless of thread count.

mod decompositions;
mod densities;
mod limits;
mod polymer;

use crate::error::{Error, Result};
use crate::numerics::SeedSpec;
use crate::report::CheckReport;

/// Workload scaling for the statistically-sized checks. `1.0` runs the
/// acceptance-grade sizes; smaller values shrink replica counts for smoke
/// and determinism runs (statistics stay deterministic per seed, but the
/// pass flags are only meaningful at full scale).
#[derive(Debug, Clone, Copy)]
pub struct SuiteScale(pub f64);

impl SuiteScale {
    pub fn full() -> Self {
        SuiteScale(1.0)
    }

    pub fn count(&self, full: usize) -> usize {
        ((full as f64 * self.0).round() as usize).max(64)
    }

    /// Replica counts with a floor compatible with experiment contracts.
    pub fn replicas(&self, full: usize) -> usize {
        ((full as f64 * self.0).round() as usize).max(50)
    }
}

pub const SUITES: &[&str] = &["densities", "decompositions", "limits", "polymer"];

/// Run one named suite (or `all`).
pub fn run_suite(name: &str, seed: SeedSpec, scale: SuiteScale) -> Result<Vec<CheckReport>> {
    match name {
        "densities" => Ok(densities::run(seed, scale)),
        "decompositions" => Ok(decompositions::run(seed, scale)),
        "limits" => Ok(limits::run(seed, scale)),
        "polymer" => Ok(polymer::run(seed, scale)),
        "all" => {
            let mut all = Vec::new();
            for s in SUITES {
                all.extend(run_suite(s, seed, scale)?);
            }
            Ok(all)
        }
        other => Err(Error::domain(format!(
            "unknown suite {other:?}; expected one of densities, decompositions, limits, polymer, all"
        ))),
    }
}
