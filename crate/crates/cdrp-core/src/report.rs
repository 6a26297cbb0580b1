//! JSON-serializable experiment and verification reports. Field order is
//! fixed by the struct layout and `serde_json` keeps map insertion order,
//! so serialized output is byte-stable for a given seed regardless of
//! thread count.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::numerics::SeedSpec;

/// Statistics of one experiment, with the seed and parameters needed to
/// reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: Map<String, Value>,
    pub seed: SeedSpec,
    pub statistics: Map<String, Value>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, seed: SeedSpec) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            params: Map::new(),
            seed,
            statistics: Map::new(),
            pass: false,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn stat(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.statistics.insert(key.to_string(), value.into());
        self
    }

    /// The statistics subtree, for determinism comparisons that must
    /// ignore runtimes.
    pub fn statistics_json(&self) -> String {
        serde_json::to_string(&self.statistics).expect("statistics serialize")
    }
}

/// One named check of a verification suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    /// NaN (a degenerate or errored check) crosses JSON as null.
    #[serde(with = "nan_as_null")]
    pub statistic: f64,
    /// Human-readable acceptance rule, e.g. "|mass - 1| < 1e-6".
    pub tolerance: String,
    pub runtime_ms: u64,
    pub seed: SeedSpec,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl CheckReport {
    pub fn detail(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    /// JSON with the runtime field zeroed, for cross-run comparisons.
    pub fn stable_json(&self) -> String {
        let mut c = self.clone();
        c.runtime_ms = 0;
        serde_json::to_string(&c).expect("check serialize")
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Wrap a check body with timing; the body returns (pass, statistic,
/// tolerance text, details).
pub fn timed_check<F>(name: &str, seed: SeedSpec, body: F) -> CheckReport
where
    F: FnOnce() -> (bool, f64, String, Map<String, Value>),
{
    let start = std::time::Instant::now();
    let (pass, statistic, tolerance, details) = body();
    CheckReport {
        name: name.to_string(),
        pass,
        statistic,
        tolerance,
        runtime_ms: start.elapsed().as_millis() as u64,
        seed,
        details,
    }
}
