use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use regglab::SeedSpec;

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub base_seed: u64,
    pub stream_index: u64,
}

impl From<SeedSpec> for SeedRecord {
    fn from(s: SeedSpec) -> Self {
        Self {
            base_seed: s.base_seed,
            stream_index: s.stream_index,
        }
    }
}

/// One experiment run. Keys serialize in sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub command: String,
    pub version: String,
    pub seed: SeedRecord,
    pub params: BTreeMap<String, Value>,
    pub results: BTreeMap<String, Value>,
    /// Hard theorem checks. Any `false` makes the run exit with status 1.
    pub checks: BTreeMap<String, bool>,
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn new(command: &str, seed: SeedSpec) -> Self {
        Self {
            schema: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: seed.into(),
            params: BTreeMap::new(),
            results: BTreeMap::new(),
            checks: BTreeMap::new(),
            runtime_ms: 0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.params.insert(key.to_string(), json!(value));
    }

    pub fn result(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }

    pub fn check(&mut self, key: &str, ok: bool) {
        self.checks.insert(key.to_string(), ok);
    }

    pub fn passed(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is plain data");
        serde_json::to_string_pretty(&value).expect("report is plain data")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// A real number as JSON; non-finite values become strings.
pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

/// An exact rational as `{"exact": "p/q", "approx": f64}`.
pub fn rational(x: &BigRational) -> Value {
    json!({
        "exact": x.to_string(),
        "approx": real(x.to_f64().unwrap_or(f64::NAN)),
    })
}
