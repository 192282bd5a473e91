use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    /// Slack to the threshold; negative when the assertion fails.
    pub margin: f64,
    pub detail: String,
}

impl Assertion {
    /// `value <= limit`
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            margin: limit - value,
            detail: format!("{value:e} <= {limit:e}"),
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            margin: if passed { 0.0 } else { -1.0 },
            detail: detail.into(),
        }
    }
}

/// What one experiment produced, before anything is written.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub derived: Map<String, Value>,
    pub assertions: Vec<Assertion>,
    /// `(file name, contents)`
    pub files: Vec<(String, String)>,
    /// Fitted and predicted rate, for sweep rows.
    pub rates: Option<(f64, f64)>,
}

impl Outcome {
    pub fn set(&mut self, key: &str, v: impl Serialize) {
        self.derived
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn json(&mut self, name: &str, v: &impl Serialize) {
        let text = serde_json::to_string_pretty(v).unwrap_or_else(|_| "null".into());
        self.file(name, text + "\n");
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    AssertionFailure,
    ConfigError,
    NumericalFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::AssertionFailure => 1,
            Self::ConfigError => 2,
            Self::NumericalFailure => 3,
        }
    }

    pub fn from_code(code: i32) -> Self {
        match code {
            0 => Self::Pass,
            1 => Self::AssertionFailure,
            2 => Self::ConfigError,
            _ => Self::NumericalFailure,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub program: String,
    pub version: String,
    pub subcommand: Option<String>,
    pub config_path: Option<String>,
    pub seed: u64,
    pub workers: Option<usize>,
    /// Parsed configuration, or the raw text when it did not parse.
    pub config: Value,
    pub rescaling: Value,
    pub derived: Map<String, Value>,
    pub assertions: Vec<Assertion>,
    pub status: Status,
    pub exit_code: i32,
    pub error: Option<String>,
    pub wall_clock_seconds: f64,
    pub artifacts: Vec<String>,
}
