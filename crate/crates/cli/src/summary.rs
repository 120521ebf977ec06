use serde::{Deserialize, Serialize};

/// One verified quantity. `margin` is positive exactly when the check
/// passes: `threshold − value` for upper bounds, `value − threshold` for
/// lower bounds, `±1` for yes/no checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value < threshold,
            value: Some(value),
            threshold: Some(threshold),
            margin: if value.is_nan() { f64::NEG_INFINITY } else { threshold - value },
            detail: None,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value > threshold,
            value: Some(value),
            threshold: Some(threshold),
            margin: if value.is_nan() { f64::NEG_INFINITY } else { value - threshold },
            detail: None,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            passed: ok,
            value: None,
            threshold: None,
            margin: if ok { 1.0 } else { -1.0 },
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}/{}", self.name);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub verdict: bool,
    pub checks: Vec<Check>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

impl Summary {
    pub fn new(command: &str, checks: Vec<Check>, mut files: Vec<String>) -> Self {
        files.sort();
        Summary { command: command.into(), verdict: checks.iter().all(|c| c.passed), checks, files }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
