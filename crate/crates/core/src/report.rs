//! Report envelope shared by every command: which claim was checked, with
//! which tool build, seed, and parameters — so any output can be reproduced
//! and diffed byte for byte.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

pub const TOOL_NAME: &str = "slinv";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The modular field a character table was computed in, when one was used.
#[derive(Serialize, Clone, Copy)]
pub struct FieldChoice {
    pub ell: u64,
    pub exponent: u64,
}

#[derive(Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    /// Stable slug naming the claim being checked.
    pub claim: &'static str,
    pub seed: u64,
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldChoice>,
    pub verdict: String,
    pub body: Value,
}

impl Report {
    pub fn new(claim: &'static str, seed: u64, params: Value, verdict: &str, body: Value) -> Self {
        Report {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            claim,
            seed,
            params,
            field: None,
            verdict: verdict.to_string(),
            body,
        }
    }

    pub fn with_field(mut self, ell: u64, exponent: u64) -> Self {
        self.field = Some(FieldChoice { ell, exponent });
        self
    }

    /// Canonical machine rendering: pretty JSON, field order fixed by the
    /// struct, one trailing newline.
    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// Two-column plain-text block with dotted alignment, for human summaries.
pub fn aligned(pairs: &[(String, String)]) -> String {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "  {k:<width$}  {v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn envelope_shape_and_determinism() {
        let mk = || {
            Report::new("sample-claim", 7, json!({"level": 2}), "PASS", json!({"x": 1}))
                .with_field(421, 420)
        };
        let a = mk().render_json();
        let b = mk().render_json();
        assert_eq!(a, b);
        assert!(a.ends_with('\n'));
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["tool"], "slinv");
        assert_eq!(v["claim"], "sample-claim");
        assert_eq!(v["seed"], 7);
        assert_eq!(v["field"]["ell"], 421);
        assert_eq!(v["verdict"], "PASS");

        let bare = Report::new("other", 0, json!({}), "FAIL", json!(null)).render_json();
        let v: Value = serde_json::from_str(&bare).unwrap();
        assert!(v.get("field").is_none());
    }

    #[test]
    fn aligned_pads_keys() {
        let text = aligned(&[("a".into(), "1".into()), ("long".into(), "2".into())]);
        assert_eq!(text, "  a     1\n  long  2\n");
    }
}
