use std::fmt;
use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::error::Result;

/// JSON number with 12 significant digits; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(format!("{x}"));
    }
    let text = format!("{x:.11e}");
    Value::Number(text.parse::<Number>().expect("formatted float is a JSON number"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The check could not be carried out (numerical failure).
    Error,
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Error => "error",
            CheckStatus::Skipped => "skipped",
        })
    }
}

/// Outcome of one pipeline stage.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRecord {
    pub id: &'static str,
    pub status: CheckStatus,
    pub inputs: Map<String, Value>,
    pub constants: Map<String, Value>,
    pub detail: String,
}

impl CheckRecord {
    pub fn new(id: &'static str) -> Self {
        CheckRecord { id, status: CheckStatus::Skipped, inputs: Map::new(), constants: Map::new(), detail: String::new() }
    }

    pub fn input(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.inputs.insert(key.into(), v.into());
        self
    }

    pub fn constant(&mut self, key: &str, v: impl Into<Value>) {
        self.constants.insert(key.into(), v.into());
    }

    pub fn finish(mut self, passed: bool, detail: impl Into<String>) -> Self {
        self.status = if passed { CheckStatus::Pass } else { CheckStatus::Fail };
        self.detail = detail.into();
        self
    }

    pub fn error(mut self, err: impl fmt::Display) -> Self {
        self.status = CheckStatus::Error;
        self.detail = err.to_string();
        self
    }

    pub fn skip(mut self, why: impl Into<String>) -> Self {
        self.status = CheckStatus::Skipped;
        self.detail = why.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("id".into(), self.id.into());
        m.insert("status".into(), self.status.to_string().into());
        m.insert("inputs".into(), Value::Object(self.inputs.clone()));
        m.insert("constants".into(), Value::Object(self.constants.clone()));
        m.insert("detail".into(), self.detail.clone().into());
        Value::Object(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Expanding,
    HyperbolicSet,
    NotExpandingHypothesisViolated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Expanding => "expanding",
            Verdict::HyperbolicSet => "hyperbolic set",
            Verdict::NotExpandingHypothesisViolated => "not expanding — hypothesis violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Verdict, whether the hypotheses and the conclusion were verified, and
/// the implication that was applied.
#[derive(Clone, Debug, PartialEq)]
pub struct VerdictLine {
    pub verdict: Verdict,
    pub hypotheses_verified: bool,
    pub conclusion_verified: bool,
    pub rule: String,
}

/// Pure function of the check outcomes.
pub fn derive_verdict(checks: &[CheckRecord]) -> VerdictLine {
    let status = |id: &str| checks.iter().find(|c| c.id == id).map(|c| c.status);
    let pass = |id: &str| status(id) == Some(CheckStatus::Pass);
    if status("nue").is_some() {
        let hyp = pass("local_diffeo") && pass("nue") && pass("shadowing");
        let concl = pass("adapted_metric");
        if hyp && concl {
            return VerdictLine {
                verdict: Verdict::Expanding,
                hypotheses_verified: true,
                conclusion_verified: true,
                rule: "local diffeomorphism + NUE on periodic points + periodic shadowing => expanding; confirmed by the adapted-metric scan".into(),
            };
        }
        if pass("nue") && status("local_diffeo") == Some(CheckStatus::Fail) {
            return VerdictLine {
                verdict: Verdict::NotExpandingHypothesisViolated,
                hypotheses_verified: false,
                conclusion_verified: false,
                rule: "NUE holds on periodic points but the map has a critical point, so the expansion theorem does not apply".into(),
            };
        }
        return VerdictLine {
            verdict: Verdict::Inconclusive,
            hypotheses_verified: hyp,
            conclusion_verified: concl,
            rule: "expansion hypotheses or conclusion not verified".into(),
        };
    }
    let hyp = pass("nuh") && (pass("domination") || pass("continuity")) && pass("shadowing");
    let concl = pass("hyperbolic_set");
    if hyp && concl {
        return VerdictLine {
            verdict: Verdict::HyperbolicSet,
            hypotheses_verified: true,
            conclusion_verified: true,
            rule: "NUH on periodic points + dominated or continuous splitting + periodic shadowing => hyperbolic set; confirmed by the (c, lambda) certificate".into(),
        };
    }
    VerdictLine {
        verdict: Verdict::Inconclusive,
        hypotheses_verified: hyp,
        conclusion_verified: concl,
        rule: "hyperbolicity hypotheses or conclusion not verified".into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificationReport {
    pub tool: String,
    pub version: String,
    pub model: String,
    pub seed: u64,
    pub config: Value,
    pub checks: Vec<CheckRecord>,
    pub verdict: VerdictLine,
}

impl CertificationReport {
    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), self.tool.clone().into());
        m.insert("version".into(), self.version.clone().into());
        m.insert("model".into(), self.model.clone().into());
        m.insert("seed".into(), self.seed.into());
        m.insert("config".into(), self.config.clone());
        m.insert("checks".into(), Value::Array(self.checks.iter().map(CheckRecord::to_value).collect()));
        m.insert("verdict".into(), self.verdict.verdict.to_string().into());
        m.insert("rule".into(), self.verdict.rule.clone().into());
        m.insert("hypotheses_verified".into(), self.verdict.hypotheses_verified.into());
        m.insert("conclusion_verified".into(), self.verdict.conclusion_verified.into());
        Value::Object(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per check.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "check,status,detail")?;
        for c in &self.checks {
            writeln!(out, "{},{},\"{}\"", c.id, c.status, c.detail.replace('"', "'"))?;
        }
        writeln!(out, "verdict,{},\"{}\"", self.verdict.verdict, self.verdict.rule)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &'static str, ok: bool) -> CheckRecord {
        CheckRecord::new(id).finish(ok, "")
    }

    #[test]
    fn number_format() {
        assert_eq!(num(0.5).to_string(), "5.00000000000e-1");
        assert_eq!(num(f64::INFINITY), Value::String("inf".into()));
    }

    #[test]
    fn expanding_needs_all_four() {
        let mut c = vec![rec("local_diffeo", true), rec("nue", true), rec("shadowing", true), rec("adapted_metric", true)];
        assert_eq!(derive_verdict(&c).verdict, Verdict::Expanding);
        c[3] = rec("adapted_metric", false);
        let v = derive_verdict(&c);
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert!(v.hypotheses_verified && !v.conclusion_verified);
    }

    #[test]
    fn critical_point_verdict() {
        let c = vec![rec("local_diffeo", false), rec("nue", true), rec("shadowing", false)];
        assert_eq!(derive_verdict(&c).verdict, Verdict::NotExpandingHypothesisViolated);
    }

    #[test]
    fn hyperbolic_alternatives() {
        let base = |dom: bool, cont: bool| {
            vec![rec("nuh", true), rec("domination", dom), rec("continuity", cont), rec("shadowing", true), rec("hyperbolic_set", true)]
        };
        assert_eq!(derive_verdict(&base(true, false)).verdict, Verdict::HyperbolicSet);
        assert_eq!(derive_verdict(&base(false, true)).verdict, Verdict::HyperbolicSet);
        assert_eq!(derive_verdict(&base(false, false)).verdict, Verdict::Inconclusive);
    }
}
