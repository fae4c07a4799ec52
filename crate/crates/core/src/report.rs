//! Command reports and their text and JSON renderings.
//!
//! Every command produces one [`Report`]. In JSON form the object always has
//! `command`, `verdict`, `type` and `diagnostics`; the remaining fields appear
//! only when the command produces them.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::frontend::Span;
use crate::oracle::laws::LawReport;
use crate::oracle::Counterexample;
use crate::views::ViewPair;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{file}:{}:{}", self.line, self.column),
            None => write!(f, "{}:{}", self.line, self.column),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: &'static str,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

impl Diagnostic {
    pub fn error(code: impl Into<String>, message: impl Into<String>, span: Option<Span>) -> Self {
        Diagnostic {
            severity: "error",
            code: code.into(),
            message: message.into(),
            location: span.map(|s| Location {
                file: None,
                line: s.line,
                column: s.column,
            }),
        }
    }

    pub fn note(code: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: "note",
            code: code.into(),
            message: message.into(),
            location: None,
        }
    }

    /// Attaches a file name to the location, adding a 1:1 location when
    /// there was none.
    pub fn in_file(mut self, file: &str) -> Self {
        let loc = self.location.get_or_insert(Location {
            file: None,
            line: 1,
            column: 1,
        });
        loc.file = Some(file.to_string());
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.severity, self.code)?;
        if let Some(loc) = &self.location {
            write!(f, " {loc}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CounterexampleReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observer: Option<String>,
    pub left: BTreeMap<String, String>,
    pub right: BTreeMap<String, String>,
    pub output_left: String,
    pub output_right: String,
    pub at_type: String,
    pub clause: String,
    pub detail: String,
}

impl From<&Counterexample> for CounterexampleReport {
    fn from(c: &Counterexample) -> Self {
        let show = |m: &indexmap::IndexMap<String, crate::TermExpr>| {
            m.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
        };
        CounterexampleReport {
            observer: c.observer.clone(),
            left: show(&c.gamma_left),
            right: show(&c.gamma_right),
            output_left: c.out_left.to_string(),
            output_right: c.out_right.to_string(),
            at_type: c.at_type.to_string(),
            clause: c.clause.clone(),
            detail: c.detail.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ObserverReport {
    pub observer: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs_tested: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewsReport {
    pub confidential: Vec<Binding>,
    pub public_type_vars: Vec<String>,
    pub public: Vec<Binding>,
    pub collapse: BTreeMap<String, String>,
    pub implementations: BTreeMap<String, String>,
}

impl From<&ViewPair> for ViewsReport {
    fn from(v: &ViewPair) -> Self {
        let bind = |ctx: &crate::TermContext| {
            ctx.iter()
                .map(|(x, t)| Binding {
                    name: x.clone(),
                    ty: t.to_string(),
                })
                .collect()
        };
        ViewsReport {
            confidential: bind(&v.confidential),
            public_type_vars: v.public_delta.iter().cloned().collect(),
            public: bind(&v.public_gamma),
            collapse: v
                .delta
                .iter()
                .map(|(a, t)| (a.clone(), t.to_string()))
                .collect(),
            implementations: v
                .pinned
                .iter()
                .map(|(x, e)| (x.clone(), e.to_string()))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LawFailureReport {
    pub law: String,
    pub trial: usize,
    pub lhs: String,
    pub rhs: String,
    pub lhs_value: String,
    pub rhs_value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LawsReport {
    pub trials_per_law: usize,
    pub checked: usize,
    pub failures: Vec<LawFailureReport>,
}

impl From<&LawReport> for LawsReport {
    fn from(r: &LawReport) -> Self {
        LawsReport {
            trials_per_law: r.trials_per_law,
            checked: r.checked,
            failures: r
                .failures
                .iter()
                .map(|f| LawFailureReport {
                    law: f.law.to_string(),
                    trial: f.trial,
                    lhs: f.lhs.to_string(),
                    rhs: f.rhs.to_string(),
                    lhs_value: f.lhs_value.to_string(),
                    rhs_value: f.rhs_value.to_string(),
                })
                .collect(),
        }
    }
}

/// Outcome of one command invocation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub command: String,
    pub verdict: String,
    #[serde(rename = "type")]
    pub ty: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs_tested: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observers: Option<Vec<ObserverReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub views: Option<ViewsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub laws: Option<LawsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip)]
    pub exit_code: i32,
}

impl Report {
    pub fn new(command: &str, verdict: impl Into<String>, exit_code: i32) -> Self {
        Report {
            command: command.to_string(),
            verdict: verdict.into(),
            ty: None,
            diagnostics: Vec::new(),
            counterexample: None,
            pairs_tested: None,
            seed: None,
            observers: None,
            views: None,
            laws: None,
            value: None,
            exit_code,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only strings and integers")
    }

    pub fn to_text(&self, color: bool) -> String {
        let paint = |code: &str, s: &str| {
            if color {
                format!("\x1b[{code}m{s}\x1b[0m")
            } else {
                s.to_string()
            }
        };
        let mut out = String::new();
        let verdict_style = match self.exit_code {
            0 => "1;32",
            1 => "1;31",
            _ => "1;33",
        };
        out.push_str(&paint(verdict_style, &self.verdict));
        out.push('\n');
        if let Some(t) = &self.ty {
            out.push_str(&format!("type: {t}\n"));
        }
        if let Some(v) = &self.value {
            out.push_str(&format!("value: {v}\n"));
        }
        if let Some(n) = self.pairs_tested {
            out.push_str(&format!("pairs tested: {n}\n"));
        }
        if let Some(s) = self.seed {
            out.push_str(&format!("seed: {s}\n"));
        }
        for o in self.observers.iter().flatten() {
            out.push_str(&format!("observer {}: {}\n", o.observer, o.verdict));
        }
        if let Some(c) = &self.counterexample {
            out.push_str("counterexample");
            if let Some(o) = &c.observer {
                out.push_str(&format!(" for observer {o}"));
            }
            out.push_str(":\n");
            let side = |m: &BTreeMap<String, String>| {
                m.iter()
                    .map(|(k, v)| format!("{k} = {v}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            out.push_str(&format!("  left inputs:  {}\n", side(&c.left)));
            out.push_str(&format!("  right inputs: {}\n", side(&c.right)));
            out.push_str(&format!(
                "  outputs:      {} vs {}\n",
                c.output_left, c.output_right
            ));
            out.push_str(&format!(
                "  at type {} failed {}: {}\n",
                c.at_type, c.clause, c.detail
            ));
        }
        if let Some(v) = &self.views {
            out.push_str("confidential view:\n");
            for b in &v.confidential {
                out.push_str(&format!("  {} : {}\n", b.name, b.ty));
            }
            out.push_str(&format!(
                "public type variables: {}\n",
                v.public_type_vars.join(", ")
            ));
            out.push_str("public view:\n");
            for b in &v.public {
                out.push_str(&format!("  {} : {}\n", b.name, b.ty));
            }
            out.push_str("collapse:\n");
            for (a, t) in &v.collapse {
                out.push_str(&format!("  {a} := {t}\n"));
            }
            out.push_str("implementations:\n");
            for (x, e) in &v.implementations {
                out.push_str(&format!("  {x} = {e}\n"));
            }
        }
        if let Some(l) = &self.laws {
            out.push_str(&format!(
                "laws: {} instances checked, {} failures\n",
                l.checked,
                l.failures.len()
            ));
            for f in &l.failures {
                out.push_str(&format!(
                    "  {} (trial {}): {} gives {}, {} gives {}\n",
                    f.law, f.trial, f.lhs, f.lhs_value, f.rhs, f.rhs_value
                ));
            }
        }
        for d in &self.diagnostics {
            let line = d.to_string();
            out.push_str(&if d.severity == "error" {
                paint("31", &line)
            } else {
                line
            });
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_always_has_the_core_fields() {
        let r = Report::new("eval", "ok", 0);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["command", "diagnostics", "type", "verdict"]);
        assert!(v["type"].is_null());
    }

    #[test]
    fn diagnostics_show_their_location() {
        let span = Span {
            start: 0,
            end: 1,
            line: 3,
            column: 7,
        };
        let d = Diagnostic::error("TypeError", "boom", Some(span)).in_file("p.trni");
        assert_eq!(d.to_string(), "error[TypeError] p.trni:3:7: boom");
    }

    #[test]
    fn plain_text_has_no_escape_codes() {
        let mut r = Report::new("check", "TRNI(P, int)", 0);
        r.diagnostics.push(Diagnostic::note("Note", "n"));
        assert!(!r.to_text(false).contains('\x1b'));
        assert!(r.to_text(true).contains('\x1b'));
    }
}
