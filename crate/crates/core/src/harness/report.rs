use crate::config::RunConfig;
use crate::geometry::Front;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const REPORT_SCHEMA: &str = "ff-report-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// `measured[0] <= tolerance`
    #[serde(rename = "<=")]
    Le,
    /// `measured[0] >= tolerance`
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    /// `tolerance <= measured[0] <= upper`
    #[serde(rename = "in")]
    Within,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Lt => "<",
            Relation::Gt => ">",
            Relation::Within => "in",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The property being tested.
    pub anchor: String,
    /// The first entry is compared; the rest are supporting values.
    /// Non-finite values are written as `null`.
    #[serde(deserialize_with = "nullable")]
    pub measured: Vec<f64>,
    pub relation: Relation,
    pub tolerance: f64,
    /// Upper end for [`Relation::Within`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl Check {
    fn make(name: &str, anchor: &str, measured: Vec<f64>, relation: Relation, tolerance: f64, upper: Option<f64>) -> Self {
        let m = measured.first().copied().unwrap_or(f64::NAN);
        let pass = match relation {
            Relation::Le => m <= tolerance,
            Relation::Ge => m >= tolerance,
            Relation::Lt => m < tolerance,
            Relation::Gt => m > tolerance,
            Relation::Within => m >= tolerance && m <= upper.unwrap_or(f64::INFINITY),
        };
        Self {
            name: name.into(),
            anchor: anchor.into(),
            measured,
            relation,
            tolerance,
            upper,
            pass,
            samples: 0,
            note: String::new(),
        }
    }

    pub fn le(name: &str, anchor: &str, measured: f64, tol: f64) -> Self {
        Self::make(name, anchor, vec![measured], Relation::Le, tol, None)
    }
    pub fn ge(name: &str, anchor: &str, measured: f64, tol: f64) -> Self {
        Self::make(name, anchor, vec![measured], Relation::Ge, tol, None)
    }
    pub fn lt(name: &str, anchor: &str, measured: f64, tol: f64) -> Self {
        Self::make(name, anchor, vec![measured], Relation::Lt, tol, None)
    }
    pub fn gt(name: &str, anchor: &str, measured: f64, tol: f64) -> Self {
        Self::make(name, anchor, vec![measured], Relation::Gt, tol, None)
    }
    pub fn within(name: &str, anchor: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self::make(name, anchor, vec![measured], Relation::Within, lo, Some(hi))
    }
    /// A yes/no property, encoded as `1 >= 1`.
    pub fn holds(name: &str, anchor: &str, ok: bool) -> Self {
        Self::make(name, anchor, vec![if ok { 1.0 } else { 0.0 }], Relation::Ge, 1.0, None)
    }

    pub fn samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }
    pub fn with(mut self, extra: impl IntoIterator<Item = f64>) -> Self {
        self.measured.extend(extra);
        self
    }
    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn value(&self) -> f64 {
        self.measured[0]
    }
}

fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    let raw: Vec<Option<f64>> = Deserialize::deserialize(d)?;
    Ok(raw.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub dim: usize,
    pub fronts: Vec<Front>,
    pub reaction: String,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub crate_version: String,
    pub schema: String,
}

impl Provenance {
    pub fn of(cfg: &RunConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            seed: cfg.seed,
            crate_version: env!("CARGO_PKG_VERSION").into(),
            schema: REPORT_SCHEMA.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub instance: Instance,
    pub checks: Vec<Check>,
    pub constants: BTreeMap<String, f64>,
    pub provenance: Provenance,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Checks whose verdict differs between two reports, or that exist in only one.
pub fn diff(a: &VerificationReport, b: &VerificationReport) -> Vec<String> {
    let mut out = Vec::new();
    for c in &a.checks {
        match b.check(&c.name) {
            Some(d) if d.pass != c.pass => out.push(format!("{}: {} -> {}", c.name, verdict(c.pass), verdict(d.pass))),
            Some(_) => {}
            None => out.push(format!("{}: only in the first report", c.name)),
        }
    }
    for d in &b.checks {
        if a.check(&d.name).is_none() {
            out.push(format!("{}: only in the second report", d.name));
        }
    }
    out
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}
