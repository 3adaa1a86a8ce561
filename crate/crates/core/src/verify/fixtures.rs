//! The example corpus: small tensors with known classifications.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifiers::{self, Class, Classifier, Config};
use crate::error::{Error, Result};
use crate::io;
use crate::spectral;
use crate::subdivision::{Sign, Status};
use crate::tensor::{IndexSet, Tensor};

macro_rules! fixture {
    ($name:literal) => {
        ($name, include_str!(concat!("../../fixtures/", $name, ".json")))
    };
}

/// Embedded fixture files as `(name, json)`.
pub const FIXTURES: &[(&str, &str)] = &[
    fixture!("hadamard_left_semipositive"),
    fixture!("hadamard_right_semipositive"),
    fixture!("hadamard_product_not_semipositive"),
    fixture!("completely_s0_not_semipositive"),
    fixture!("completely_s_not_strictly_semipositive"),
    fixture!("almost_e0_basic"),
    fixture!("almost_e_basic"),
    fixture!("almost_e_and_semipositive"),
    fixture!("almost_e0_summand_a"),
    fixture!("almost_e0_summand_b"),
    fixture!("almost_e0_sum_fails"),
    fixture!("almost_e0_hadamard_fails"),
    fixture!("almost_copositive_basic"),
    fixture!("almost_copositive_semipositive"),
    fixture!("almost_e0_not_almost_c0_dim3"),
    fixture!("symmetric_negative_offdiagonal"),
    fixture!("symmetric_almost_e_semipositive"),
];

/// A point evaluation checked exactly.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Evaluation {
    pub x: Vec<f64>,
    /// Evaluate on the principal subtensor with these indices.
    #[serde(default)]
    pub subset: Option<Vec<usize>>,
    #[serde(default)]
    pub apply: Option<Vec<f64>>,
    /// Every component of `A x^{m-1}` is at most this.
    #[serde(default)]
    pub apply_at_most: Option<f64>,
    /// Every component of `A x^{m-1}` exceeds this.
    #[serde(default)]
    pub apply_above: Option<f64>,
    #[serde(default)]
    pub form: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct SubsetExpectation {
    pub subset: Vec<usize>,
    pub class: String,
    pub status: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct EigenExpectation {
    /// `negative` or `nonpositive`.
    pub sign: String,
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct Fixture {
    pub name: String,
    /// What the tensor illustrates.
    pub claim: String,
    pub tensor: Value,
    pub expect: BTreeMap<String, String>,
    #[serde(default)]
    pub subsets: Vec<SubsetExpectation>,
    #[serde(default)]
    pub evaluations: Vec<Evaluation>,
    #[serde(default)]
    pub nonneg_row: Option<usize>,
    #[serde(default)]
    pub eigenpair: Option<EigenExpectation>,
}

impl Fixture {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn tensor(&self) -> Result<Tensor> {
        io::from_value(&self.tensor)
    }

    pub fn expected(&self) -> Result<Vec<(Class, Status)>> {
        self.expect
            .iter()
            .map(|(c, s)| Ok((c.parse()?, parse_status(s)?)))
            .collect()
    }
}

pub fn parse_status(s: &str) -> Result<Status> {
    match s {
        "Holds" => Ok(Status::Holds),
        "Fails" => Ok(Status::Fails),
        "Inconclusive" => Ok(Status::Inconclusive),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

pub fn load_all() -> Result<Vec<Fixture>> {
    FIXTURES.iter().map(|(_, text)| Fixture::parse(text)).collect()
}

pub fn load(name: &str) -> Result<Fixture> {
    let (_, text) = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownName(name.to_string()))?;
    Fixture::parse(text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureResult {
    pub name: String,
    pub claim: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureReport {
    pub passed: usize,
    pub failed: usize,
    pub fixtures: Vec<FixtureResult>,
}

fn check(checks: &mut Vec<Check>, label: impl Into<String>, expected: impl ToString, actual: impl ToString, ok: bool) {
    checks.push(Check {
        label: label.into(),
        expected: expected.to_string(),
        actual: actual.to_string(),
        ok,
    });
}

fn subset_status(c: &Classifier, class: Class, j: &IndexSet) -> Result<Status> {
    let sub = c.tensor().principal_subtensor(j)?;
    // Keep the full tensor's absolute tolerance on the subtensor.
    let mut cfg = c.config().clone();
    let scale = sub.max_abs();
    if scale > 0.0 {
        cfg.epsilon = c.epsilon() / scale;
    }
    Ok(Classifier::new(&sub, &cfg)?.verdict(class)?.status())
}

pub fn run_fixture(f: &Fixture, cfg: &Config) -> Result<FixtureResult> {
    let a = f.tensor()?;
    let c = Classifier::new(&a, cfg)?;
    let mut checks = Vec::new();
    for (class, want) in f.expected()? {
        let v = c.verdict(class)?;
        check(&mut checks, class.name(), format!("{want:?}"), format!("{:?}", v.status()), v.status() == want);
        if v.witness().is_some() {
            let re = classifiers::recheck_witness(&a, class, &v, cfg.interior_margin);
            check(&mut checks, format!("{class} witness re-check"), "ok", re.as_ref().err().map_or("ok", |e| e.as_str()), re.is_ok());
        }
    }
    for s in &f.subsets {
        let j = IndexSet::new(s.subset.clone(), a.dim())?;
        let class: Class = s.class.parse()?;
        let want = parse_status(&s.status)?;
        let got = subset_status(&c, class, &j)?;
        check(&mut checks, format!("{class} on {j}"), format!("{want:?}"), format!("{got:?}"), got == want);
    }
    for e in &f.evaluations {
        let t = match &e.subset {
            Some(j) => a.principal_subtensor(&IndexSet::new(j.clone(), a.dim())?)?,
            None => a.clone(),
        };
        let at = match &e.subset {
            Some(j) => format!("{:?} on {:?}", e.x, j),
            None => format!("{:?}", e.x),
        };
        let f_x = t.apply(&e.x)?;
        if let Some(want) = &e.apply {
            check(&mut checks, format!("apply at {at}"), format!("{want:?}"), format!("{f_x:?}"), &f_x == want);
        }
        if let Some(bound) = e.apply_at_most {
            let ok = f_x.iter().all(|&v| v <= bound);
            check(&mut checks, format!("apply at {at} at most"), bound, format!("{f_x:?}"), ok);
        }
        if let Some(bound) = e.apply_above {
            let ok = f_x.iter().all(|&v| v > bound);
            check(&mut checks, format!("apply at {at} above"), bound, format!("{f_x:?}"), ok);
        }
        if let Some(want) = e.form {
            let got = t.form_value(&e.x)?;
            check(&mut checks, format!("form at {at}"), want, got, got == want);
        }
    }
    if let Some(row) = f.nonneg_row {
        let got = classifiers::has_nonneg_row_subtensor(&a);
        check(&mut checks, "nonnegative row subtensor", row, format!("{got:?}"), got == Some(row));
    }
    if let Some(e) = &f.eigenpair {
        let sign = match e.sign.as_str() {
            "negative" => Sign::Negative,
            "nonpositive" => Sign::NonPositive,
            other => return Err(Error::UnknownName(other.to_string())),
        };
        let tol = 1e-8;
        let pair = spectral::find_hpp_eigenpair(&a, tol, cfg.eigen_restarts, cfg.seed, sign, cfg.interior_margin)?;
        let ok = pair.as_ref().is_some_and(|p| {
            p.residual <= tol && e.lambda.is_none_or(|l| (p.lambda - l).abs() <= tol)
        });
        let actual = pair.map_or("none".to_string(), |p| format!("lambda {} residual {:e}", p.lambda, p.residual));
        let expected = match e.lambda {
            Some(l) => format!("{} eigenvalue {l}", e.sign),
            None => format!("{} eigenvalue", e.sign),
        };
        check(&mut checks, "H++ eigenpair", expected, actual, ok);
    }
    Ok(FixtureResult {
        name: f.name.clone(),
        claim: f.claim.clone(),
        passed: checks.iter().all(|c| c.ok),
        checks,
    })
}

pub fn run_fixtures(cfg: &Config) -> Result<FixtureReport> {
    let fixtures = load_all()?;
    let fixtures: Vec<FixtureResult> = fixtures.iter().map(|f| run_fixture(f, cfg)).collect::<Result<_>>()?;
    let passed = fixtures.iter().filter(|f| f.passed).count();
    Ok(FixtureReport {
        passed,
        failed: fixtures.len() - passed,
        fixtures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses_and_names_match() {
        for (name, text) in FIXTURES {
            let f = Fixture::parse(text).unwrap();
            assert_eq!(&f.name, name);
            f.tensor().unwrap();
            assert!(!f.expected().unwrap().is_empty());
        }
    }

    #[test]
    fn sum_and_product_fixtures_are_derived() {
        let a = load("almost_e0_summand_a").unwrap().tensor().unwrap();
        let b = load("almost_e0_summand_b").unwrap().tensor().unwrap();
        assert_eq!(load("almost_e0_sum_fails").unwrap().tensor().unwrap(), a.add(&b).unwrap());
        assert_eq!(load("almost_e0_hadamard_fails").unwrap().tensor().unwrap(), a.hadamard(&b).unwrap());
        let l = load("hadamard_left_semipositive").unwrap().tensor().unwrap();
        let r = load("hadamard_right_semipositive").unwrap().tensor().unwrap();
        assert_eq!(load("hadamard_product_not_semipositive").unwrap().tensor().unwrap(), l.hadamard(&r).unwrap());
    }
}
