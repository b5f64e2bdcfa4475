//! Cached reference values for the generated instances.

use serde_json::{json, Value};

use levelset_core::problems::bpdn;
use levelset_core::{Error, ProblemInstance};

use crate::direct;
use crate::output::num;

/// The bundled fixture document.
pub const BUNDLED: &str = include_str!("../fixtures/instances.json");

pub const FORMAT: &str = "levelset-lab-fixtures";

#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub noise_u: f64,
    pub tau_p_ref: f64,
}

/// Parameters of the instances the fixture file covers.
pub const BPDN_PARAMS: &[(u64, usize, usize, usize, f64)] = &[(1, 20, 50, 3, 0.1)];

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("fixture file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("fixture file: {0}")]
    Schema(String),
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value, FixtureError> {
    obj.get(key)
        .ok_or_else(|| FixtureError::Schema(format!("missing field `{key}`")))
}

fn as_u64(v: &Value, key: &str) -> Result<u64, FixtureError> {
    v.as_u64()
        .ok_or_else(|| FixtureError::Schema(format!("`{key}` must be a nonnegative integer")))
}

fn as_f64(v: &Value, key: &str) -> Result<f64, FixtureError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| FixtureError::Schema(format!("`{key}` must be a finite number")))
}

pub fn parse(text: &str) -> Result<Vec<Fixture>, FixtureError> {
    let doc: Value = serde_json::from_str(text)?;
    if field(&doc, "format")?.as_str() != Some(FORMAT) {
        return Err(FixtureError::Schema(format!("`format` must be \"{FORMAT}\"")));
    }
    let list = field(&doc, "instances")?
        .as_array()
        .ok_or_else(|| FixtureError::Schema("`instances` must be an array".into()))?;
    list.iter()
        .map(|o| {
            let dim = |key: &str| -> Result<usize, FixtureError> {
                Ok(as_u64(field(o, key)?, key)? as usize)
            };
            Ok(Fixture {
                name: field(o, "name")?
                    .as_str()
                    .ok_or_else(|| FixtureError::Schema("`name` must be a string".into()))?
                    .to_string(),
                seed: as_u64(field(o, "seed")?, "seed")?,
                m: dim("m")?,
                n: dim("n")?,
                k: dim("k")?,
                noise_u: as_f64(field(o, "noise_u")?, "noise_u")?,
                tau_p_ref: as_f64(field(o, "tau_p_ref")?, "tau_p_ref")?,
            })
        })
        .collect()
}

pub fn bundled() -> Vec<Fixture> {
    parse(BUNDLED).expect("bundled fixture file is valid")
}

impl Fixture {
    pub fn matches(&self, seed: u64, m: usize, n: usize, k: usize, noise_u: f64) -> bool {
        self.name == "bpdn"
            && (self.seed, self.m, self.n, self.k) == (seed, m, n, k)
            && self.noise_u == noise_u
    }

    /// The instance with its cached reference values.
    pub fn instance(&self) -> Result<ProblemInstance, Error> {
        let mut inst = bpdn(self.seed, self.m, self.n, self.k, self.noise_u)?;
        inst.tau_p_ref = Some(self.tau_p_ref);
        // strong duality: the domains of f and g cover the whole space
        inst.tau_d_ref = Some(self.tau_p_ref);
        Ok(inst)
    }
}

/// The cached fixture for these parameters, if any.
pub fn lookup(fixtures: &[Fixture], seed: u64, m: usize, n: usize, k: usize, noise_u: f64) -> Option<&Fixture> {
    fixtures.iter().find(|f| f.matches(seed, m, n, k, noise_u))
}

/// Recomputes every fixture with the direct solver.
pub fn generate() -> Result<Vec<Fixture>, Error> {
    BPDN_PARAMS
        .iter()
        .map(|&(seed, m, n, k, noise_u)| {
            let inst = bpdn(seed, m, n, k, noise_u)?;
            let sol = direct::solve_instance(&inst)?;
            Ok(Fixture {
                name: "bpdn".into(),
                seed,
                m,
                n,
                k,
                noise_u,
                tau_p_ref: sol.tau_p,
            })
        })
        .collect()
}

pub fn to_json(fixtures: &[Fixture]) -> Value {
    json!({
        "format": FORMAT,
        "version": 1,
        "instances": fixtures.iter().map(|f| json!({
            "name": f.name,
            "seed": f.seed,
            "m": f.m,
            "n": f.n,
            "k": f.k,
            "noise_u": num(f.noise_u),
            "tau_p_ref": num(f.tau_p_ref),
        })).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_parses() {
        let f = bundled();
        assert!(lookup(&f, 1, 20, 50, 3, 0.1).is_some());
    }

    #[test]
    fn round_trip() {
        let f = bundled();
        let text = serde_json::to_string_pretty(&to_json(&f)).unwrap();
        assert_eq!(parse(&text).unwrap(), f);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse("{"), Err(FixtureError::Json(_))));
        assert!(matches!(
            parse(r#"{"format": "other", "instances": []}"#),
            Err(FixtureError::Schema(_))
        ));
        let missing = r#"{"format": "levelset-lab-fixtures", "instances": [{"name": "bpdn"}]}"#;
        assert!(matches!(parse(missing), Err(FixtureError::Schema(_))));
    }
}
