//! Instance lookup by name.

use std::path::Path;

use levelset_core::problems::{
    bpdn, example1, example2, example2_recast, phaselift_toy, univariate_failure,
};
use levelset_core::{PerturbationInstance, ProblemInstance, ValueFunction};

use crate::fixtures::{self, Fixture};

pub const NAMES: &[&str] = &[
    "example1",
    "example2",
    "example3",
    "univariate",
    "bpdn",
    "phaselift",
];

/// Generator parameters; unset values take the per-instance defaults
/// (bpdn: seed 1, m 20, n 50, k 3, noise_u 0.1; phaselift: seed 1, n 5).
#[derive(Clone, Debug, Default)]
pub struct Params {
    pub seed: Option<u64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub noise_u: Option<f64>,
}

// one per process, so the size difference between variants does not matter
#[allow(clippy::large_enum_variant)]
#[derive(Debug)]
pub enum Instance {
    Plain(ProblemInstance),
    Pert(PerturbationInstance),
}

impl Instance {
    pub fn value_function(&self) -> &dyn ValueFunction {
        match self {
            Instance::Plain(p) => p,
            Instance::Pert(p) => p,
        }
    }

    pub fn plain(&self) -> Option<&ProblemInstance> {
        match self {
            Instance::Plain(p) => Some(p),
            Instance::Pert(_) => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Instance::Plain(p) => p.seed,
            Instance::Pert(p) => p.base.seed,
        }
    }
}

/// Builds the named instance. Errors are messages naming the offending flag.
pub fn build(name: &str, params: &Params, fixture: Option<&Path>) -> Result<Instance, String> {
    let no_params = |what: &str| -> Result<(), String> {
        if params.m.is_some() || params.n.is_some() || params.k.is_some() || params.noise_u.is_some() || params.seed.is_some() {
            Err(format!("{what} takes no generator flags (--seed, --m, --n, --k, --noise-u)"))
        } else {
            Ok(())
        }
    };
    match name {
        "example1" => no_params(name).map(|_| Instance::Plain(example1())),
        "example2" => no_params(name).map(|_| Instance::Plain(example2())),
        "example3" => no_params(name).map(|_| Instance::Pert(example2_recast())),
        "univariate" => no_params(name).map(|_| Instance::Plain(univariate_failure())),
        "bpdn" => {
            let seed = params.seed.unwrap_or(1);
            let (m, n, k) = (params.m.unwrap_or(20), params.n.unwrap_or(50), params.k.unwrap_or(3));
            let noise_u = params.noise_u.unwrap_or(0.1);
            let list: Vec<Fixture> = match fixture {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| format!("--fixture {}: {e}", path.display()))?;
                    fixtures::parse(&text).map_err(|e| format!("--fixture {}: {e}", path.display()))?
                }
                None => fixtures::bundled(),
            };
            match fixtures::lookup(&list, seed, m, n, k, noise_u) {
                Some(f) => f.instance(),
                None => bpdn(seed, m, n, k, noise_u),
            }
            .map(Instance::Plain)
            .map_err(|e| format!("--m/--n/--k/--noise-u: {e}"))
        }
        "phaselift" => {
            if params.m.is_some() || params.k.is_some() || params.noise_u.is_some() {
                return Err("phaselift takes only --seed and --n".into());
            }
            phaselift_toy(params.n.unwrap_or(5), params.seed.unwrap_or(1))
                .map(Instance::Plain)
                .map_err(|e| format!("--n: {e}"))
        }
        other => Err(format!(
            "--instance: unknown instance `{other}` (expected one of {})",
            NAMES.join(", ")
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds() {
        for name in NAMES {
            let inst = build(name, &Params::default(), None).unwrap();
            assert!(!inst.value_function().name().is_empty());
        }
    }

    #[test]
    fn bundled_fixture_sets_reference() {
        let inst = build("bpdn", &Params::default(), None).unwrap();
        assert!(inst.value_function().tau_p_ref().is_some());
        let other = Params {
            seed: Some(2),
            ..Params::default()
        };
        let inst = build("bpdn", &other, None).unwrap();
        assert!(inst.value_function().tau_p_ref().is_none());
    }

    #[test]
    fn errors_name_the_flag() {
        assert!(build("nope", &Params::default(), None).unwrap_err().contains("--instance"));
        let bad = Params {
            m: Some(60),
            ..Params::default()
        };
        assert!(build("bpdn", &bad, None).unwrap_err().contains("--m"));
        let seeded = Params {
            seed: Some(3),
            ..Params::default()
        };
        assert!(build("example2", &seeded, None).is_err());
    }
}
