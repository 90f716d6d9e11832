//! Built-in models and the procedures that act on them.

pub mod collapse;
pub mod random;
pub mod recoherence;
pub mod spin;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

pub use collapse::{
    abl_probability, abl_table, collapse_chain_enumerate, fidelity_with, reverse_collapse_chain, CollapseTrajectory,
};
pub use random::{commuting_model, deterministic_chain, random_model, RandomModelConfig};
pub use recoherence::{analyze_recoherence, recoherence_scenario, CurvePoint, RecoherenceAnalysis, RecoherenceScenario};
pub use spin::{spin_model, spin_post};

use crate::engine::TolerancePolicy;
use crate::error::{Error, Result};
use crate::linalg::{c64, C64};
use crate::model::{QuantumModel, StateVector};

#[derive(Clone, Copy, Debug)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub params: &'static str,
}

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "spin",
        summary: "spin-1/2 measured in x then z by two pointer apparatuses (dim 18)",
        params: "a=<re> [b=<re>] [a_im=<im>] [b_im=<im>]; default a=0.6",
    },
    ScenarioInfo {
        name: "spin-symmetric",
        summary: "spin model mirrored about t=0 with time-reversed dynamics",
        params: "a, b, a_im, b_im as for spin; default a=b=1/sqrt(2)",
    },
    ScenarioInfo {
        name: "recoherence",
        summary: "mirrored spin model with unequal amplitudes; records are erased after t=0",
        params: "a, b, a_im, b_im as for spin; default a=0.6",
    },
    ScenarioInfo {
        name: "spin-post",
        summary: "bare qubit pre-selected in |+x>, post-selected in |+z>, z family in between",
        params: "none",
    },
    ScenarioInfo {
        name: "random",
        summary: "Haar-random dynamics and projector families",
        params: "dim=<n> families=<n> members=<n> rank=<n> seed=<n>; defaults 4 2 3 1 0",
    },
];

/// A built-in model with optional post-selection data.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub model: QuantumModel,
    /// Post-selected vector at the last grid time.
    pub psi_final: Option<StateVector>,
    pub seed: Option<u64>,
}

/// `key=value` scenario parameters.
#[derive(Clone, Debug, Default)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in items {
            let item = item.as_ref();
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Scenario(format!("parameter {item:?} is not key=value")))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Scenario(format!("parameter {k:?} given twice")));
            }
        }
        Ok(Self(map))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Scenario(format!("unknown parameter {k:?} (expected one of {allowed:?})"))),
            None => Ok(()),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Scenario(format!("parameter {key}={v:?} is not a finite number")))
            })
            .transpose()
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Scenario(format!("parameter {key}={v:?} is not a nonnegative integer")))
            })
            .transpose()
    }
}

/// Amplitudes from `a`, `b`, `a_im`, `b_im`; a missing `b` is the real
/// value completing the normalization.
fn amplitudes(params: &Params, default_a: f64) -> Result<(C64, C64)> {
    params.check_keys(&["a", "b", "a_im", "b_im"])?;
    let a = c64(params.f64("a")?.unwrap_or(default_a), params.f64("a_im")?.unwrap_or(0.0));
    let b = match (params.f64("b")?, params.f64("b_im")?) {
        (None, None) => {
            let rest = 1.0 - a.norm_sqr();
            if rest < -1e-12 {
                return Err(Error::Scenario(format!("|a|^2 = {} exceeds 1", a.norm_sqr())));
            }
            c64(rest.max(0.0).sqrt(), 0.0)
        }
        (re, im) => c64(re.unwrap_or(0.0), im.unwrap_or(0.0)),
    };
    Ok((a, b))
}

fn mirrored_spin(params: &Params, default_a: f64) -> Result<QuantumModel> {
    let (a, b) = amplitudes(params, default_a)?;
    Ok(recoherence_scenario(&spin_model(a, b)?, TolerancePolicy::default())?.model)
}

/// Builds a named scenario. A `seed=` parameter overrides `seed`.
pub fn build_scenario<S: AsRef<str>>(name: &str, params: &[S], seed: Option<u64>) -> Result<Scenario> {
    let params = Params::parse(params)?;
    let (model, psi_final, seed) = match name {
        "spin" => {
            let (a, b) = amplitudes(&params, 0.6)?;
            (spin_model(a, b)?, None, None)
        }
        "spin-symmetric" => (mirrored_spin(&params, FRAC_1_SQRT_2)?, None, None),
        "recoherence" => (mirrored_spin(&params, 0.6)?, None, None),
        "spin-post" => {
            params.check_keys(&[])?;
            let (model, psi_f) = spin_post()?;
            (model, Some(psi_f), None)
        }
        "random" => {
            params.check_keys(&["dim", "families", "members", "rank", "seed"])?;
            let d = RandomModelConfig::default();
            let get = |k: &str, def: usize| -> Result<usize> { Ok(params.u64(k)?.map_or(def, |v| v as usize)) };
            let config = RandomModelConfig {
                dim: get("dim", d.dim)?,
                families: get("families", d.families)?,
                max_members: get("members", d.max_members)?,
                rank: get("rank", d.rank)?,
            };
            let seed = params.u64("seed")?.or(seed).unwrap_or(0);
            (random_model(seed, config)?, None, Some(seed))
        }
        other => {
            let names: Vec<&str> = SCENARIOS.iter().map(|s| s.name).collect();
            return Err(Error::Scenario(format!("unknown scenario {other:?} (known: {})", names.join(", "))));
        }
    };
    Ok(Scenario {
        name: name.to_string(),
        model,
        psi_final,
        seed,
    })
}
