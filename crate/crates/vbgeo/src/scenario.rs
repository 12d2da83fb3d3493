//! Scenario files: a versioned JSON description of (base chart, bundle,
//! weights) plus the RNG seed, and the assembled `Scene` the numerical
//! operations run on. Unknown fields are rejected.

use serde::{Deserialize, Serialize};

use crate::bundle::{lambda2_bundle, tangent_bundle, trivial_bundle, BundleConnection, BundleSign};
use crate::chart::{model_chart, BaseChart, ChartKind};
use crate::weights::WeightProfile;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub base: BaseSpec,
    pub bundle: BundleSpec,
    pub weights: WeightSpec,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    Flat { dim: usize },
    Sphere { dim: usize, curv: f64 },
    Hyperbolic { dim: usize, curv: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BundleSpec {
    Trivial { rank: usize },
    Tangent,
    Lambda2 { sign: SignSpec },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SignSpec {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { phi1: f64, phi2: f64 },
    BryantSalamon { c0: f64, c1: f64, s: f64 },
    KahlerDisk { c1: f64, kappa: f64 },
    /// Polynomials in `r`, coefficients in ascending powers.
    Poly { phi1: Vec<f64>, phi2: Vec<f64> },
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let sc: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Scenario(format!("parse: {e}")))?;
        if sc.schema != SCHEMA_VERSION {
            return Err(Error::Scenario(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                sc.schema
            )));
        }
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization")
    }
}

/// Bundled scenario presets. The files under `scenarios/` in the repository
/// root carry the same content.
pub fn preset(name: &str) -> Result<Scenario> {
    let sc = match name {
        "bs_s4" => Scenario {
            schema: SCHEMA_VERSION,
            base: BaseSpec::Sphere { dim: 4, curv: 1.0 },
            bundle: BundleSpec::Lambda2 { sign: SignSpec::Minus },
            weights: WeightSpec::BryantSalamon { c0: 1.0, c1: 1.0, s: 1.0 },
            seed: 7,
        },
        "bs_h4_plus" => Scenario {
            schema: SCHEMA_VERSION,
            base: BaseSpec::Hyperbolic { dim: 4, curv: 1.0 },
            bundle: BundleSpec::Lambda2 { sign: SignSpec::Plus },
            weights: WeightSpec::BryantSalamon { c0: 1.0, c1: 2.0, s: -1.0 },
            seed: 7,
        },
        "flat_m2k2" => Scenario {
            schema: SCHEMA_VERSION,
            base: BaseSpec::Flat { dim: 2 },
            bundle: BundleSpec::Trivial { rank: 2 },
            weights: WeightSpec::Poly { phi1: vec![0.0, 1.0], phi2: vec![0.0] },
            seed: 7,
        },
        "sasaki_flat" => Scenario {
            schema: SCHEMA_VERSION,
            base: BaseSpec::Flat { dim: 2 },
            bundle: BundleSpec::Tangent,
            weights: WeightSpec::Constant { phi1: 0.25, phi2: -0.25 },
            seed: 7,
        },
        "fiber_k3" => Scenario {
            schema: SCHEMA_VERSION,
            base: BaseSpec::Flat { dim: 2 },
            bundle: BundleSpec::Trivial { rank: 3 },
            weights: WeightSpec::Poly { phi1: vec![0.0], phi2: vec![0.0, 1.0] },
            seed: 7,
        },
        other => {
            return Err(Error::Scenario(format!("unknown preset '{other}'")));
        }
    };
    Ok(sc)
}

pub const PRESET_NAMES: [&str; 5] = ["bs_s4", "bs_h4_plus", "flat_m2k2", "sasaki_flat", "fiber_k3"];

/// Assembled scenario: chart, bundle connection and weight profile.
#[derive(Debug, Clone)]
pub struct Scene {
    pub chart: BaseChart,
    pub bundle: BundleConnection,
    pub weights: WeightProfile,
    pub seed: u64,
}

impl Scene {
    pub fn build(sc: &Scenario) -> Result<Scene> {
        let chart = match sc.base {
            BaseSpec::Flat { dim } => model_chart(ChartKind::Flat, dim)?,
            BaseSpec::Sphere { dim, curv } => model_chart(ChartKind::Sphere { curv }, dim)?,
            BaseSpec::Hyperbolic { dim, curv } => {
                model_chart(ChartKind::Hyperbolic { curv }, dim)?
            }
        };
        let bundle = match &sc.bundle {
            BundleSpec::Trivial { rank } => trivial_bundle(&chart, *rank)?,
            BundleSpec::Tangent => tangent_bundle(&chart),
            BundleSpec::Lambda2 { sign } => {
                if chart.m != 4 {
                    return Err(Error::Scenario(format!(
                        "lambda2 bundle requires dim = 4, scenario has {}",
                        chart.m
                    )));
                }
                let s = match sign {
                    SignSpec::Plus => BundleSign::Plus,
                    SignSpec::Minus => BundleSign::Minus,
                };
                lambda2_bundle(&chart, s)?
            }
        };
        let weights = match &sc.weights {
            WeightSpec::Constant { phi1, phi2 } => WeightProfile::constant(*phi1, *phi2),
            WeightSpec::BryantSalamon { c0, c1, s } => WeightProfile::bryant_salamon(*c0, *c1, *s)?,
            WeightSpec::KahlerDisk { c1, kappa } => WeightProfile::kahler_disk(*c1, *kappa)?,
            WeightSpec::Poly { phi1, phi2 } => WeightProfile::poly(phi1.clone(), phi2.clone()),
        };
        Ok(Scene { chart, bundle, weights, seed: sc.seed })
    }

    /// Convenience constructor for programmatic scenes.
    pub fn new(chart: BaseChart, bundle: BundleConnection, weights: WeightProfile) -> Scene {
        Scene { chart, bundle, weights, seed: 0 }
    }

    pub fn m(&self) -> usize {
        self.chart.m
    }

    pub fn k(&self) -> usize {
        self.bundle.k
    }

    pub fn dim_total(&self) -> usize {
        self.chart.m + self.bundle.k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds_bryant_salamon_scenario() {
        let text = r#"{
            "schema": 1,
            "base": {"kind": "sphere", "dim": 4, "curv": 1.0},
            "bundle": {"kind": "lambda2", "sign": "minus"},
            "weights": {"kind": "bryant_salamon", "params": {"c0": 1.0, "c1": 1.0, "s": 1.0}},
            "seed": 7
        }"#;
        let sc = Scenario::from_json(text).unwrap();
        let scene = Scene::build(&sc).unwrap();
        assert_eq!(scene.m(), 4);
        assert_eq!(scene.k(), 3);
        assert_eq!(scene.seed, 7);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_schema() {
        let unknown = r#"{
            "schema": 1,
            "base": {"kind": "flat", "dim": 2, "extra": 1},
            "bundle": {"kind": "trivial", "rank": 2},
            "weights": {"kind": "constant", "params": {"phi1": 0.0, "phi2": 0.0}}
        }"#;
        assert!(Scenario::from_json(unknown).is_err());

        let bad_schema = r#"{
            "schema": 2,
            "base": {"kind": "flat", "dim": 2},
            "bundle": {"kind": "trivial", "rank": 2},
            "weights": {"kind": "constant", "params": {"phi1": 0.0, "phi2": 0.0}}
        }"#;
        assert!(Scenario::from_json(bad_schema).is_err());
    }

    #[test]
    fn rejects_incompatible_lambda2_dimension() {
        let text = r#"{
            "schema": 1,
            "base": {"kind": "flat", "dim": 3},
            "bundle": {"kind": "lambda2", "sign": "plus"},
            "weights": {"kind": "constant", "params": {"phi1": 0.0, "phi2": 0.0}}
        }"#;
        let sc = Scenario::from_json(text).unwrap();
        assert!(Scene::build(&sc).is_err());
    }

    #[test]
    fn roundtrips_serialization() {
        let sc = Scenario {
            schema: 1,
            base: BaseSpec::Hyperbolic { dim: 4, curv: 1.0 },
            bundle: BundleSpec::Lambda2 { sign: SignSpec::Plus },
            weights: WeightSpec::BryantSalamon { c0: 1.0, c1: 2.0, s: -1.0 },
            seed: 11,
        };
        let text = sc.to_json();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back.seed, 11);
        let scene = Scene::build(&back).unwrap();
        assert!((scene.weights.r_max() - 1.0).abs() < 1e-15);
    }
}
