//! JSON descriptions of potentials and weights.
//!
//! ```json
//! {"kind": "cos_v", "vk": [1.4142135623730951]}
//! {"kind": "exp_q", "v0": [0.0, 0.0], "coeffs": [{"m": 2, "re": 0.0, "im": -0.5}], "real": false}
//! {"kind": "delta_comb", "alpha": 1.0, "support": 256}
//! ```
//!
//! `exp_v` takes the same fields as `exp_q` but lists `V(m)` instead of `q(m)`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::weights::{make_weight, Weight, WeightSpec};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub m: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl CoeffEntry {
    fn pair(&self) -> (i64, C64) {
        (self.m, C64::new(self.re, self.im))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// Coefficients `q(m)` of `Q`.
    ExpQ {
        #[serde(default)]
        v0: Option<[f64; 2]>,
        coeffs: Vec<CoeffEntry>,
        #[serde(default)]
        real: bool,
    },
    /// Coefficients `V(m)` of `v` itself.
    ExpV {
        #[serde(default)]
        v0: Option<[f64; 2]>,
        coeffs: Vec<CoeffEntry>,
        #[serde(default)]
        real: bool,
    },
    /// `v0 + sum_k vk[k-1] sqrt(2) cos 2kx`.
    CosV {
        #[serde(default)]
        v0: Option<[f64; 2]>,
        vk: Vec<f64>,
        #[serde(default = "yes")]
        real: bool,
    },
    DeltaComb {
        alpha: f64,
        support: u64,
        #[serde(default = "yes")]
        real: bool,
    },
}

fn yes() -> bool {
    true
}

fn complex(v: &Option<[f64; 2]>) -> C64 {
    v.map_or(ZERO, |[re, im]| C64::new(re, im))
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PotentialSpec> {
        match self {
            PotentialConfig::ExpQ { v0, coeffs, real } => {
                PotentialSpec::from_q(complex(v0), coeffs.iter().map(CoeffEntry::pair), *real)
            }
            PotentialConfig::ExpV { v0, coeffs, real } => {
                PotentialSpec::from_v(complex(v0), coeffs.iter().map(CoeffEntry::pair), *real)
            }
            PotentialConfig::CosV { v0, vk, real } => {
                let v0 = complex(v0);
                if !real || v0.im != 0.0 {
                    return Err(Error::Config("cos_v describes a real potential with a real v0".into()));
                }
                PotentialSpec::from_cosine(v0.re, vk)
            }
            PotentialConfig::DeltaComb { alpha, support, real } => {
                if !real {
                    return Err(Error::Config("delta_comb is always real".into()));
                }
                PotentialSpec::delta_comb(*alpha, *support)
            }
        }
    }

    pub fn from_json(s: &str) -> Result<PotentialConfig> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("potential: {e}")))
    }
}

/// Cosine coefficients `v_k` of an even real potential with zero mean, read
/// back from its exponential coefficients.
pub fn cosine_coefficients(p: &PotentialSpec) -> Result<Vec<f64>> {
    if !p.is_real() || p.v0() != ZERO {
        return Err(Error::Config("perturbation input must be a real potential with zero mean".into()));
    }
    let kmax = (p.support() / 2) as i64;
    (1..=kmax)
        .map(|k| {
            let (a, b) = (p.vk(k), p.vk(-k));
            if (a - b).norm() > 1e-12 * a.norm().max(1.0) || a.im.abs() > 1e-12 * a.norm().max(1.0) {
                return Err(Error::Config(format!("potential is not a cosine series (mode {k})")));
            }
            Ok(a.re * SQRT_2)
        })
        .collect()
}

pub fn weight_from_json(s: &str, range: usize) -> Result<Weight> {
    let spec: WeightSpec = serde_json::from_str(s).map_err(|e| Error::Config(format!("weight: {e}")))?;
    make_weight(&spec, range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_form() {
        let c = PotentialConfig::from_json(r#"{"kind": "cos_v", "vk": [1.4142135623730951]}"#).unwrap().build().unwrap();
        assert!((c.vk(1) - 1.0).norm() < 1e-15);
        let q = r#"{"kind": "exp_q", "v0": [0.0, 0.0], "coeffs": [{"m": 2, "re": 0.0, "im": -0.5}], "real": false}"#;
        let g = PotentialConfig::from_json(q).unwrap().build().unwrap();
        assert!((g.vk(1) - 1.0).norm() < 1e-15);
        assert_eq!(g.vk(-1), ZERO);
        let v = r#"{"kind": "exp_v", "coeffs": [{"m": 2, "re": 1.0}]}"#;
        assert_eq!(PotentialConfig::from_json(v).unwrap().build().unwrap(), g);
        let d = PotentialConfig::from_json(r#"{"kind": "delta_comb", "alpha": 1.0, "support": 8}"#).unwrap().build().unwrap();
        assert!((d.v0().re - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(PotentialConfig::from_json(r#"{"kind": "nope"}"#).is_err());
        let bad = PotentialConfig::from_json(r#"{"kind": "cos_v", "v0": [0.0, 1.0], "vk": []}"#).unwrap();
        assert!(matches!(bad.build(), Err(Error::Config(_))));
    }

    #[test]
    fn cosine_round_trip() {
        let p = PotentialSpec::from_cosine(0.0, &[0.5, -0.25]).unwrap();
        let vk = cosine_coefficients(&p).unwrap();
        assert!((vk[0] - 0.5).abs() < 1e-15 && (vk[1] + 0.25).abs() < 1e-15);
        let g = PotentialSpec::from_v(ZERO, [(2, C64::new(1.0, 0.0))], false).unwrap();
        assert!(cosine_coefficients(&g).is_err());
    }

    #[test]
    fn weight_json() {
        let w = weight_from_json(r#"{"kind": "power", "a": -1.0}"#, 8).unwrap();
        assert!((w.value(4) - 0.25).abs() < 1e-15);
        assert!(weight_from_json(r#"{"kind": "power"}"#, 8).is_err());
    }
}
