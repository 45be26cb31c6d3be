//! Run configuration: a JSON key/value tree with defaults, validated on
//! load. Command-line flags override file values.

use serde::{Deserialize, Serialize};
use sphere_moments::{HarmonicIndex, SpectralField, TransmissionCoefficients};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_benchmark")]
    pub benchmark: String,
    #[serde(default = "default_alpha_minus")]
    pub alpha_minus: f64,
    #[serde(default = "default_alpha_plus")]
    pub alpha_plus: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_band_limit")]
    pub band_limit: usize,
    #[serde(default = "default_cross_order")]
    pub cross_order: usize,
    #[serde(default = "default_moment_order")]
    pub moment_order: usize,
    #[serde(default = "default_points")]
    pub evaluation_points: Vec<[f64; 3]>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<usize>,
    #[serde(default = "default_reference_p")]
    pub reference_p: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub kappa: KappaSpec,
    #[serde(default)]
    pub study_kind: Option<String>,
    #[serde(default)]
    pub study_quantity: Option<String>,
}

fn default_benchmark() -> String {
    "example1".into()
}
fn default_alpha_minus() -> f64 {
    2.0
}
fn default_alpha_plus() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_band_limit() -> usize {
    16
}
fn default_cross_order() -> usize {
    8
}
fn default_moment_order() -> usize {
    2
}
fn default_points() -> Vec<[f64; 3]> {
    vec![[0.0, 0.0, 0.2], [0.0, 0.0, 0.5], [0.0, 0.0, 5.0]]
}
fn default_epsilons() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.025]
}
fn default_p_list() -> Vec<usize> {
    vec![4, 8, 16, 32]
}
fn default_reference_p() -> usize {
    64
}
fn default_seed() -> u64 {
    42
}
fn default_mc_samples() -> usize {
    100_000
}

/// Perturbation profile κ: a constant or a single real harmonic.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KappaSpec {
    Constant {
        #[serde(default = "default_kappa_value")]
        value: f64,
    },
    Harmonic {
        degree: u32,
        order: i32,
        #[serde(default = "default_kappa_value")]
        amplitude: f64,
    },
}

fn default_kappa_value() -> f64 {
    1.0
}

impl Default for KappaSpec {
    fn default() -> Self {
        KappaSpec::Constant { value: 1.0 }
    }
}

impl KappaSpec {
    pub fn profile(&self, band_limit: usize) -> Result<SpectralField, String> {
        let mut field = SpectralField::zeros(band_limit);
        match *self {
            KappaSpec::Constant { value } => {
                field
                    .set_coefficient(
                        HarmonicIndex::new(0, 0).expect("valid index"),
                        value * (4.0 * std::f64::consts::PI).sqrt(),
                    )
                    .map_err(|e| e.to_string())?;
            }
            KappaSpec::Harmonic {
                degree,
                order,
                amplitude,
            } => {
                let idx = HarmonicIndex::new(degree, order).map_err(|e| format!("kappa: {e}"))?;
                if degree as usize > band_limit {
                    return Err(format!(
                        "kappa: harmonic degree {degree} exceeds band_limit {band_limit}"
                    ));
                }
                field
                    .set_coefficient(idx, amplitude)
                    .map_err(|e| e.to_string())?;
            }
        }
        Ok(field)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    /// Field-by-field validation; the message names the offending field.
    pub fn validate(&self) -> Result<(), String> {
        if self.benchmark != "example1" && self.benchmark != "example2" {
            return Err(format!(
                "benchmark: expected \"example1\" or \"example2\", got \"{}\"",
                self.benchmark
            ));
        }
        if !self.alpha_minus.is_finite() || self.alpha_minus <= 0.0 {
            return Err(format!(
                "alpha_minus: must be positive, got {}",
                self.alpha_minus
            ));
        }
        if !self.alpha_plus.is_finite() || self.alpha_plus <= 0.0 {
            return Err(format!(
                "alpha_plus: must be positive, got {}",
                self.alpha_plus
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(format!("epsilon: must lie in (0, 1), got {}", self.epsilon));
        }
        if self.moment_order < 1 {
            return Err(format!(
                "moment_order: must be at least 1, got {}",
                self.moment_order
            ));
        }
        if self.band_limit < self.cross_order {
            return Err(format!(
                "band_limit: must be at least cross_order ({} < {})",
                self.band_limit, self.cross_order
            ));
        }
        if self.mc_samples < 2 {
            return Err(format!(
                "mc_samples: must be at least 2, got {}",
                self.mc_samples
            ));
        }
        if self.evaluation_points.is_empty() {
            return Err("evaluation_points: must not be empty".into());
        }
        Ok(())
    }

    pub fn transmission(&self) -> Result<TransmissionCoefficients, String> {
        TransmissionCoefficients::new(self.alpha_minus, self.alpha_plus).map_err(|e| e.to_string())
    }

    /// FNV-1a hash of the resolved configuration, for provenance lines.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hash: u64 = 0xcbf29ce484222325;
        for byte in canonical.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        format!("{hash:016x}")
    }
}
