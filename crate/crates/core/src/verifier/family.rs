use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{AnalyticFunction, GaussianTerm};

/// Random positive Gaussian mixtures in a fixed dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub dim: usize,
    pub count: usize,
    #[serde(default = "default_terms")]
    pub max_terms: usize,
    #[serde(default = "default_center_spread")]
    pub center_spread: f64,
    #[serde(default = "default_widths")]
    pub widths: [f64; 2],
}

fn default_terms() -> usize {
    3
}

fn default_center_spread() -> f64 {
    2.0
}

fn default_widths() -> [f64; 2] {
    [0.25, 2.0]
}

/// `(id, function)` pairs; identical `(seed, spec)` give identical output.
pub fn function_family(seed: u64, spec: &FamilySpec) -> Result<Vec<(String, AnalyticFunction)>> {
    if !(1..=2).contains(&spec.dim) {
        return Err(Error::Config(format!(
            "family dimension must be 1 or 2, got {}",
            spec.dim
        )));
    }
    let [wlo, whi] = spec.widths;
    if !(wlo > 0.0 && whi >= wlo && spec.max_terms >= 1 && spec.center_spread >= 0.0) {
        return Err(Error::Config(
            "family needs 0 < widths[0] <= widths[1] and max_terms >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (spec.dim as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..spec.count)
        .map(|i| {
            let terms = (0..rng.gen_range(1..=spec.max_terms))
                .map(|_| {
                    let amp = rng.gen_range(0.5..2.0);
                    let center = (0..spec.dim)
                        .map(|_| {
                            if spec.center_spread > 0.0 {
                                rng.gen_range(-spec.center_spread..=spec.center_spread)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let width = wlo * (whi / wlo).powf(rng.gen::<f64>());
                    GaussianTerm::new(amp, center, width)
                })
                .collect();
            Ok((
                format!("gm{}d-{i:03}", spec.dim),
                AnalyticFunction::gaussian_mix(terms)?,
            ))
        })
        .collect()
}
