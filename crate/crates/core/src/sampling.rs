//! Deterministic sampling of uncertainty models.
//!
//! Streams are generated by ChaCha8 seeded with a single `u64`, and every
//! scalar component consumes exactly one 53-bit uniform which is mapped
//! through the inverse CDF of its distribution. The same (model, count,
//! seed) triple therefore reproduces bit-identical samples on any platform,
//! independent of thread count.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::{ScalarDistribution, UncertaintyModel};
use crate::special::{beta_quantile, normal_quantile, u64_to_open01};
use crate::{Error, Result};

/// An ordered set of uncertainty realizations, all of one dimension.
#[derive(Debug, Clone)]
pub struct SampleSet {
    samples: Vec<Vec<f64>>,
    dim: usize,
    seed: Option<u64>,
}

impl SampleSet {
    /// Wrap externally produced samples (used by tests and the scenario
    /// baseline examples). All rows must share one finite dimension.
    pub fn from_samples(samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("sample set must be nonempty".into()));
        }
        let dim = samples[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter("samples must have dimension >= 1".into()));
        }
        for row in &samples {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "sample rows",
                    expected: dim,
                    got: row.len(),
                });
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { what: "sample values" });
            }
        }
        Ok(Self { samples, dim, seed: None })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Seed used to draw this set, when it came from `sample_uncertainty`.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.samples[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|v| v.as_slice())
    }
}

/// Draw `count` i.i.d. realizations of `model`.
pub fn sample_uncertainty(model: &UncertaintyModel, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<f64>> = (0..count).map(|_| draw_one(model, &mut rng)).collect();
    Ok(SampleSet { samples, dim: model.dim(), seed: Some(seed) })
}

/// Draw a single realization, consuming exactly `model.dim()` uniforms.
pub fn draw_one(model: &UncertaintyModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    model
        .components()
        .iter()
        .map(|c| {
            let u = u64_to_open01(rng.next_u64());
            component_quantile(c, u)
        })
        .collect()
}

fn component_quantile(dist: &ScalarDistribution, u: f64) -> f64 {
    match *dist {
        ScalarDistribution::Normal { mean, variance } => {
            mean + variance.sqrt() * normal_quantile(u)
        }
        ScalarDistribution::ScaledBeta { alpha, beta, offset, scale } => {
            offset + scale * beta_quantile(alpha, beta, u)
        }
        // Consumes its uniform like every other component so that stream
        // alignment does not depend on distribution kinds.
        ScalarDistribution::PointMass { value } => value,
    }
}
