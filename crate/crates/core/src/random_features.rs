//! Features of untrained networks.
//!
//! [`random_mlp_features`] pushes the raw probe inputs through randomly
//! initialised ReLU networks and averages the outputs over several
//! initialisations. Features are averaged before any kernel is built.
//! [`gaussian_random_features`] is the data-independent baseline.

use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use crate::seed::{self, Rng};
use crate::{Error, FeatureMatrix, Provenance, Result};

/// Weight initialisation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum InitScheme {
    /// `N(0, 2 / (fan_in + fan_out))`
    XavierNormal,
    /// `N(0, 2 / fan_in)`
    #[default]
    HeNormal,
    /// `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`
    HeUniform,
}

impl core::str::FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "xavier-normal" => Ok(Self::XavierNormal),
            "he-normal" => Ok(Self::HeNormal),
            "he-uniform" => Ok(Self::HeUniform),
            _ => Err(Error::InvalidSpec(alloc::format!("unknown init scheme `{s}`"))),
        }
    }
}

impl core::fmt::Display for InitScheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Self::XavierNormal => "xavier-normal",
            Self::HeNormal => "he-normal",
            Self::HeUniform => "he-uniform",
        })
    }
}

pub const DEFAULT_HIDDEN_WIDTHS: [usize; 2] = [512, 256];
pub const DEFAULT_NUM_SEEDS: usize = 5;

/// A feed-forward ReLU network: affine + ReLU for each hidden width, then a
/// final affine map to `output_dim`. Biases are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomNetSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    pub init: InitScheme,
    /// Number of independently initialised networks to average.
    pub num_seeds: usize,
    /// Network `i` is initialised from seed `base_seed + i`.
    pub base_seed: u64,
}

impl RandomNetSpec {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_widths: DEFAULT_HIDDEN_WIDTHS.to_vec(),
            output_dim,
            init: InitScheme::default(),
            num_seeds: DEFAULT_NUM_SEEDS,
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_widths.contains(&0) {
            return Err(Error::InvalidSpec("network dimensions must be at least 1".into()));
        }
        if self.num_seeds == 0 {
            return Err(Error::InvalidSpec("num_seeds must be at least 1".into()));
        }
        Ok(())
    }

    fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_widths);
        dims.push(self.output_dim);
        dims
    }
}

/// Row-major `fan_in x fan_out` weight matrix drawn with `scheme`.
pub fn init_weights(fan_in: usize, fan_out: usize, scheme: InitScheme, rng: &mut Rng) -> Vec<f64> {
    let len = fan_in * fan_out;
    match scheme {
        InitScheme::XavierNormal => sample_normal(len, libm::sqrt(2.0 / (fan_in + fan_out) as f64), rng),
        InitScheme::HeNormal => sample_normal(len, libm::sqrt(2.0 / fan_in as f64), rng),
        InitScheme::HeUniform => {
            let bound = libm::sqrt(6.0 / fan_in as f64);
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite positive bound");
            (0..len).map(|_| rng.sample(dist)).collect()
        }
    }
}

fn sample_normal(len: usize, std: f64, rng: &mut Rng) -> Vec<f64> {
    let dist = Normal::new(0.0, std).expect("finite positive std");
    (0..len).map(|_| dist.sample(rng)).collect()
}

/// Output of the single network initialised from `seed`.
pub fn single_network_features(raw: &FeatureMatrix, spec: &RandomNetSpec, seed: u64) -> Result<FeatureMatrix> {
    spec.validate()?;
    if raw.cols() != spec.input_dim {
        return Err(Error::DimMismatch { expected: spec.input_dim, got: raw.cols() });
    }
    let dims = spec.layer_dims();
    let last = dims.len() - 2;
    let mut h = raw.clone();
    for (layer, pair) in dims.windows(2).enumerate() {
        let mut rng = seed::rng_stream(seed, layer as u64);
        let w = init_weights(pair[0], pair[1], spec.init, &mut rng);
        h = h.matmul(&w, pair[1])?;
        if layer < last {
            let data = h.into_vec().into_iter().map(|v| v.max(0.0)).collect();
            h = FeatureMatrix::new(raw.rows(), pair[1], data, Provenance::Random)?;
        }
    }
    Ok(h.with_provenance(Provenance::Random))
}

/// Element-wise mean of the outputs of `spec.num_seeds` random networks.
pub fn random_mlp_features(raw: &FeatureMatrix, spec: &RandomNetSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    let mut acc: Option<Vec<f64>> = None;
    for i in 0..spec.num_seeds {
        let out = single_network_features(raw, spec, spec.base_seed.wrapping_add(i as u64))?;
        match acc.as_mut() {
            None => acc = Some(out.into_vec()),
            Some(a) => a.iter_mut().zip(out.as_slice()).for_each(|(s, v)| *s += v),
        }
    }
    let k = spec.num_seeds as f64;
    let data = acc.unwrap_or_default().into_iter().map(|v| v / k).collect();
    FeatureMatrix::new(raw.rows(), spec.output_dim, data, Provenance::Random)
}

/// `n x d` matrix of i.i.d. standard normal entries.
pub fn gaussian_random_features(n: usize, d: usize, seed: u64) -> Result<FeatureMatrix> {
    let mut rng = seed::rng(seed);
    let data = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    FeatureMatrix::new(n, d, data, Provenance::Random)
}
