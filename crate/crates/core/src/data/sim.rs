use std::fs;
use std::path::Path;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::io::{load_embedding, save_embedding};
use crate::model::{co_prob, EmbeddingState, PairStats, PairStatsBuilder};
use crate::rng::{stream, TAG_SIM_EMBEDDING, TAG_SIM_PAIRS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLaw {
    Uniform,
    /// Zipf-Mandelbrot marginals `p(rank) ~ 1 / (rank^a + b)` for both words.
    Zipf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(rename = "V")]
    pub vocab_size: usize,
    #[serde(rename = "K")]
    pub dim: usize,
    /// Signal-to-noise scale; entries are drawn from `N(0, epsilon^2 / K)`.
    pub epsilon: f64,
    pub pair_law: PairLaw,
    pub zipf_a: f64,
    pub zipf_b: f64,
    #[serde(rename = "N")]
    pub num_pairs: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn uniform(vocab_size: usize, dim: usize, num_pairs: u64, seed: u64) -> Self {
        Self {
            vocab_size,
            dim,
            epsilon: 1.0,
            pair_law: PairLaw::Uniform,
            zipf_a: 1.0,
            zipf_b: 2.7,
            num_pairs,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 || self.dim == 0 {
            return invalid("V and K must be positive");
        }
        if self.num_pairs == 0 {
            return invalid("N must be at least 1");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        if self.pair_law == PairLaw::Zipf && !(self.zipf_a > 0.0 && self.zipf_b > 0.0) {
            return invalid("zipf parameters must be positive");
        }
        Ok(())
    }

    /// The prior precision matching the generator, `K / epsilon^2`.
    pub fn matched_lambda(&self) -> f64 {
        self.dim as f64 / (self.epsilon * self.epsilon)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationTruth {
    pub theta_true: EmbeddingState,
    pub config: SimConfig,
}

impl SimulationTruth {
    /// Same ground truth, different data draw.
    pub fn with_pairs(&self, num_pairs: u64, seed: u64) -> Self {
        Self {
            theta_true: self.theta_true.clone(),
            config: SimConfig { num_pairs, seed, ..self.config.clone() },
        }
    }
}

/// Ground-truth embedding with i.i.d. `N(0, epsilon^2 / K)` entries.
pub fn sim_embedding(cfg: &SimConfig) -> Result<SimulationTruth> {
    cfg.validate()?;
    let sd = cfg.epsilon / (cfg.dim as f64).sqrt();
    let mut rng = stream(cfg.seed, &[TAG_SIM_EMBEDDING]);
    let n = cfg.vocab_size * cfg.dim;
    let mut draw = |_| sd * rng.sample::<f64, _>(StandardNormal);
    let rho: Vec<f64> = (0..n).map(&mut draw).collect();
    let alpha: Vec<f64> = (0..n).map(&mut draw).collect();
    Ok(SimulationTruth {
        theta_true: EmbeddingState::new(cfg.vocab_size, cfg.dim, rho, alpha)?,
        config: cfg.clone(),
    })
}

/// Normalized Zipf-Mandelbrot probabilities; word id `i` has rank `i + 1`.
pub fn zipf_probabilities(vocab_size: usize, a: f64, b: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=vocab_size).map(|r| 1.0 / ((r as f64).powf(a) + b)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / z).collect()
}

/// Draw `N` word pairs under the configured law and label each one positive
/// with probability `sigma(rho_w . alpha_v)` of the ground truth.
pub fn sim_pairs(truth: &SimulationTruth) -> Result<PairStats> {
    let cfg = &truth.config;
    cfg.validate()?;
    if truth.theta_true.vocab_size() != cfg.vocab_size || truth.theta_true.dim() != cfg.dim {
        return invalid("ground truth shape disagrees with its configuration");
    }
    let v = cfg.vocab_size;
    let mut rng = stream(cfg.seed, &[TAG_SIM_PAIRS]);
    let zipf = match cfg.pair_law {
        PairLaw::Uniform => None,
        PairLaw::Zipf => Some(
            WeightedAliasIndex::new(zipf_probabilities(v, cfg.zipf_a, cfg.zipf_b))
                .map_err(|e| Error::InvalidInput(format!("zipf law: {e}")))?,
        ),
    };
    // Dense counts: simulated vocabularies are small, and this keeps the loop cheap.
    let mut pos = vec![0u64; v * v];
    let mut neg = vec![0u64; v * v];
    for _ in 0..cfg.num_pairs {
        let (w, c) = match &zipf {
            None => (rng.random_range(0..v), rng.random_range(0..v)),
            Some(law) => (law.sample(&mut rng), law.sample(&mut rng)),
        };
        if rng.random::<f64>() < co_prob(&truth.theta_true, w, c) {
            pos[w * v + c] += 1;
        } else {
            neg[w * v + c] += 1;
        }
    }
    let mut builder = PairStatsBuilder::new(v);
    for idx in 0..v * v {
        if pos[idx] > 0 {
            builder.add_positive(idx / v, idx % v, pos[idx]);
        }
        if neg[idx] > 0 {
            builder.add_negative(idx / v, idx % v, neg[idx]);
        }
    }
    builder.build()
}

/// Writes `<stem>.bin` (embedding) and `<stem>.json` (generator configuration).
pub fn save_truth(truth: &SimulationTruth, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_embedding(&truth.theta_true, &dir.join(format!("{stem}.bin")))?;
    fs::write(
        dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&truth.config)? + "\n",
    )?;
    Ok(())
}

pub fn load_truth(dir: &Path, stem: &str) -> Result<SimulationTruth> {
    let theta_true = load_embedding(&dir.join(format!("{stem}.bin")))?;
    let config: SimConfig = serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    Ok(SimulationTruth { theta_true, config })
}
