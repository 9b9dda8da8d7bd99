use rand::distr::Distribution;
use rand_distr::weighted::WeightedAliasIndex;

use crate::error::{invalid, Result};
use crate::model::{PairStats, PairStatsBuilder, Vocabulary};
use crate::rng::{stream, TAG_NEGATIVES};

/// Window extraction and negative sampling settings.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CorpusConfig {
    pub window: usize,
    pub negatives_per_positive: usize,
    pub vocab_size_limit: usize,
    /// Exponent applied to unigram counts of the noise distribution.
    pub noise_exponent: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { window: 2, negatives_per_positive: 1, vocab_size_limit: 5000, noise_exponent: 1.0, seed: 0 }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return invalid("window must be at least 1");
        }
        if self.negatives_per_positive == 0 {
            return invalid("negatives per positive must be at least 1");
        }
        if self.vocab_size_limit == 0 {
            return invalid("vocabulary limit must be positive");
        }
        if !(self.noise_exponent.is_finite() && self.noise_exponent >= 0.0) {
            return invalid("noise exponent must be finite and nonnegative");
        }
        Ok(())
    }
}

/// Number of `(center, context)` positions for a sequence of `len` tokens with
/// windows truncated at the boundaries.
pub fn positive_pair_count(len: usize, window: usize) -> u64 {
    (0..len)
        .map(|i| (i.min(window) + (len - 1 - i).min(window)) as u64)
        .sum()
}

/// Count positive window pairs and draw `n_s` negatives per positive from the
/// empirical unigram law raised to `noise_exponent`.
pub fn extract_pairs(ids: &[usize], vocab: &Vocabulary, cfg: &CorpusConfig) -> Result<PairStats> {
    cfg.validate()?;
    let v = vocab.len();
    if let Some(&bad) = ids.iter().find(|&&w| w >= v) {
        return invalid(format!("word id {bad} out of range for V={v}"));
    }
    let mut builder = PairStatsBuilder::new(v);
    builder.set_total_tokens(ids.len() as u64);
    if ids.len() < 2 {
        return builder.build();
    }

    let mut counts = vec![0u64; v];
    for &w in ids {
        counts[w] += 1;
    }
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { (c as f64).powf(cfg.noise_exponent) })
        .collect();
    let noise = WeightedAliasIndex::new(weights)
        .map_err(|e| crate::Error::InvalidInput(format!("noise distribution: {e}")))?;
    let mut rng = stream(cfg.seed, &[TAG_NEGATIVES]);

    let m = cfg.window;
    for (i, &w) in ids.iter().enumerate() {
        let lo = i.saturating_sub(m);
        let hi = (i + m).min(ids.len() - 1);
        for j in lo..=hi {
            if j == i {
                continue;
            }
            builder.add_positive(w, ids[j], 1);
            for _ in 0..cfg.negatives_per_positive {
                builder.add_negative(w, noise.sample(&mut rng), 1);
            }
        }
    }
    builder.build()
}

/// Contiguous split: the final `ceil(fraction * len)` tokens are the test sequence.
pub fn split_holdout(ids: &[usize], fraction: f64, _seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return invalid(format!("holdout fraction must lie in (0, 1), got {fraction}"));
    }
    let n_test = (fraction * ids.len() as f64).ceil() as usize;
    if ids.len() < 2 || n_test >= ids.len() {
        return invalid(format!("cannot split {} tokens with fraction {fraction}", ids.len()));
    }
    let (train, test) = ids.split_at(ids.len() - n_test);
    Ok((train.to_vec(), test.to_vec()))
}
