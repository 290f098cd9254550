//! Synthetic corpus whose labels are a pure function of the word bigram.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::RawSentence;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    pub sentences: usize,
    pub vocab_size: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            sentences: 600,
            vocab_size: 20,
            min_len: 5,
            max_len: 15,
        }
    }
}

/// `B` where a token repeats its predecessor, `O` elsewhere.
pub fn bigram_labels<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if i > 0 && tokens[i - 1].as_ref() == t.as_ref() {
                "B".to_string()
            } else {
                "O".to_string()
            }
        })
        .collect()
}

/// Sentences of tokens `w0..w{V-1}` drawn uniformly, lengths uniform in
/// `min_len..=max_len`. Deterministic given the seed.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<RawSentence>> {
    if cfg.vocab_size == 0 || cfg.min_len == 0 || cfg.min_len > cfg.max_len {
        return Err(Error::usage(
            "synth needs vocab size >= 1 and 1 <= min length <= max length",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.sentences)
        .map(|_| {
            let n = rng.random_range(cfg.min_len..=cfg.max_len);
            let tokens: Vec<String> = (0..n)
                .map(|_| format!("w{}", rng.random_range(0..cfg.vocab_size)))
                .collect();
            let labels = bigram_labels(&tokens);
            RawSentence::new(tokens, None, Some(labels))
        })
        .collect()
}
