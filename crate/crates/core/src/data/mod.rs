//! Corpus ingestion, vocabularies, discrete features and evaluation.

mod conll;
mod features;
mod metrics;
mod vocab;

pub use conll::{parse_conll, write_conll, ColumnRole, ColumnRoles, RawSentence};
pub use features::{extract_features, suffix, LabeledSequence, TokenFeatures, WINDOW, WINDOW_LEN};
pub use metrics::{bio2_spans, chunk_counts, chunk_prf, token_accuracy, Evaluator, Prf, PrfCounts, Span};
pub use vocab::{bigram_key, build_vocab, SymbolTable, Vocab, VocabConfig, BOS, EOS, UNK};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministically split off `fraction` of `items` as a held-out set.
/// Returns `(kept, held_out)`; both keep their original relative order.
/// With at least two items, each side gets at least one.
pub fn split_holdout<T: Clone>(items: &[T], fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let n = items.len();
    if n < 2 || fraction <= 0.0 {
        return (items.to_vec(), Vec::new());
    }
    let k = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut held = vec![false; n];
    for &i in &order[..k] {
        held[i] = true;
    }
    let (mut keep, mut out) = (Vec::with_capacity(n - k), Vec::with_capacity(k));
    for (i, item) in items.iter().enumerate() {
        if held[i] {
            out.push(item.clone());
        } else {
            keep.push(item.clone());
        }
    }
    (keep, out)
}
