use super::conll::RawSentence;
use super::vocab::{bigram_key, Vocab, BOS, EOS};

/// Context words on each side of the current token.
pub const WINDOW: usize = 2;
pub const WINDOW_LEN: usize = 2 * WINDOW + 1;

/// Discrete feature ids of one position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenFeatures {
    /// Word ids at offsets -2..=+2; index `WINDOW` is the current word.
    pub window: [u32; WINDOW_LEN],
    pub suffix1: u32,
    pub suffix2: u32,
    pub pos: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSequence {
    pub word_ids: Vec<u32>,
    pub features: Vec<TokenFeatures>,
    /// Entry `i` is the bigram `(word[i-1], word[i])`, with `<BOS>` before
    /// position 0.
    pub bigram_ids: Vec<u32>,
    /// Present only when every gold label is in the label vocabulary.
    pub label_ids: Option<Vec<usize>>,
}

impl LabeledSequence {
    pub fn len(&self) -> usize {
        self.word_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_ids.is_empty()
    }
}

/// Last `k` characters of `word`, or the whole word when it is shorter.
pub fn suffix(word: &str, k: usize) -> &str {
    match word.char_indices().rev().nth(k.saturating_sub(1)) {
        Some((idx, _)) if k > 0 => &word[idx..],
        _ if k == 0 => "",
        _ => word,
    }
}

pub fn extract_features(raw: &RawSentence, vocab: &Vocab) -> LabeledSequence {
    let n = raw.tokens.len();
    let word_ids: Vec<u32> = raw.tokens.iter().map(|w| vocab.words.lookup(w)).collect();
    let features = (0..n)
        .map(|i| {
            let mut window = [0u32; WINDOW_LEN];
            for (slot, w) in window.iter_mut().enumerate() {
                let j = i as isize + slot as isize - WINDOW as isize;
                *w = if j < 0 {
                    BOS
                } else if j as usize >= n {
                    EOS
                } else {
                    word_ids[j as usize]
                };
            }
            let w = &raw.tokens[i];
            TokenFeatures {
                window,
                suffix1: vocab.suffix1.lookup(suffix(w, 1)),
                suffix2: vocab.suffix2.lookup(suffix(w, 2)),
                pos: raw.pos_tags.as_ref().map(|p| vocab.pos.lookup(&p[i])),
            }
        })
        .collect();
    let bigram_ids = (0..n)
        .map(|i| {
            let prev = if i == 0 { "<BOS>" } else { raw.tokens[i - 1].as_str() };
            vocab.bigrams.lookup(&bigram_key(prev, &raw.tokens[i]))
        })
        .collect();
    let label_ids = raw.gold_labels.as_ref().and_then(|labels| {
        labels
            .iter()
            .map(|l| vocab.labels.get(l).map(|i| i as usize))
            .collect::<Option<Vec<_>>>()
    });
    LabeledSequence {
        word_ids,
        features,
        bigram_ids,
        label_ids,
    }
}
