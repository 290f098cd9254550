use std::collections::HashMap;

use super::conll::RawSentence;
use super::features::suffix;
use crate::error::{Error, Result};

pub const UNK: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;

const RESERVED: [&str; 3] = ["<UNK>", "<BOS>", "<EOS>"];
const BIGRAM_SEP: char = '\u{1f}';

/// Dense symbol <-> index map. Feature tables reserve ids 0..3 for
/// UNK/BOS/EOS; the label table reserves nothing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<String>,
    index: HashMap<String, u32>,
    reserved: bool,
}

impl SymbolTable {
    pub fn new(reserved: bool) -> Self {
        let mut t = SymbolTable {
            symbols: Vec::new(),
            index: HashMap::new(),
            reserved,
        };
        if reserved {
            for s in RESERVED {
                t.insert(s);
            }
        }
        t
    }

    /// Rebuild from a stored symbol list (reserved symbols included).
    pub fn from_symbols(symbols: Vec<String>, reserved: bool) -> Result<Self> {
        if reserved && (symbols.len() < 3 || symbols[..3] != RESERVED) {
            return Err(Error::Format("symbol table lacks reserved entries".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i as u32).is_some() {
                return Err(Error::Format(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(SymbolTable {
            symbols,
            index,
            reserved,
        })
    }

    pub fn insert(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.symbols.len() as u32;
        self.symbols.push(s.to_string());
        self.index.insert(s.to_string(), i);
        i
    }

    pub fn get(&self, s: &str) -> Option<u32> {
        self.index.get(s).copied()
    }

    /// Id of `s`, falling back to UNK for reserved tables.
    pub fn lookup(&self, s: &str) -> u32 {
        self.get(s).unwrap_or(UNK)
    }

    pub fn symbol(&self, id: u32) -> &str {
        &self.symbols[id as usize]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn is_reserved(&self) -> bool {
        self.reserved
    }

    /// Number of non-reserved entries.
    pub fn num_observed(&self) -> usize {
        self.len() - if self.reserved { 3 } else { 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    pub words: SymbolTable,
    pub suffix1: SymbolTable,
    pub suffix2: SymbolTable,
    pub pos: SymbolTable,
    pub labels: SymbolTable,
    pub bigrams: SymbolTable,
}

#[derive(Clone, Debug)]
pub struct VocabConfig {
    /// Words (and suffixes, bigrams) seen fewer times map to UNK.
    pub min_count: usize,
    pub bigrams: bool,
    pub require_labels: bool,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_count: 1,
            bigrams: false,
            require_labels: true,
        }
    }
}

pub fn bigram_key(prev: &str, cur: &str) -> String {
    let mut k = String::with_capacity(prev.len() + cur.len() + 1);
    k.push_str(prev);
    k.push(BIGRAM_SEP);
    k.push_str(cur);
    k
}

/// Counts symbols and keeps those reaching `min_count`, in order of first
/// appearance.
struct Counter {
    order: Vec<String>,
    counts: HashMap<String, usize>,
}

impl Counter {
    fn new() -> Self {
        Counter {
            order: Vec::new(),
            counts: HashMap::new(),
        }
    }

    fn add(&mut self, s: &str) {
        match self.counts.get_mut(s) {
            Some(c) => *c += 1,
            None => {
                self.counts.insert(s.to_string(), 1);
                self.order.push(s.to_string());
            }
        }
    }

    fn into_table(self, min_count: usize, reserved: bool) -> SymbolTable {
        let mut t = SymbolTable::new(reserved);
        for s in &self.order {
            if self.counts[s] >= min_count {
                t.insert(s);
            }
        }
        t
    }
}

pub fn build_vocab(sentences: &[RawSentence], cfg: &VocabConfig) -> Result<Vocab> {
    if sentences.is_empty() {
        return Err(Error::usage("cannot build a vocabulary from an empty corpus"));
    }
    let (mut words, mut s1, mut s2, mut pos, mut labels, mut bigrams) = (
        Counter::new(),
        Counter::new(),
        Counter::new(),
        Counter::new(),
        Counter::new(),
        Counter::new(),
    );
    let mut labeled = 0;
    for s in sentences {
        for (i, w) in s.tokens.iter().enumerate() {
            words.add(w);
            s1.add(suffix(w, 1));
            s2.add(suffix(w, 2));
            if cfg.bigrams {
                let prev = if i == 0 {
                    RESERVED[BOS as usize]
                } else {
                    s.tokens[i - 1].as_str()
                };
                bigrams.add(&bigram_key(prev, w));
            }
        }
        if let Some(p) = &s.pos_tags {
            p.iter().for_each(|t| pos.add(t));
        }
        if let Some(l) = &s.gold_labels {
            labeled += 1;
            l.iter().for_each(|t| labels.add(t));
        }
    }
    if cfg.require_labels && labeled == 0 {
        return Err(Error::usage("no labeled sentence in the training corpus"));
    }
    let m = cfg.min_count.max(1);
    Ok(Vocab {
        words: words.into_table(m, true),
        suffix1: s1.into_table(m, true),
        suffix2: s2.into_table(m, true),
        pos: pos.into_table(1, true),
        labels: labels.into_table(1, false),
        bigrams: bigrams.into_table(m, true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(words: &[&str], labels: Option<&[&str]>) -> RawSentence {
        RawSentence::new(
            words.iter().map(|s| s.to_string()).collect(),
            None,
            labels.map(|l| l.iter().map(|s| s.to_string()).collect()),
        )
        .unwrap()
    }

    #[test]
    fn min_count_filters_words() {
        let corpus = vec![sent(&["a", "b"], Some(&["O", "O"])), sent(&["a"], Some(&["O"]))];
        let v1 = build_vocab(&corpus, &VocabConfig::default()).unwrap();
        assert_eq!(v1.words.num_observed(), 2);
        assert_eq!(v1.words.len(), 5);
        let v2 = build_vocab(
            &corpus,
            &VocabConfig {
                min_count: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(v2.words.num_observed(), 1);
        assert_eq!(v2.words.get("a"), Some(3));
        assert_eq!(v2.words.lookup("b"), UNK);
    }

    #[test]
    fn labels_are_exactly_observed() {
        let corpus = vec![sent(&["x", "y", "z"], Some(&["B-NP", "I-NP", "O"]))];
        let v = build_vocab(&corpus, &VocabConfig::default()).unwrap();
        assert_eq!(v.labels.len(), 3);
        assert!(!v.labels.is_reserved());
        assert!(v.labels.get("<UNK>").is_none());
    }

    #[test]
    fn unlabeled_corpus_rejected_when_labels_required() {
        let corpus = vec![sent(&["x"], None)];
        assert!(build_vocab(&corpus, &VocabConfig::default()).is_err());
        let cfg = VocabConfig {
            require_labels: false,
            ..Default::default()
        };
        assert!(build_vocab(&corpus, &cfg).is_ok());
        assert!(build_vocab(&[], &cfg).is_err());
    }

    #[test]
    fn reserved_ids_are_distinct_and_first() {
        let t = SymbolTable::new(true);
        assert_eq!(
            (t.get("<UNK>"), t.get("<BOS>"), t.get("<EOS>")),
            (Some(UNK), Some(BOS), Some(EOS))
        );
        let back = SymbolTable::from_symbols(t.symbols().to_vec(), true).unwrap();
        assert_eq!(back, t);
        assert!(SymbolTable::from_symbols(vec!["a".into()], true).is_err());
    }

    #[test]
    fn bigram_table() {
        let corpus = vec![sent(&["a", "b"], Some(&["O", "O"]))];
        let cfg = VocabConfig {
            bigrams: true,
            ..Default::default()
        };
        let v = build_vocab(&corpus, &cfg).unwrap();
        assert!(v.bigrams.get(&bigram_key("a", "b")).is_some());
        assert!(v.bigrams.get(&bigram_key("<BOS>", "a")).is_some());
        assert_eq!(v.bigrams.num_observed(), 2);
    }
}
