use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};

/// Chunk with inclusive token bounds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub kind: String,
}

enum Tag<'a> {
    Begin(&'a str),
    Inside(&'a str),
    Outside,
}

fn classify(label: &str) -> Tag<'_> {
    match label {
        "B" => Tag::Begin(""),
        "I" => Tag::Inside(""),
        _ => {
            if let Some(k) = label.strip_prefix("B-") {
                Tag::Begin(k)
            } else if let Some(k) = label.strip_prefix("I-") {
                Tag::Inside(k)
            } else {
                Tag::Outside
            }
        }
    }
}

/// Chunks of a BIO2 label sequence. An `I-X` that does not continue an open
/// `X` chunk opens a new one. Labels outside the B/I scheme count as `O`;
/// bare `B`/`I` give chunks with an empty kind (word segmentation).
pub fn bio2_spans<S: AsRef<str>>(labels: &[S]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, l) in labels.iter().enumerate() {
        match classify(l.as_ref()) {
            Tag::Begin(k) => {
                if let Some((s, kind)) = open.take() {
                    spans.push(Span {
                        start: s,
                        end: i - 1,
                        kind: kind.to_string(),
                    });
                }
                open = Some((i, k));
            }
            Tag::Inside(k) => match open {
                Some((_, kind)) if kind == k => {}
                _ => {
                    if let Some((s, kind)) = open.take() {
                        spans.push(Span {
                            start: s,
                            end: i - 1,
                            kind: kind.to_string(),
                        });
                    }
                    open = Some((i, k));
                }
            },
            Tag::Outside => {
                if let Some((s, kind)) = open.take() {
                    spans.push(Span {
                        start: s,
                        end: i - 1,
                        kind: kind.to_string(),
                    });
                }
            }
        }
    }
    if let Some((s, kind)) = open {
        spans.push(Span {
            start: s,
            end: labels.len() - 1,
            kind: kind.to_string(),
        });
    }
    spans
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Matched / gold / predicted chunk counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PrfCounts {
    pub matched: usize,
    pub gold: usize,
    pub pred: usize,
}

impl PrfCounts {
    pub fn prf(&self) -> Prf {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let p = ratio(self.matched, self.pred);
        let r = ratio(self.matched, self.gold);
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Prf {
            precision: p,
            recall: r,
            f1,
        }
    }

    fn add(&mut self, o: PrfCounts) {
        self.matched += o.matched;
        self.gold += o.gold;
        self.pred += o.pred;
    }
}

pub fn chunk_counts(gold: &[Span], pred: &[Span]) -> PrfCounts {
    let g: HashSet<&Span> = gold.iter().collect();
    PrfCounts {
        matched: pred.iter().filter(|s| g.contains(s)).count(),
        gold: gold.len(),
        pred: pred.len(),
    }
}

pub fn chunk_prf(gold: &[Span], pred: &[Span]) -> Prf {
    chunk_counts(gold, pred).prf()
}

pub fn token_accuracy<S: AsRef<str>, T: AsRef<str>>(gold: &[S], pred: &[T]) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::usage(format!(
            "accuracy over sequences of different length ({} vs {})",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let eq = gold.iter().zip(pred).filter(|(a, b)| a.as_ref() == b.as_ref()).count();
    Ok(eq as f64 / gold.len() as f64)
}

/// Corpus-level accumulator for chunk P/R/F1 (overall and per chunk kind)
/// and token accuracy.
#[derive(Clone, Debug, Default)]
pub struct Evaluator {
    pub overall: PrfCounts,
    pub per_kind: BTreeMap<String, PrfCounts>,
    pub tokens: usize,
    pub correct: usize,
}

impl Evaluator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<S: AsRef<str>, T: AsRef<str>>(&mut self, gold: &[S], pred: &[T]) -> Result<()> {
        if gold.len() != pred.len() {
            return Err(Error::usage("gold and predicted label sequences differ in length"));
        }
        self.tokens += gold.len();
        self.correct += gold.iter().zip(pred).filter(|(a, b)| a.as_ref() == b.as_ref()).count();
        let gs = bio2_spans(gold);
        let ps = bio2_spans(pred);
        self.overall.add(chunk_counts(&gs, &ps));
        let mut kinds: Vec<&str> = gs.iter().chain(&ps).map(|s| s.kind.as_str()).collect();
        kinds.sort_unstable();
        kinds.dedup();
        for k in kinds {
            let g: Vec<Span> = gs.iter().filter(|s| s.kind == k).cloned().collect();
            let p: Vec<Span> = ps.iter().filter(|s| s.kind == k).cloned().collect();
            self.per_kind
                .entry(k.to_string())
                .or_default()
                .add(chunk_counts(&g, &p));
        }
        Ok(())
    }

    pub fn accuracy(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.correct as f64 / self.tokens as f64
        }
    }

    pub fn prf(&self) -> Prf {
        self.overall.prf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn span(s: usize, e: usize, k: &str) -> Span {
        Span {
            start: s,
            end: e,
            kind: k.into(),
        }
    }

    #[test]
    fn bio2_examples() {
        assert_eq!(
            bio2_spans(&["B-NP", "I-NP", "O", "B-NP"]),
            vec![span(0, 1, "NP"), span(3, 3, "NP")]
        );
        assert!(bio2_spans(&["O", "O"]).is_empty());
        assert_eq!(bio2_spans(&["I-NP", "I-NP"]), vec![span(0, 1, "NP")]);
        // type switch inside a run opens a new chunk
        assert_eq!(
            bio2_spans(&["B-NP", "I-VP", "I-VP"]),
            vec![span(0, 0, "NP"), span(1, 2, "VP")]
        );
        assert_eq!(bio2_spans(&["B", "I", "B"]), vec![span(0, 1, ""), span(2, 2, "")]);
    }

    #[test]
    fn prf_examples() {
        let s = vec![span(0, 1, "NP"), span(3, 3, "NP")];
        let p = chunk_prf(&s, &s);
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));

        let p = chunk_prf(&s, &[]);
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));

        let gold = vec![span(0, 0, "NP"), span(1, 1, "NP"), span(2, 2, "NP"), span(3, 3, "NP")];
        let pred = vec![span(0, 0, "NP"), span(1, 2, "NP")];
        let p = chunk_prf(&gold, &pred);
        assert_eq!(p.precision, 0.5);
        assert_eq!(p.recall, 0.25);
        assert!((p.f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(token_accuracy(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(token_accuracy(&["a", "b"], &["c", "d"]).unwrap(), 0.0);
        assert_eq!(
            token_accuracy(&["a", "b", "c", "d"], &["a", "b", "c", "x"]).unwrap(),
            0.75
        );
        assert!(token_accuracy(&["a"], &["a", "b"]).is_err());
    }

    #[test]
    fn evaluator_per_kind() {
        let mut ev = Evaluator::new();
        ev.add(&["B-NP", "B-VP", "O"], &["B-NP", "B-PP", "O"]).unwrap();
        assert_eq!(
            ev.overall,
            PrfCounts {
                matched: 1,
                gold: 2,
                pred: 2
            }
        );
        assert_eq!(
            ev.per_kind["VP"],
            PrfCounts {
                matched: 0,
                gold: 1,
                pred: 0
            }
        );
        assert_eq!(
            ev.per_kind["PP"],
            PrfCounts {
                matched: 0,
                gold: 0,
                pred: 1
            }
        );
        assert!((ev.accuracy() - 2.0 / 3.0).abs() < 1e-15);
    }

    fn label() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("O".to_string()),
            Just("B-NP".to_string()),
            Just("I-NP".to_string()),
            Just("B-VP".to_string()),
            Just("I-VP".to_string()),
        ]
    }

    proptest! {
        #[test]
        fn spans_disjoint_and_sorted(labels in prop::collection::vec(label(), 0..30)) {
            let spans = bio2_spans(&labels);
            for w in spans.windows(2) {
                prop_assert!(w[0].end < w[1].start);
            }
            for s in &spans {
                prop_assert!(s.start <= s.end && s.end < labels.len());
            }
        }

        #[test]
        fn self_match_is_perfect(labels in prop::collection::vec(label(), 1..30)) {
            let spans = bio2_spans(&labels);
            prop_assume!(!spans.is_empty());
            let p = chunk_prf(&spans, &spans);
            prop_assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        }

        #[test]
        fn f1_symmetric_when_sizes_match(
            a in prop::collection::vec((0usize..3, 0usize..2), 1..8),
            b_raw in prop::collection::vec((0usize..3, 0usize..2), 8),
        ) {
            let kinds = ["NP", "VP"];
            let mk = |v: &[(usize, usize)]| -> Vec<Span> {
                v.iter().enumerate().map(|(i, &(len, k))| span(10 * i, 10 * i + len, kinds[k])).collect()
            };
            let ga = mk(&a);
            let gb = mk(&b_raw[..a.len()]);
            prop_assert_eq!(chunk_prf(&ga, &gb).f1, chunk_prf(&gb, &ga).f1);
        }
    }
}
