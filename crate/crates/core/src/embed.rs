//! Embedding tables, node (token) embeddings built from feature templates,
//! and the three edge-embedding strategies.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledSequence, SymbolTable, BOS, UNK, WINDOW};
use crate::error::{Error, Result};
use crate::numkern::{gemv_acc, gemv_t_acc, outer_acc, Grads, ParamId, ParamStore, Values};

/// A lookup table stored as a `Table` slot (`vocab size x dim`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbedTable {
    pub id: ParamId,
    pub dim: usize,
    pub trainable: bool,
}

impl EmbedTable {
    fn add_row_grad(&self, grads: &mut Grads<'_>, row: u32, g: &[f64]) {
        if !self.trainable {
            return;
        }
        for (a, b) in grads.row(self.id, row as usize).iter_mut().zip(g) {
            *a += b;
        }
    }
}

/// Which discrete features feed the node embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Context words on each side, `0..=2`.
    pub window: usize,
    pub suffixes: bool,
    pub pos: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window: WINDOW,
            suffixes: true,
            pos: false,
        }
    }
}

/// Concatenates the word embeddings of the context window with suffix and
/// POS embeddings. Component order: window words (offset -w..=+w), suffix-1,
/// suffix-2, POS.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEmbedder {
    pub words: EmbedTable,
    pub suffix1: Option<EmbedTable>,
    pub suffix2: Option<EmbedTable>,
    pub pos: Option<EmbedTable>,
    pub window: usize,
}

impl NodeEmbedder {
    pub fn dim(&self) -> usize {
        let extra: usize = [self.suffix1, self.suffix2, self.pos]
            .iter()
            .flatten()
            .map(|t| t.dim)
            .sum();
        self.words.dim * (2 * self.window + 1) + extra
    }

    /// Feature ids in component order; `None` position means the synthetic
    /// BOS node that precedes the sentence.
    fn ids(&self, seq: &LabeledSequence, position: Option<usize>) -> Vec<(EmbedTable, u32)> {
        let mut out = Vec::with_capacity(2 * self.window + 4);
        match position {
            Some(i) => {
                let f = &seq.features[i];
                for off in WINDOW - self.window..=WINDOW + self.window {
                    out.push((self.words, f.window[off]));
                }
                if let Some(t) = self.suffix1 {
                    out.push((t, f.suffix1));
                }
                if let Some(t) = self.suffix2 {
                    out.push((t, f.suffix2));
                }
                if let Some(t) = self.pos {
                    out.push((t, f.pos.unwrap_or(UNK)));
                }
            }
            None => {
                for _ in 0..2 * self.window + 1 {
                    out.push((self.words, BOS));
                }
                for t in [self.suffix1, self.suffix2, self.pos].into_iter().flatten() {
                    out.push((t, BOS));
                }
            }
        }
        out
    }

    fn gather(&self, values: Values<'_>, seq: &LabeledSequence, position: Option<usize>) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        for (t, id) in self.ids(seq, position) {
            v.extend_from_slice(values.row(t.id, id as usize));
        }
        v
    }

    /// Embedding of token `position`.
    pub fn node_embed(&self, values: Values<'_>, seq: &LabeledSequence, position: usize) -> Vec<f64> {
        self.gather(values, seq, Some(position))
    }

    /// Embedding of the boundary token before position 0.
    pub fn bos_embed(&self, values: Values<'_>, seq: &LabeledSequence) -> Vec<f64> {
        self.gather(values, seq, None)
    }

    /// Scatter `grad` (length `dim()`) back into the table rows that produced
    /// the embedding at `position` (`None` for BOS).
    pub fn backward(&self, grads: &mut Grads<'_>, seq: &LabeledSequence, position: Option<usize>, grad: &[f64]) {
        let mut off = 0;
        for (t, id) in self.ids(seq, position) {
            t.add_row_grad(grads, id, &grad[off..off + t.dim]);
            off += t.dim;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EdgeStrategyKind {
    Bigram,
    #[default]
    Concat,
    Feedforward,
}

impl std::str::FromStr for EdgeStrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bigram" => Ok(EdgeStrategyKind::Bigram),
            "concat" | "concatenation" => Ok(EdgeStrategyKind::Concat),
            "feedforward" | "ff" => Ok(EdgeStrategyKind::Feedforward),
            other => Err(Error::config(format!("unknown edge strategy {other:?}"))),
        }
    }
}

/// Produces the vector representing the link between adjacent tokens.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeStrategy {
    /// Lookup of the `(word[i-1], word[i])` pair; unseen pairs use the UNK row.
    Bigram { table: EmbedTable },
    /// `node(i-1) ++ node(i)`.
    Concat { node_dim: usize },
    /// `tanh(W (node(i-1) ++ node(i)) + b)`.
    Feedforward {
        weight: ParamId,
        bias: ParamId,
        node_dim: usize,
        out_dim: usize,
    },
}

impl EdgeStrategy {
    pub fn kind(&self) -> EdgeStrategyKind {
        match self {
            EdgeStrategy::Bigram { .. } => EdgeStrategyKind::Bigram,
            EdgeStrategy::Concat { .. } => EdgeStrategyKind::Concat,
            EdgeStrategy::Feedforward { .. } => EdgeStrategyKind::Feedforward,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EdgeStrategy::Bigram { table } => table.dim,
            EdgeStrategy::Concat { node_dim } => 2 * node_dim,
            EdgeStrategy::Feedforward { out_dim, .. } => *out_dim,
        }
    }

    /// Whether the strategy reads node embeddings at all.
    pub fn needs_nodes(&self) -> bool {
        !matches!(self, EdgeStrategy::Bigram { .. })
    }

    /// Edge `k` links positions `k - 1` and `k`; `k = 0` is the synthetic
    /// edge from BOS to the first token. `nodes` holds the node embeddings of
    /// the sentence and `bos` the BOS node embedding (unused by Bigram).
    pub fn edge_embed(
        &self,
        values: Values<'_>,
        seq: &LabeledSequence,
        k: usize,
        nodes: &[Vec<f64>],
        bos: &[f64],
    ) -> Vec<f64> {
        match self {
            EdgeStrategy::Bigram { table } => values.row(table.id, seq.bigram_ids[k] as usize).to_vec(),
            EdgeStrategy::Concat { .. } => concat_pair(nodes, bos, k),
            EdgeStrategy::Feedforward {
                weight, bias, out_dim, ..
            } => {
                let x = concat_pair(nodes, bos, k);
                let mut z = values.slot(*bias).to_vec();
                gemv_acc(values.slot(*weight), *out_dim, x.len(), &x, &mut z);
                z.iter_mut().for_each(|v| *v = v.tanh());
                z
            }
        }
    }

    /// Backpropagate `grad` for edge `k` (whose forward output was `out`)
    /// into node-embedding gradients and strategy parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        values: Values<'_>,
        grads: &mut Grads<'_>,
        seq: &LabeledSequence,
        k: usize,
        nodes: &[Vec<f64>],
        bos: &[f64],
        out: &[f64],
        grad: &[f64],
        node_grads: &mut [Vec<f64>],
        bos_grad: &mut [f64],
    ) {
        match self {
            EdgeStrategy::Bigram { table } => table.add_row_grad(grads, seq.bigram_ids[k], grad),
            EdgeStrategy::Concat { node_dim } => split_pair_grad(grad, *node_dim, k, node_grads, bos_grad),
            EdgeStrategy::Feedforward {
                weight,
                bias,
                node_dim,
                out_dim,
            } => {
                let dz: Vec<f64> = grad.iter().zip(out).map(|(g, y)| g * (1.0 - y * y)).collect();
                let x = concat_pair(nodes, bos, k);
                outer_acc(grads.slot(*weight), &dz, &x);
                for (b, d) in grads.slot(*bias).iter_mut().zip(&dz) {
                    *b += d;
                }
                let mut dx = vec![0.0; x.len()];
                gemv_t_acc(values.slot(*weight), *out_dim, x.len(), &dz, &mut dx);
                split_pair_grad(&dx, *node_dim, k, node_grads, bos_grad);
            }
        }
    }
}

fn concat_pair(nodes: &[Vec<f64>], bos: &[f64], k: usize) -> Vec<f64> {
    let prev: &[f64] = if k == 0 { bos } else { &nodes[k - 1] };
    let mut v = Vec::with_capacity(prev.len() + nodes[k].len());
    v.extend_from_slice(prev);
    v.extend_from_slice(&nodes[k]);
    v
}

fn split_pair_grad(g: &[f64], d: usize, k: usize, node_grads: &mut [Vec<f64>], bos_grad: &mut [f64]) {
    let prev: &mut [f64] = if k == 0 { bos_grad } else { &mut node_grads[k - 1] };
    for (a, b) in prev.iter_mut().zip(&g[..d]) {
        *a += b;
    }
    for (a, b) in node_grads[k].iter_mut().zip(&g[d..]) {
        *a += b;
    }
}

/// Overwrite rows of `table` from a text file with one `word v1 ... vD`
/// entry per line. Returns how many table rows were overwritten; words not
/// in `symbols` are skipped. A leading `count dim` header line is ignored.
pub fn load_pretrained<R: BufRead>(
    reader: R,
    symbols: &SymbolTable,
    store: &mut ParamStore,
    table: &EmbedTable,
) -> Result<usize> {
    let mut entries = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if n == 0
            && table.dim != 1
            && rest.len() == 1
            && word.parse::<usize>().is_ok()
            && rest[0].parse::<usize>().is_ok()
        {
            continue;
        }
        entries.push((word.to_string(), parse_vector(word, &rest)?));
    }
    install(entries, symbols, store, table)
}

/// Split layout: one word per line in `words`, the matching vector (space
/// separated) on the same line number of `vectors`.
pub fn load_pretrained_split<R1: BufRead, R2: BufRead>(
    words: R1,
    vectors: R2,
    symbols: &SymbolTable,
    store: &mut ParamStore,
    table: &EmbedTable,
) -> Result<usize> {
    let mut entries = Vec::new();
    let mut vec_lines = vectors.lines();
    for w in words.lines() {
        let w = w?;
        let w = w.trim().to_string();
        if w.is_empty() {
            continue;
        }
        let v = vec_lines
            .next()
            .ok_or_else(|| Error::Load(format!("vector file ends before word {w:?}")))??;
        let fields: Vec<&str> = v.split_whitespace().collect();
        let vector = parse_vector(&w, &fields)?;
        entries.push((w, vector));
    }
    install(entries, symbols, store, table)
}

fn parse_vector(word: &str, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::Load(format!("bad number {f:?} in the vector for {word:?}")))
        })
        .collect()
}

fn install(
    entries: Vec<(String, Vec<f64>)>,
    symbols: &SymbolTable,
    store: &mut ParamStore,
    table: &EmbedTable,
) -> Result<usize> {
    let mut written = vec![false; symbols.len()];
    for (word, v) in &entries {
        if v.len() != table.dim {
            return Err(Error::Load(format!(
                "vector for {word:?} has {} values, table dimension is {}",
                v.len(),
                table.dim
            )));
        }
        if let Some(id) = symbols.get(word) {
            let d = table.dim;
            store.value_mut(table.id)[id as usize * d..(id as usize + 1) * d].copy_from_slice(v);
            written[id as usize] = true;
        }
    }
    Ok(written.iter().filter(|&&w| w).count())
}
