use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spec::{ModelSpec, Variant};
use super::Criterion;
use crate::crf::{self, EnergyLattice};
use crate::data::{extract_features, LabeledSequence, RawSentence, Vocab, UNK, WINDOW};
use crate::embed::{EdgeStrategy, EdgeStrategyKind, EmbedTable, NodeEmbedder};
use crate::error::{Error, Result};
use crate::numkern::{Grads, ParamId, ParamStore, SlotKind, Values};
use crate::rnn::{project, project_backward, Encoder, EncoderTrace, Projection};

/// Weight tables of the linear CRF: one `vocab x L` table per template.
#[derive(Clone, Debug)]
struct LinearTemplates {
    /// Window word tables, offset `-w..=+w`.
    window: Vec<ParamId>,
    window_offset: usize,
    suffix1: Option<ParamId>,
    suffix2: Option<ParamId>,
    pos: Option<ParamId>,
}

impl LinearTemplates {
    fn active(&self, seq: &LabeledSequence, i: usize) -> Vec<(ParamId, usize)> {
        let f = &seq.features[i];
        let mut out: Vec<(ParamId, usize)> = self
            .window
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, f.window[self.window_offset + k] as usize))
            .collect();
        if let Some(t) = self.suffix1 {
            out.push((t, f.suffix1 as usize));
        }
        if let Some(t) = self.suffix2 {
            out.push((t, f.suffix2 as usize));
        }
        if let Some(t) = self.pos {
            out.push((t, f.pos.unwrap_or(UNK) as usize));
        }
        out
    }
}

/// Which parameter groups a variant uses and how they connect.
#[derive(Clone, Debug)]
struct Wiring {
    nodes: Option<NodeEmbedder>,
    node_enc: Option<Encoder>,
    node_proj: Option<Projection>,
    edge: Option<EdgeStrategy>,
    edge_enc: Option<Encoder>,
    edge_proj: Option<Projection>,
    mu: Option<ParamId>,
    trans: Option<ParamId>,
    start: Option<ParamId>,
    end: Option<ParamId>,
    linear: Option<LinearTemplates>,
}

/// An assembled model: architecture, vocabularies and parameters.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    vocab: Vocab,
    num_labels: usize,
    wiring: Wiring,
    pub store: ParamStore,
}

/// Intermediate values kept for the backward pass.
#[derive(Clone, Debug, Default)]
struct Cache {
    nodes: Vec<Vec<f64>>,
    bos: Vec<f64>,
    node_mask: Option<Vec<Vec<f64>>>,
    node_hs: Vec<Vec<f64>>,
    node_trace: Option<EncoderTrace>,
    /// Edge indices fed to the edge LSTM (`k` links positions `k-1`, `k`).
    edge_ks: Vec<usize>,
    edges: Vec<Vec<f64>>,
    edge_mask: Option<Vec<Vec<f64>>>,
    edge_hs: Vec<Vec<f64>>,
    edge_trace: Option<EncoderTrace>,
}

/// Result of a forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub lattice: EnergyLattice,
    cache: Cache,
}

/// Dropout source for a training forward pass.
pub struct Dropout<'a> {
    pub rate: f64,
    pub rng: &'a mut ChaCha8Rng,
}

fn uniform(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        rng.random_range(-scale..=scale)
    }
}

fn glorot(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn add_table(store: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, rows: usize, dim: usize) -> Result<EmbedTable> {
    let s = (3.0 / dim as f64).sqrt();
    let v = (0..rows * dim).map(|_| uniform(rng, s)).collect();
    let id = store.add(name, rows, dim, SlotKind::Table, v)?;
    Ok(EmbedTable {
        id,
        dim,
        trainable: true,
    })
}

fn add_projection(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    in_dim: usize,
    out_dim: usize,
    bias: bool,
) -> Result<Projection> {
    let s = glorot(in_dim, out_dim);
    Projection::register(store, name, in_dim, out_dim, bias, &mut || uniform(rng, s))
}

fn add_encoder(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    in_dim: usize,
    spec: &ModelSpec,
) -> Result<Encoder> {
    let s = 1.0 / (spec.hidden as f64).sqrt();
    Encoder::register(store, name, in_dim, spec.hidden, spec.is_bidirectional(), &mut || {
        uniform(rng, s)
    })
}

/// Inverted dropout: returns the per-coordinate multipliers it applied.
fn apply_dropout(xs: &mut [Vec<f64>], d: &mut Option<Dropout<'_>>) -> Option<Vec<Vec<f64>>> {
    let d = d.as_mut().filter(|d| d.rate > 0.0)?;
    let keep = 1.0 - d.rate;
    let masks: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            x.iter()
                .map(|_| if d.rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect()
        })
        .collect();
    for (x, m) in xs.iter_mut().zip(&masks) {
        x.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
    }
    Some(masks)
}

fn unmask(gs: &mut [Vec<f64>], masks: &Option<Vec<Vec<f64>>>) {
    if let Some(ms) = masks {
        for (g, m) in gs.iter_mut().zip(ms) {
            g.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(a, b)| *a += b);
}

/// Allocate and initialize all parameters for `spec`. The same spec,
/// vocabulary and seed always give bit-identical parameters.
pub fn assemble(spec: ModelSpec, vocab: Vocab, seed: u64) -> Result<Model> {
    spec.validate()?;
    let num_labels = vocab.labels.len();
    if num_labels == 0 {
        return Err(Error::config("the label set is empty"));
    }
    let l = num_labels;
    let v = spec.variant;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let edge_kind = spec.edge_kind();
    let feats = spec.features;

    let wants_nodes = v.has_node_lstm()
        || matches!(
            edge_kind,
            Some(EdgeStrategyKind::Concat | EdgeStrategyKind::Feedforward)
        );
    let nodes = if wants_nodes {
        let d = spec.embed_dim;
        let words = add_table(&mut store, &mut rng, "emb.word", vocab.words.len(), d)?;
        let (suffix1, suffix2) = if feats.suffixes {
            (
                Some(add_table(&mut store, &mut rng, "emb.suffix1", vocab.suffix1.len(), d)?),
                Some(add_table(&mut store, &mut rng, "emb.suffix2", vocab.suffix2.len(), d)?),
            )
        } else {
            (None, None)
        };
        let pos = if feats.pos {
            Some(add_table(&mut store, &mut rng, "emb.pos", vocab.pos.len(), d)?)
        } else {
            None
        };
        Some(NodeEmbedder {
            words,
            suffix1,
            suffix2,
            pos,
            window: feats.window,
        })
    } else {
        None
    };
    let node_dim = nodes.as_ref().map_or(0, NodeEmbedder::dim);

    let edge = match edge_kind {
        None => None,
        Some(EdgeStrategyKind::Bigram) => {
            if vocab.bigrams.num_observed() == 0 {
                return Err(Error::config(
                    "bigram edge strategy needs a vocabulary built with bigrams",
                ));
            }
            let table = add_table(&mut store, &mut rng, "emb.bigram", vocab.bigrams.len(), spec.embed_dim)?;
            Some(EdgeStrategy::Bigram { table })
        }
        Some(EdgeStrategyKind::Concat) => Some(EdgeStrategy::Concat { node_dim }),
        Some(EdgeStrategyKind::Feedforward) => {
            let out = spec.embed_dim;
            let s = glorot(2 * node_dim, out);
            let wv = (0..out * 2 * node_dim).map(|_| uniform(&mut rng, s)).collect();
            let weight = store.add("edge_ff.weight", out, 2 * node_dim, SlotKind::Dense, wv)?;
            let bias = store.add_zeros("edge_ff.bias", 1, out, SlotKind::Dense)?;
            Some(EdgeStrategy::Feedforward {
                weight,
                bias,
                node_dim,
                out_dim: out,
            })
        }
    };

    let (node_enc, node_proj) = if v.has_node_lstm() {
        let enc = add_encoder(&mut store, &mut rng, "node", node_dim, &spec)?;
        let proj = add_projection(&mut store, &mut rng, "node_proj", enc.output_dim(), l, false)?;
        (Some(enc), Some(proj))
    } else {
        (None, None)
    };

    // The transition projection carries an L*L bias: with zero weights it
    // emits a position-constant table, i.e. a static transition matrix.
    let (edge_enc, edge_proj) = match &edge {
        Some(e) => {
            let enc = add_encoder(&mut store, &mut rng, "edge", e.dim(), &spec)?;
            let proj = add_projection(&mut store, &mut rng, "edge_proj", enc.output_dim(), l * l, true)?;
            (Some(enc), Some(proj))
        }
        None => (None, None),
    };

    let mu = if v == Variant::EdgeBased1 {
        Some(store.add_zeros("mu", 1, l, SlotKind::Dense)?)
    } else {
        None
    };
    let trans = if v.has_static_transitions() {
        Some(store.add_zeros("trans", l, l, SlotKind::Dense)?)
    } else {
        None
    };
    let start = if v.is_tagger() {
        None
    } else {
        Some(store.add_zeros("start", 1, l, SlotKind::Dense)?)
    };
    let end = if spec.end_energy && !v.is_tagger() {
        Some(store.add_zeros("end", 1, l, SlotKind::Dense)?)
    } else {
        None
    };

    let linear = if v == Variant::LinearCrf {
        let w = feats.window;
        let mut window = Vec::new();
        for off in -(w as isize)..=(w as isize) {
            window.push(store.add_zeros(&format!("linear.word[{off:+}]"), vocab.words.len(), l, SlotKind::Table)?);
        }
        let (suffix1, suffix2) = if feats.suffixes {
            (
                Some(store.add_zeros("linear.suffix1", vocab.suffix1.len(), l, SlotKind::Table)?),
                Some(store.add_zeros("linear.suffix2", vocab.suffix2.len(), l, SlotKind::Table)?),
            )
        } else {
            (None, None)
        };
        let pos = if feats.pos {
            Some(store.add_zeros("linear.pos", vocab.pos.len(), l, SlotKind::Table)?)
        } else {
            None
        };
        Some(LinearTemplates {
            window,
            window_offset: WINDOW - w,
            suffix1,
            suffix2,
            pos,
        })
    } else {
        None
    };

    Ok(Model {
        spec,
        vocab,
        num_labels,
        wiring: Wiring {
            nodes,
            node_enc,
            node_proj,
            edge,
            edge_enc,
            edge_proj,
            mu,
            trans,
            start,
            end,
            linear,
        },
        store,
    })
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn label_name(&self, id: usize) -> &str {
        self.vocab.labels.symbol(id as u32)
    }

    /// Word embedding table, if the variant has one.
    pub fn word_table(&self) -> Option<EmbedTable> {
        self.wiring.nodes.as_ref().map(|n| n.words)
    }

    pub fn features(&self, raw: &RawSentence) -> LabeledSequence {
        extract_features(raw, &self.vocab)
    }

    /// Build the energy lattice of `seq` under the current parameters.
    pub fn forward(&self, seq: &LabeledSequence) -> Result<Forward> {
        self.forward_on(self.store.values(), seq, None)
    }

    pub fn forward_on(
        &self,
        values: Values<'_>,
        seq: &LabeledSequence,
        mut dropout: Option<Dropout<'_>>,
    ) -> Result<Forward> {
        let t = seq.len();
        if t == 0 {
            return Err(Error::usage("cannot score an empty sentence"));
        }
        let l = self.num_labels;
        let w = &self.wiring;
        let mut lat = EnergyLattice::zeros(t, l)?;
        let mut cache = Cache::default();

        if let Some(ne) = &w.nodes {
            cache.nodes = (0..t).map(|i| ne.node_embed(values, seq, i)).collect();
            if self.spec.full_length {
                cache.bos = ne.bos_embed(values, seq);
            }
        }

        if let Some(lin) = &w.linear {
            for i in 0..t {
                let row = lat.local_mut(i);
                for (tab, id) in lin.active(seq, i) {
                    add_into(row, values.row(tab, id));
                }
            }
        }
        if let Some(mu) = w.mu {
            for i in 0..t {
                add_into(lat.local_mut(i), values.slot(mu));
            }
        }
        if let (Some(enc), Some(proj)) = (&w.node_enc, &w.node_proj) {
            let mut inputs = cache.nodes.clone();
            cache.node_mask = apply_dropout(&mut inputs, &mut dropout);
            let (hs, trace) = enc.forward(values, &inputs)?;
            let scores = project(values, proj, &hs)?;
            for (i, s) in scores.iter().enumerate() {
                add_into(lat.local_mut(i), s);
            }
            cache.node_hs = hs;
            cache.node_trace = Some(trace);
        }

        if let Some(a) = w.trans {
            for i in 0..t - 1 {
                lat.trans_table_mut(i).copy_from_slice(values.slot(a));
            }
        }
        if let (Some(edge), Some(enc), Some(proj)) = (&w.edge, &w.edge_enc, &w.edge_proj) {
            let first = if self.spec.full_length { 0 } else { 1 };
            cache.edge_ks = (first..t).collect();
            if !cache.edge_ks.is_empty() {
                cache.edges = cache
                    .edge_ks
                    .iter()
                    .map(|&k| edge.edge_embed(values, seq, k, &cache.nodes, &cache.bos))
                    .collect();
                let mut inputs = cache.edges.clone();
                cache.edge_mask = apply_dropout(&mut inputs, &mut dropout);
                let (hs, trace) = enc.forward(values, &inputs)?;
                let tables = project(values, proj, &hs)?;
                for (&k, tab) in cache.edge_ks.iter().zip(&tables) {
                    if k == 0 {
                        add_into(&mut lat.start, &tab[..l]);
                    } else {
                        lat.trans_table_mut(k - 1).copy_from_slice(tab);
                    }
                }
                cache.edge_hs = hs;
                cache.edge_trace = Some(trace);
            }
        }

        if let Some(s) = w.start {
            add_into(&mut lat.start, values.slot(s));
        }
        if let Some(e) = w.end {
            add_into(&mut lat.end, values.slot(e));
        }
        Ok(Forward { lattice: lat, cache })
    }

    /// Accumulate parameter gradients given the gradient of the objective
    /// with respect to every lattice energy.
    pub fn backward_on(
        &self,
        values: Values<'_>,
        grads: &mut Grads<'_>,
        seq: &LabeledSequence,
        fwd: &Forward,
        g: &EnergyLattice,
    ) -> Result<()> {
        let t = seq.len();
        let l = self.num_labels;
        let w = &self.wiring;
        let c = &fwd.cache;
        let node_dim = w.nodes.as_ref().map_or(0, NodeEmbedder::dim);
        let mut node_grads = vec![vec![0.0; node_dim]; if w.nodes.is_some() { t } else { 0 }];
        let mut bos_grad = vec![0.0; c.bos.len()];

        if let Some(lin) = &w.linear {
            for i in 0..t {
                for (tab, id) in lin.active(seq, i) {
                    add_into(grads.row(tab, id), g.local(i));
                }
            }
        }
        if let Some(mu) = w.mu {
            let gm = grads.slot(mu);
            for i in 0..t {
                add_into(gm, g.local(i));
            }
        }
        if let (Some(enc), Some(proj), Some(trace)) = (&w.node_enc, &w.node_proj, &c.node_trace) {
            let gs: Vec<Vec<f64>> = (0..t).map(|i| g.local(i).to_vec()).collect();
            let dh = project_backward(values, grads, proj, &c.node_hs, &gs);
            let mut dx = enc.backward(values, grads, trace, &dh)?;
            unmask(&mut dx, &c.node_mask);
            for (ng, d) in node_grads.iter_mut().zip(&dx) {
                add_into(ng, d);
            }
        }

        if let Some(a) = w.trans {
            let ga = grads.slot(a);
            for i in 0..t - 1 {
                add_into(ga, g.trans_table(i));
            }
        }
        if let (Some(edge), Some(enc), Some(proj), Some(trace)) = (&w.edge, &w.edge_enc, &w.edge_proj, &c.edge_trace) {
            let gs: Vec<Vec<f64>> = c
                .edge_ks
                .iter()
                .map(|&k| {
                    if k == 0 {
                        let mut v = vec![0.0; l * l];
                        v[..l].copy_from_slice(&g.start);
                        v
                    } else {
                        g.trans_table(k - 1).to_vec()
                    }
                })
                .collect();
            let dh = project_backward(values, grads, proj, &c.edge_hs, &gs);
            let mut dx = enc.backward(values, grads, trace, &dh)?;
            unmask(&mut dx, &c.edge_mask);
            for ((&k, out), d) in c.edge_ks.iter().zip(&c.edges).zip(&dx) {
                edge.backward(
                    values,
                    grads,
                    seq,
                    k,
                    &c.nodes,
                    &c.bos,
                    out,
                    d,
                    &mut node_grads,
                    &mut bos_grad,
                );
            }
        }

        if let Some(s) = w.start {
            add_into(grads.slot(s), &g.start);
        }
        if let Some(e) = w.end {
            add_into(grads.slot(e), &g.end);
        }

        if let Some(ne) = &w.nodes {
            for (i, ng) in node_grads.iter().enumerate() {
                ne.backward(grads, seq, Some(i), ng);
            }
            let bos_used = c.edge_ks.first() == Some(&0) && w.edge.as_ref().is_some_and(EdgeStrategy::needs_nodes);
            if bos_used {
                ne.backward(grads, seq, None, &bos_grad);
            }
        }
        Ok(())
    }

    /// Per-sample objective `R + lambda/2 |theta_active|^2` on an explicit
    /// store; accumulates its gradient into the store's gradient buffers
    /// (which the caller zeroes).
    pub fn objective_on(
        &self,
        store: &mut ParamStore,
        seq: &LabeledSequence,
        criterion: Criterion,
        l2: f64,
        dropout: Option<Dropout<'_>>,
    ) -> Result<f64> {
        let gold = seq
            .label_ids
            .as_deref()
            .ok_or_else(|| Error::usage("training needs gold labels"))?;
        let fwd = self.forward_on(store.values(), seq, dropout)?;
        if !fwd.lattice.is_finite() {
            return Err(Error::Numeric("non-finite energy in lattice".into()));
        }
        let (loss, glat) = match criterion {
            Criterion::Probabilistic => crf::loss_probabilistic(&fwd.lattice, gold)?,
            Criterion::LargeMargin => crf::loss_margin(&fwd.lattice, gold)?,
        };
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss {loss} on a sentence of length {}",
                seq.len()
            )));
        }
        let (values, mut grads) = store.split();
        self.backward_on(values, &mut grads, seq, &fwd, &glat)?;
        let penalty = store.apply_l2(l2);
        Ok(loss + penalty)
    }

    /// Best label ids for `seq`.
    pub fn predict(&self, seq: &LabeledSequence) -> Result<Vec<usize>> {
        Ok(crf::viterbi(&self.forward(seq)?.lattice).labels)
    }

    /// Predicted label strings for a raw sentence.
    pub fn tag(&self, raw: &RawSentence) -> Result<Vec<String>> {
        let seq = self.features(raw);
        Ok(self
            .predict(&seq)?
            .into_iter()
            .map(|y| self.label_name(y).to_string())
            .collect())
    }

    /// Redraw every coordinate uniformly from `[-scale, scale]`, including
    /// slots that normally start at zero. Used to make gradient checks
    /// exercise generic parameter values.
    pub fn randomize(&mut self, scale: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<ParamId> = self.store.ids().collect();
        for id in ids {
            for v in self.store.value_mut(id) {
                *v = uniform(&mut rng, scale);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocab, VocabConfig};
    use crate::embed::FeatureConfig;
    use crate::numkern::{grad_check, GradCheckConfig};

    pub(crate) fn toy() -> (Vec<RawSentence>, Vocab) {
        let s = |w: &[&str], p: &[&str], y: &[&str]| {
            RawSentence::new(
                w.iter().map(|x| x.to_string()).collect(),
                Some(p.iter().map(|x| x.to_string()).collect()),
                Some(y.iter().map(|x| x.to_string()).collect()),
            )
            .unwrap()
        };
        let sents = vec![
            s(&["the", "cat", "sat"], &["DT", "NN", "VBD"], &["B-NP", "I-NP", "O"]),
            s(
                &["a", "dog", "ran", "home"],
                &["DT", "NN", "VBD", "NN"],
                &["B-NP", "I-NP", "O", "B-NP"],
            ),
            s(&["cats"], &["NNS"], &["B-NP"]),
        ];
        let vocab = build_vocab(
            &sents,
            &VocabConfig {
                bigrams: true,
                ..Default::default()
            },
        )
        .unwrap();
        (sents, vocab)
    }

    fn small_spec(v: Variant) -> ModelSpec {
        ModelSpec {
            variant: v,
            hidden: 3,
            embed_dim: 2,
            features: FeatureConfig {
                window: 1,
                suffixes: true,
                pos: true,
            },
            ..ModelSpec::new(v)
        }
    }

    #[test]
    fn projection_shapes() {
        let (_, vocab) = toy();
        let l = vocab.labels.len();
        assert_eq!(l, 3);
        let m = assemble(
            ModelSpec {
                hidden: 4,
                ..small_spec(Variant::EdgeBased1)
            },
            vocab.clone(),
            0,
        )
        .unwrap();
        let w = m.store.id("edge_proj.weight").unwrap();
        assert_eq!((m.store.info(w).rows, m.store.info(w).cols), (9, 8));
        assert!(m.store.id("node.fwd.w_input").is_none());
        assert_eq!(m.store.value(m.store.id("mu").unwrap()).len(), 3);

        let m = assemble(small_spec(Variant::LstmCrf), vocab, 0).unwrap();
        let a = m.store.id("trans").unwrap();
        assert_eq!((m.store.info(a).rows, m.store.info(a).cols), (3, 3));
        assert_eq!(m.store.value(m.store.id("start").unwrap()).len(), 3);
    }

    #[test]
    fn same_seed_same_parameters() {
        let (_, vocab) = toy();
        for v in Variant::ALL {
            let a = assemble(small_spec(v), vocab.clone(), 7).unwrap();
            let b = assemble(small_spec(v), vocab.clone(), 7).unwrap();
            assert_eq!(a.store.snapshot(), b.store.snapshot(), "{v}");
        }
        let a = assemble(small_spec(Variant::EdgeBased2), vocab.clone(), 7).unwrap();
        let c = assemble(small_spec(Variant::EdgeBased2), vocab, 8).unwrap();
        assert_ne!(a.store.snapshot(), c.store.snapshot());
    }

    #[test]
    fn single_token_has_no_transitions() {
        let (sents, vocab) = toy();
        for v in Variant::ALL {
            let m = assemble(small_spec(v), vocab.clone(), 1).unwrap();
            let seq = m.features(&sents[2]);
            let f = m.forward(&seq).unwrap();
            assert_eq!(f.lattice.len(), 1);
            assert!(f.lattice.trans.is_empty());
            assert!(f.lattice.is_finite());
        }
    }

    #[test]
    fn zero_edge_based_1_is_uniform() {
        let (sents, vocab) = toy();
        let mut m = assemble(small_spec(Variant::EdgeBased1), vocab, 1).unwrap();
        m.randomize(0.0, 0);
        let seq = m.features(&sents[1]);
        let lat = m.forward(&seq).unwrap().lattice;
        assert!(lat.local.iter().chain(&lat.trans).chain(&lat.start).all(|&x| x == 0.0));
        let marg = crf::marginals(&lat);
        assert!(marg.node.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn concat_transitions_are_local_without_recurrence() {
        // Freeze the recurrence so that each transition table depends only on
        // its own edge embedding; changing a word must then
        // only move the tables of the edges that touch its window.
        let (sents, vocab) = toy();
        let spec = ModelSpec {
            features: FeatureConfig {
                window: 0,
                suffixes: false,
                pos: false,
            },
            bidirectional: Some(false),
            ..small_spec(Variant::EdgeBased1)
        };
        let mut m = assemble(spec, vocab, 3).unwrap();
        for gate in crate::rnn::GATES {
            let id = m.store.id(&format!("edge.fwd.u_{gate}")).unwrap();
            m.store.value_mut(id).iter_mut().for_each(|v| *v = 0.0);
        }
        // a shut forget gate also cuts the cell-state path
        let wf = m.store.id("edge.fwd.w_forget").unwrap();
        m.store.value_mut(wf).iter_mut().for_each(|v| *v = 0.0);
        let bf = m.store.id("edge.fwd.b_forget").unwrap();
        m.store.value_mut(bf).iter_mut().for_each(|v| *v = -1e3);
        let base = m.features(&sents[1]);
        let mut alt = base.clone();
        let cat = m.vocab().words.lookup("cat");
        alt.features[3].window[WINDOW] = cat;
        let a = m.forward(&base).unwrap().lattice;
        let b = m.forward(&alt).unwrap().lattice;
        for i in 0..3 {
            let same = a.trans_table(i) == b.trans_table(i);
            // table i is the edge between positions i and i+1
            assert_eq!(same, i + 1 != 3, "table {i}");
        }
    }

    #[test]
    fn every_variant_passes_gradient_check() {
        let (sents, vocab) = toy();
        let cfg = GradCheckConfig::default();
        for v in Variant::ALL {
            for crit in [Criterion::Probabilistic, Criterion::LargeMargin] {
                for (strategy, full, end) in [
                    (None, false, false),
                    (Some(EdgeStrategyKind::Feedforward), true, true),
                    (Some(EdgeStrategyKind::Bigram), false, false),
                ] {
                    if strategy.is_some() && !v.is_edge_based() {
                        continue;
                    }
                    let spec = ModelSpec {
                        edge_strategy: strategy,
                        full_length: full,
                        end_energy: end,
                        ..small_spec(v)
                    };
                    let mut m = assemble(spec, vocab.clone(), 11).unwrap();
                    m.randomize(0.5, 5);
                    let seq = m.features(&sents[1]);
                    let mut store = std::mem::take(&mut m.store);
                    let rep = grad_check(&mut store, |st| m.objective_on(st, &seq, crit, 1e-3, None), &cfg).unwrap();
                    assert!(
                        rep.passed(),
                        "{v} {crit:?} {strategy:?}: {:?}",
                        rep.failures().collect::<Vec<_>>()
                    );
                    assert!(rep.slots.iter().all(|s| s.checked > 0));
                }
            }
        }
    }
}
