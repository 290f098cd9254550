//! Exact inference over a label chain whose transition energies may differ
//! at every position.
//!
//! Everything here is a pure function of an [`EnergyLattice`]; the neural
//! layers only ever talk to inference through it. All dynamic programming
//! runs in log space.

use crate::error::{Error, Result};
use crate::numkern::logsumexp_unchecked;

/// Local scores, per-position transition tables, and boundary energies for
/// one sentence of length `T` over `L` labels.
///
/// `trans` holds `T - 1` row-major `L x L` tables; entry `[i][prev * L + cur]`
/// scores labels `(prev, cur)` at positions `(i, i + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyLattice {
    len: usize,
    labels: usize,
    pub local: Vec<f64>,
    pub trans: Vec<f64>,
    pub start: Vec<f64>,
    /// Energy of the last label; all zeros unless the model learns one.
    pub end: Vec<f64>,
}

impl EnergyLattice {
    pub fn zeros(len: usize, labels: usize) -> Result<Self> {
        if len == 0 || labels == 0 {
            return Err(Error::usage(format!(
                "lattice needs T >= 1 and L >= 1 (got T={len}, L={labels})"
            )));
        }
        Ok(EnergyLattice {
            len,
            labels,
            local: vec![0.0; len * labels],
            trans: vec![0.0; (len - 1) * labels * labels],
            start: vec![0.0; labels],
            end: vec![0.0; labels],
        })
    }

    /// Lattice whose transition table is the same `A` at every position.
    pub fn with_static_transitions(local: Vec<f64>, a: &[f64], start: Vec<f64>, labels: usize) -> Result<Self> {
        if labels == 0 || local.len() % labels != 0 || a.len() != labels * labels || start.len() != labels {
            return Err(Error::usage("inconsistent static lattice shapes"));
        }
        let len = local.len() / labels;
        let mut lat = EnergyLattice::zeros(len, labels)?;
        lat.local = local;
        lat.start = start;
        for t in lat.trans.chunks_exact_mut(labels * labels) {
            t.copy_from_slice(a);
        }
        Ok(lat)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.labels
    }

    pub fn local(&self, i: usize) -> &[f64] {
        &self.local[i * self.labels..(i + 1) * self.labels]
    }

    pub fn local_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.local[i * self.labels..(i + 1) * self.labels]
    }

    pub fn trans_table(&self, i: usize) -> &[f64] {
        let l2 = self.labels * self.labels;
        &self.trans[i * l2..(i + 1) * l2]
    }

    pub fn trans_table_mut(&mut self, i: usize) -> &mut [f64] {
        let l2 = self.labels * self.labels;
        &mut self.trans[i * l2..(i + 1) * l2]
    }

    #[inline]
    pub fn trans_at(&self, i: usize, prev: usize, cur: usize) -> f64 {
        self.trans[(i * self.labels + prev) * self.labels + cur]
    }

    /// Zeroed lattice of the same shape, used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        EnergyLattice::zeros(self.len, self.labels).expect("shape already validated")
    }

    pub fn is_finite(&self) -> bool {
        [&self.local, &self.trans, &self.start, &self.end]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    fn check_labels(&self, labels: &[usize]) -> Result<()> {
        if labels.len() != self.len {
            return Err(Error::usage(format!(
                "label sequence has length {}, lattice has {}",
                labels.len(),
                self.len
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= self.labels) {
            return Err(Error::usage(format!("label {bad} out of range (L = {})", self.labels)));
        }
        Ok(())
    }

    /// Add the indicator features of `labels` scaled by `w` into this
    /// (gradient-shaped) lattice.
    fn add_path_indicator(&mut self, labels: &[usize], w: f64) {
        let l = self.labels;
        self.start[labels[0]] += w;
        self.end[labels[self.len - 1]] += w;
        for (i, &y) in labels.iter().enumerate() {
            self.local[i * l + y] += w;
        }
        for i in 0..self.len - 1 {
            self.trans[(i * l + labels[i]) * l + labels[i + 1]] += w;
        }
    }
}

/// A labeling and its unnormalized score.
#[derive(Clone, Debug, PartialEq)]
pub struct PathScore {
    pub labels: Vec<usize>,
    pub score: f64,
}

pub fn path_score(lat: &EnergyLattice, labels: &[usize]) -> Result<f64> {
    lat.check_labels(labels)?;
    Ok(path_score_unchecked(lat, labels))
}

fn path_score_unchecked(lat: &EnergyLattice, labels: &[usize]) -> f64 {
    let l = lat.labels;
    let mut s = lat.start[labels[0]];
    for (i, &y) in labels.iter().enumerate() {
        s += lat.local[i * l + y];
    }
    for i in 0..lat.len - 1 {
        s += lat.trans_at(i, labels[i], labels[i + 1]);
    }
    s + lat.end[labels[lat.len - 1]]
}

/// Forward log-messages; row `i` includes `local[i]`.
fn forward(lat: &EnergyLattice) -> Vec<f64> {
    let (t, l) = (lat.len, lat.labels);
    let mut alpha = vec![0.0; t * l];
    for y in 0..l {
        alpha[y] = lat.start[y] + lat.local[y];
    }
    let mut buf = vec![0.0; l];
    for i in 1..t {
        let (prev_rows, cur_rows) = alpha.split_at_mut(i * l);
        let prev = &prev_rows[(i - 1) * l..];
        for y in 0..l {
            for (yp, b) in buf.iter_mut().enumerate() {
                *b = prev[yp] + lat.trans_at(i - 1, yp, y);
            }
            cur_rows[y] = logsumexp_unchecked(&buf) + lat.local[i * l + y];
        }
    }
    alpha
}

/// Backward log-messages; row `T - 1` is `end`, rows exclude `local[i]`.
fn backward(lat: &EnergyLattice) -> Vec<f64> {
    let (t, l) = (lat.len, lat.labels);
    let mut beta = vec![0.0; t * l];
    beta[(t - 1) * l..].copy_from_slice(&lat.end);
    let mut buf = vec![0.0; l];
    for i in (0..t - 1).rev() {
        let (cur_rows, next_rows) = beta.split_at_mut((i + 1) * l);
        let next = &next_rows[..l];
        for y in 0..l {
            for (yn, b) in buf.iter_mut().enumerate() {
                *b = lat.trans_at(i, y, yn) + lat.local[(i + 1) * l + yn] + next[yn];
            }
            cur_rows[i * l + y] = logsumexp_unchecked(&buf);
        }
    }
    beta
}

fn log_partition_from(lat: &EnergyLattice, alpha: &[f64]) -> f64 {
    let l = lat.labels;
    let last: Vec<f64> = alpha[(lat.len - 1) * l..]
        .iter()
        .zip(&lat.end)
        .map(|(a, e)| a + e)
        .collect();
    logsumexp_unchecked(&last)
}

pub fn log_partition(lat: &EnergyLattice) -> f64 {
    log_partition_from(lat, &forward(lat))
}

/// Posterior node marginals (`T x L`) and edge marginals (`(T-1) x L x L`,
/// same layout as the transition tables).
#[derive(Clone, Debug, PartialEq)]
pub struct Marginals {
    pub node: Vec<f64>,
    pub edge: Vec<f64>,
    pub log_partition: f64,
}

pub fn marginals(lat: &EnergyLattice) -> Marginals {
    let (t, l) = (lat.len, lat.labels);
    let alpha = forward(lat);
    let beta = backward(lat);
    let log_z = log_partition_from(lat, &alpha);
    let node: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| (a + b - log_z).exp()).collect();
    let mut edge = vec![0.0; (t - 1) * l * l];
    for i in 0..t - 1 {
        for yp in 0..l {
            let a = alpha[i * l + yp];
            for y in 0..l {
                let e = a + lat.trans_at(i, yp, y) + lat.local[(i + 1) * l + y] + beta[(i + 1) * l + y];
                edge[(i * l + yp) * l + y] = (e - log_z).exp();
            }
        }
    }
    Marginals {
        node,
        edge,
        log_partition: log_z,
    }
}

/// Max-plus recursion with backpointers. Ties go to the lower label index,
/// both at every backpointer and at the final argmax.
pub fn viterbi(lat: &EnergyLattice) -> PathScore {
    let labels = viterbi_path(lat, None);
    let score = path_score_unchecked(lat, &labels);
    PathScore { labels, score }
}

fn viterbi_path(lat: &EnergyLattice, gold: Option<&[usize]>) -> Vec<usize> {
    let (t, l) = (lat.len, lat.labels);
    let cost = |i: usize, y: usize| match gold {
        Some(g) if g[i] != y => 1.0,
        _ => 0.0,
    };
    let mut delta = vec![0.0; t * l];
    let mut back = vec![0usize; t * l];
    for y in 0..l {
        delta[y] = lat.start[y] + lat.local[y] + cost(0, y);
    }
    for i in 1..t {
        for y in 0..l {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for yp in 0..l {
                let s = delta[(i - 1) * l + yp] + lat.trans_at(i - 1, yp, y);
                if s > best {
                    best = s;
                    arg = yp;
                }
            }
            delta[i * l + y] = best + lat.local[i * l + y] + cost(i, y);
            back[i * l + y] = arg;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = 0;
    for y in 0..l {
        let s = delta[(t - 1) * l + y] + lat.end[y];
        if s > best {
            best = s;
            last = y;
        }
    }
    let mut path = vec![0; t];
    path[t - 1] = last;
    for i in (1..t).rev() {
        path[i - 1] = back[i * l + path[i]];
    }
    path
}

/// Hamming distance between two labelings.
pub fn hamming(gold: &[usize], other: &[usize]) -> usize {
    gold.iter().zip(other).filter(|(a, b)| a != b).count()
}

/// Viterbi over energies where every non-gold label gets +1 local energy.
/// The returned score includes that augmentation.
pub fn viterbi_cost_augmented(lat: &EnergyLattice, gold: &[usize]) -> Result<PathScore> {
    lat.check_labels(gold)?;
    let labels = viterbi_path(lat, Some(gold));
    let score = path_score_unchecked(lat, &labels) + hamming(gold, &labels) as f64;
    Ok(PathScore { labels, score })
}

/// Negative conditional log-likelihood of `gold` and its gradient with
/// respect to every lattice entry (marginals minus gold indicators).
pub fn loss_probabilistic(lat: &EnergyLattice, gold: &[usize]) -> Result<(f64, EnergyLattice)> {
    lat.check_labels(gold)?;
    let m = marginals(lat);
    let loss = m.log_partition - path_score_unchecked(lat, gold);
    let l = lat.labels;
    let mut grad = lat.zeros_like();
    grad.local.copy_from_slice(&m.node);
    grad.trans.copy_from_slice(&m.edge);
    grad.start.copy_from_slice(&m.node[..l]);
    grad.end.copy_from_slice(&m.node[(lat.len - 1) * l..]);
    grad.add_path_indicator(gold, -1.0);
    Ok((loss, grad))
}

/// Structured hinge with Hamming cost and its subgradient.
pub fn loss_margin(lat: &EnergyLattice, gold: &[usize]) -> Result<(f64, EnergyLattice)> {
    let aug = viterbi_cost_augmented(lat, gold)?;
    let loss = aug.score - path_score_unchecked(lat, gold);
    let mut grad = lat.zeros_like();
    if aug.labels != gold {
        grad.add_path_indicator(&aug.labels, 1.0);
        grad.add_path_indicator(gold, -1.0);
    }
    Ok((loss, grad))
}
