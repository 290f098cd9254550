use std::fmt;

use rand::seq::SliceRandom;

use super::model::Model;
use super::optim::{step, TrainState};
use super::{Metric, TrainConfig};
use crate::data::{Evaluator, LabeledSequence};
use crate::error::{Error, Result};

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-sentence objective over the epoch.
    pub loss: f64,
    /// Dev metric, when evaluated this epoch.
    pub dev: Option<f64>,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch={} loss={:.6} dev=", self.epoch, self.loss)?;
        match self.dev {
            Some(d) => write!(f, "{d:.6}"),
            None => f.write_str("nan"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev: f64,
    pub updates: usize,
}

/// Dev metric of `model` over `(features, gold label strings)` pairs.
pub fn evaluate(model: &Model, items: &[(LabeledSequence, Vec<String>)], metric: Metric) -> Result<f64> {
    let mut ev = Evaluator::new();
    for (seq, gold) in items {
        let pred: Vec<&str> = model.predict(seq)?.into_iter().map(|y| model.label_name(y)).collect();
        ev.add(gold, &pred)?;
    }
    Ok(match metric {
        Metric::Accuracy => ev.accuracy(),
        Metric::F1 => ev.prf().f1,
    })
}

/// Train for `cfg.epochs` passes, one update per sentence in a freshly
/// shuffled order each epoch, keeping the parameters of the best dev epoch.
/// With an empty dev set the training sentences are scored instead.
/// `on_epoch` sees each log line as soon as it is known.
pub fn fit<F: FnMut(&EpochLog)>(
    state: &mut TrainState,
    train: &[LabeledSequence],
    dev: &[(LabeledSequence, Vec<String>)],
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<FitReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::usage("training set is empty"));
    }
    if train.iter().any(|s| s.label_ids.is_none()) {
        return Err(Error::usage("every training sentence needs gold labels"));
    }
    let train_eval;
    let dev = if dev.is_empty() {
        let m = &state.model;
        train_eval = train
            .iter()
            .map(|s| {
                let gold = s
                    .label_ids
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&y| m.label_name(y).to_string())
                    .collect();
                (s.clone(), gold)
            })
            .collect::<Vec<_>>();
        &train_eval[..]
    } else {
        dev
    };

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Vec<Vec<f64>>)> = None;
    for e in 1..=cfg.epochs {
        order.shuffle(&mut state.rng);
        let mut total = 0.0;
        for &i in &order {
            total +=
                step(state, &train[i], cfg).map_err(|err| Error::Numeric(format!("epoch {e}, sentence {i}: {err}")))?;
        }
        state.epoch = e;
        let evaluated = e % cfg.eval_every == 0 || e == cfg.epochs;
        let dev_score = if evaluated {
            Some(evaluate(&state.model, dev, cfg.metric)?)
        } else {
            None
        };
        if let Some(d) = dev_score {
            if best.as_ref().is_none_or(|(_, b, _)| d > *b) {
                best = Some((e, d, state.model.store.snapshot()));
            }
        }
        let entry = EpochLog {
            epoch: e,
            loss: total / train.len() as f64,
            dev: dev_score,
        };
        on_epoch(&entry);
        log.push(entry);
    }
    let (best_epoch, best_dev, snap) = best.expect("the last epoch is always evaluated");
    state.model.store.restore(&snap)?;
    Ok(FitReport {
        log,
        best_epoch,
        best_dev,
        updates: state.updates,
    })
}
