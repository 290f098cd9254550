use rand_chacha::ChaCha8Rng;

use super::model::{Dropout, Model};
use super::TrainConfig;
use crate::data::LabeledSequence;
use crate::error::Result;
use crate::numkern::ParamStore;

/// Mutable training state: the model's parameters (with their AdaGrad
/// accumulators), the RNG for shuffling and dropout, and progress.
#[derive(Debug)]
pub struct TrainState {
    pub model: Model,
    pub rng: ChaCha8Rng,
    pub epoch: usize,
    pub updates: usize,
}

impl TrainState {
    pub fn new(model: Model, seed: u64) -> Self {
        use rand::SeedableRng;
        TrainState {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            epoch: 0,
            updates: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AdagradStats {
    /// Coordinates that moved.
    pub moved: usize,
    pub max_step: f64,
}

/// One AdaGrad update over the active coordinates. `observe` receives, for
/// every coordinate that has ever had a nonzero gradient, the applied step (subtracted
/// from the value) and whether this was the coordinate's first nonzero
/// gradient.
pub fn adagrad_update_observed<F: FnMut(f64, bool)>(store: &mut ParamStore, lr: f64, mut observe: F) -> AdagradStats {
    let mut stats = AdagradStats::default();
    store.for_each_active(|v, g, acc| {
        if *g == 0.0 && *acc == 0.0 {
            return;
        }
        let first = *acc == 0.0;
        *acc += *g * *g;
        let ratio = *g / acc.sqrt();
        // g / sqrt(g^2) is +-1 mathematically; take the sign directly so a
        // first step is exactly lr even when g^2 under- or overflows
        let step = if first || !ratio.is_finite() {
            lr * g.signum()
        } else {
            lr * ratio
        };
        *v -= step;
        if step != 0.0 {
            stats.moved += 1;
            stats.max_step = stats.max_step.max(step.abs());
        }
        observe(step, first);
    });
    stats
}

pub fn adagrad_update(store: &mut ParamStore, lr: f64) -> AdagradStats {
    adagrad_update_observed(store, lr, |_, _| {})
}

/// One stochastic update on a single sentence; returns the per-sample
/// objective before the update.
pub fn step(state: &mut TrainState, seq: &LabeledSequence, cfg: &TrainConfig) -> Result<f64> {
    let model = &mut state.model;
    let mut store = std::mem::take(&mut model.store);
    let out = (|| {
        store.zero_grads();
        let rate = model.spec().dropout;
        let dropout = (rate > 0.0).then_some(Dropout {
            rate,
            rng: &mut state.rng,
        });
        let loss = model.objective_on(&mut store, seq, cfg.criterion, cfg.l2, dropout)?;
        if let Some(max) = cfg.max_grad_norm {
            let n = store.grad_norm();
            if n > max {
                store.scale_grads(max / n);
            }
        }
        adagrad_update(&mut store, cfg.lr);
        Ok(loss)
    })();
    model.store = store;
    if out.is_ok() {
        state.updates += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkern::SlotKind;

    #[test]
    fn adagrad_two_step_trace() {
        let mut st = ParamStore::new();
        let id = st.add_zeros("x", 1, 1, SlotKind::Dense).unwrap();
        for expected in [-0.1, -0.1 - 0.1 * 0.5 / 0.5f64.sqrt()] {
            st.zero_grads();
            let (_, mut g) = st.split();
            g.slot(id)[0] = 0.5;
            adagrad_update(&mut st, 0.1);
            assert!((st.value(id)[0] - expected).abs() < 1e-12);
        }
        assert!((st.value(id)[0] - -0.170_710_678).abs() < 1e-8);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut st = ParamStore::new();
        let id = st.add("x", 1, 2, SlotKind::Dense, vec![0.3, -0.7]).unwrap();
        let stats = adagrad_update(&mut st, 0.1);
        assert_eq!(st.value(id), &[0.3, -0.7]);
        assert_eq!(st.accum(id), &[0.0, 0.0]);
        assert_eq!(stats.moved, 0);
    }

    #[test]
    fn first_steps_are_exactly_lr() {
        let mut st = ParamStore::new();
        let id = st.add("x", 1, 5, SlotKind::Dense, vec![0.0; 5]).unwrap();
        {
            let (_, mut g) = st.split();
            g.slot(id).copy_from_slice(&[1e-300, -3.7, 0.1, 12345.678, 0.0]);
        }
        let mut firsts = Vec::new();
        adagrad_update_observed(&mut st, 0.1, |s, first| {
            if first {
                firsts.push(s);
            }
        });
        assert_eq!(firsts, vec![0.1, -0.1, 0.1, 0.1]);
        assert_eq!(st.value(id), &[-0.1, 0.1, -0.1, -0.1, 0.0]);
    }

    #[test]
    fn steps_shrink_under_constant_gradient() {
        let mut st = ParamStore::new();
        let id = st.add_zeros("x", 1, 1, SlotKind::Dense).unwrap();
        let mut prev = f64::INFINITY;
        let mut acc = 0.0;
        for _ in 0..20 {
            st.zero_grads();
            let (_, mut g) = st.split();
            g.slot(id)[0] = -0.25;
            let stats = adagrad_update(&mut st, 0.1);
            assert!(stats.max_step <= prev);
            assert!(st.accum(id)[0] >= acc);
            prev = stats.max_step;
            acc = st.accum(id)[0];
        }
    }
}
