use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::store::{ParamId, ParamStore};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub h: f64,
    /// Maximum tolerated relative error.
    pub tol: f64,
    /// Slots with more coordinates than this are sampled.
    pub max_coords_per_slot: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            h: 1e-5,
            tol: 1e-4,
            max_coords_per_slot: 50,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SlotReport {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
    /// Flat index of the worst coordinate and its (analytic, numeric) pair.
    pub worst: Option<(usize, f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub slots: Vec<SlotReport>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.slots.iter().map(|s| s.max_rel_err).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.slots.iter().all(|s| s.max_rel_err <= self.tol)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SlotReport> {
        self.slots.iter().filter(move |s| s.max_rel_err > self.tol)
    }
}

pub(crate) fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Compare the analytic gradient produced by `loss` against central
/// differences.
///
/// `loss` must evaluate the objective at the store's current values and
/// accumulate its gradient into the store's gradient buffers. Gradients are
/// zeroed before every evaluation; values are restored exactly afterwards.
pub fn grad_check<F>(store: &mut ParamStore, mut loss: F, cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: FnMut(&mut ParamStore) -> Result<f64>,
{
    if !(cfg.h > 0.0) {
        return Err(Error::usage("grad_check step h must be positive"));
    }
    store.zero_grads();
    let base = loss(store)?;
    if !base.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss {base} at the base point")));
    }
    let analytic: Vec<Vec<f64>> = store.ids().map(|id| store.grad(id).to_vec()).collect();
    store.zero_grads();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut slots = Vec::with_capacity(store.len());
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        let grad = &analytic[id.index()];
        let coords = pick_coords(grad, cfg.max_coords_per_slot, &mut rng);
        let mut report = SlotReport {
            name: store.info(id).name.clone(),
            checked: coords.len(),
            max_rel_err: 0.0,
            worst: None,
        };
        for k in coords {
            let orig = store.value(id)[k];
            store.value_mut(id)[k] = orig + cfg.h;
            let plus = loss(store);
            // each evaluation starts clean: the loss may depend on which
            // table rows earlier calls marked as touched
            store.zero_grads();
            store.value_mut(id)[k] = orig - cfg.h;
            let minus = loss(store);
            store.value_mut(id)[k] = orig;
            store.zero_grads();
            let (plus, minus) = (plus?, minus?);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss perturbing {}[{k}]",
                    report.name
                )));
            }
            let numeric = (plus - minus) / (2.0 * cfg.h);
            let err = rel_err(grad[k], numeric);
            if report.worst.is_none() || err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst = Some((k, grad[k], numeric));
            }
        }
        slots.push(report);
    }
    Ok(GradCheckReport { slots, tol: cfg.tol })
}

/// All coordinates for small slots. For large slots, a seeded sample that
/// favours coordinates with nonzero analytic gradient and always includes a
/// few zero-gradient ones, so missing gradient paths are caught too.
fn pick_coords(grad: &[f64], max: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if grad.len() <= max {
        return (0..grad.len()).collect();
    }
    let (nonzero, zero): (Vec<usize>, Vec<usize>) = (0..grad.len()).partition(|&k| grad[k] != 0.0);
    let zero_quota = (max / 5).min(zero.len());
    let nz_take = (max - zero_quota).min(nonzero.len());
    let zero_take = (max - nz_take).min(zero.len());
    let mut out: Vec<usize> = sample(rng, nonzero.len(), nz_take)
        .into_iter()
        .map(|i| nonzero[i])
        .collect();
    out.extend(sample(rng, zero.len(), zero_take).into_iter().map(|i| zero[i]));
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkern::SlotKind;

    #[test]
    fn quadratic_is_exact() {
        let mut s = ParamStore::new();
        let t = s.add("theta", 1, 1, SlotKind::Dense, vec![3.0]).unwrap();
        let cfg = GradCheckConfig::default();
        let rep = grad_check(
            &mut s,
            |st| {
                let x = st.value(t)[0];
                st.split().1.slot(t)[0] += 2.0 * x;
                Ok(x * x)
            },
            &cfg,
        )
        .unwrap();
        assert!(rep.slots[0].max_rel_err < 1e-9, "{rep:?}");
        assert_eq!(s.value(t), &[3.0]);
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let mut s = ParamStore::new();
        s.add("theta", 2, 3, SlotKind::Dense, vec![0.5; 6]).unwrap();
        let rep = grad_check(&mut s, |_| Ok(4.0), &GradCheckConfig::default()).unwrap();
        assert_eq!(rep.max_rel_err(), 0.0);
        assert!(rep.passed());
    }

    #[test]
    fn wrong_gradient_is_reported() {
        let mut s = ParamStore::new();
        let t = s.add("theta", 1, 2, SlotKind::Dense, vec![1.0, 2.0]).unwrap();
        let rep = grad_check(
            &mut s,
            |st| {
                let (a, b) = (st.value(t)[0], st.value(t)[1]);
                // second coordinate's gradient deliberately dropped
                st.split().1.slot(t)[0] += 2.0 * a;
                Ok(a * a + b * b)
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(!rep.passed());
        assert_eq!(rep.slots[0].worst.unwrap().0, 1);
    }

    #[test]
    fn non_finite_loss_names_the_coordinate() {
        let mut s = ParamStore::new();
        let t = s.add("theta", 1, 1, SlotKind::Dense, vec![0.0]).unwrap();
        let err = grad_check(
            &mut s,
            |st| {
                let x = st.value(t)[0];
                Ok(if x > 0.0 { f64::NAN } else { x })
            },
            &GradCheckConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("theta[0]"), "{err}");
    }

    #[test]
    fn large_slots_are_sampled_deterministically() {
        let mut g = vec![0.0; 500];
        for k in (0..500).step_by(3) {
            g[k] = 1.0;
        }
        let a = pick_coords(&g, 50, &mut ChaCha8Rng::seed_from_u64(1));
        let b = pick_coords(&g, 50, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.iter().filter(|&&k| g[k] == 0.0).count() >= 10);
    }
}
