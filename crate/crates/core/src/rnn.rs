//! LSTM and BiLSTM layers with hand-written backpropagation through time,
//! plus the affine projection from hidden states to energy vectors.
//!
//! The cell is the plain forget-gate LSTM without peepholes:
//!
//! ```text
//! i = sigmoid(W_i x + U_i h' + b_i)     f = sigmoid(W_f x + U_f h' + b_f)
//! o = sigmoid(W_o x + U_o h' + b_o)     g = tanh(W_g x + U_g h' + b_g)
//! c = f * c' + i * g                    h = o * tanh(c)
//! ```

use crate::error::{Error, Result};
use crate::numkern::{gemv_acc, gemv_t_acc, outer_acc, sigmoid_scalar, Grads, ParamId, ParamStore, SlotKind, Values};

pub const GATES: [&str; 4] = ["input", "forget", "output", "cell"];
const I: usize = 0;
const F: usize = 1;
const O: usize = 2;
const G: usize = 3;

/// Per-gate input weights (`hidden x input_dim`), recurrent weights
/// (`hidden x hidden`) and biases, each its own named slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub w: [ParamId; 4],
    pub u: [ParamId; 4],
    pub b: [ParamId; 4],
}

impl LstmParams {
    /// Register the twelve slots under `prefix`. Weights come from `init`;
    /// the forget-gate bias starts at 1, other biases at 0.
    pub fn register<R: FnMut() -> f64>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        init: &mut R,
    ) -> Result<Self> {
        if hidden == 0 || input_dim == 0 {
            return Err(Error::config(format!("{prefix}: LSTM dimensions must be positive")));
        }
        let mut w = Vec::with_capacity(4);
        let mut u = Vec::with_capacity(4);
        let mut b = Vec::with_capacity(4);
        for (k, gate) in GATES.iter().enumerate() {
            let wv = (0..hidden * input_dim).map(|_| init()).collect();
            w.push(store.add(&format!("{prefix}.w_{gate}"), hidden, input_dim, SlotKind::Dense, wv)?);
            let uv = (0..hidden * hidden).map(|_| init()).collect();
            u.push(store.add(&format!("{prefix}.u_{gate}"), hidden, hidden, SlotKind::Dense, uv)?);
            let bias = if k == F { 1.0 } else { 0.0 };
            b.push(store.add(
                &format!("{prefix}.b_{gate}"),
                1,
                hidden,
                SlotKind::Dense,
                vec![bias; hidden],
            )?);
        }
        Ok(LstmParams {
            input_dim,
            hidden,
            w: w.try_into().unwrap(),
            u: u.try_into().unwrap(),
            b: b.try_into().unwrap(),
        })
    }
}

/// Everything one forward step computed.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmStep {
    pub input: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Gate pre-activations, in [`GATES`] order.
    pub pre: [Vec<f64>; 4],
    /// Gate activations (sigmoid for i/f/o, tanh for the candidate).
    pub act: [Vec<f64>; 4],
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LstmTrace {
    pub steps: Vec<LstmStep>,
}

impl LstmTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn lstm_step(values: Values<'_>, p: &LstmParams, x: &[f64], h_prev: Vec<f64>, c_prev: Vec<f64>) -> LstmStep {
    let hd = p.hidden;
    let pre: [Vec<f64>; 4] = std::array::from_fn(|k| {
        let mut a = values.slot(p.b[k]).to_vec();
        gemv_acc(values.slot(p.w[k]), hd, p.input_dim, x, &mut a);
        gemv_acc(values.slot(p.u[k]), hd, hd, &h_prev, &mut a);
        a
    });
    let act: [Vec<f64>; 4] = std::array::from_fn(|k| {
        if k == G {
            pre[k].iter().map(|v| v.tanh()).collect()
        } else {
            pre[k].iter().map(|&v| sigmoid_scalar(v)).collect()
        }
    });
    let c: Vec<f64> = (0..hd).map(|j| act[F][j] * c_prev[j] + act[I][j] * act[G][j]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..hd).map(|j| act[O][j] * tanh_c[j]).collect();
    LstmStep {
        input: x.to_vec(),
        h_prev,
        c_prev,
        pre,
        act,
        c,
        tanh_c,
        h,
    }
}

/// Run the cell over `inputs` from zero initial state.
pub fn lstm_forward(values: Values<'_>, p: &LstmParams, inputs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, LstmTrace)> {
    if let Some(bad) = inputs.iter().find(|x| x.len() != p.input_dim) {
        return Err(Error::usage(format!(
            "LSTM expects inputs of dimension {}, got {}",
            p.input_dim,
            bad.len()
        )));
    }
    let mut h = vec![0.0; p.hidden];
    let mut c = vec![0.0; p.hidden];
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        let step = lstm_step(values, p, x, h, c);
        h = step.h.clone();
        c = step.c.clone();
        steps.push(step);
    }
    let hs = steps.iter().map(|s| s.h.clone()).collect();
    Ok((hs, LstmTrace { steps }))
}

/// Backpropagate `grad_h` (one vector per step) through the recurrence.
/// Parameter gradients are accumulated into `grads`; returns the gradient
/// with respect to each input.
pub fn lstm_backward(
    values: Values<'_>,
    grads: &mut Grads<'_>,
    p: &LstmParams,
    trace: &LstmTrace,
    grad_h: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    if grad_h.len() != trace.len() {
        return Err(Error::usage(format!(
            "LSTM backward: {} upstream gradients for a trace of length {}",
            grad_h.len(),
            trace.len()
        )));
    }
    let hd = p.hidden;
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dx_all = vec![Vec::new(); trace.len()];
    let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hd]);
    for (t, step) in trace.steps.iter().enumerate().rev() {
        let [ai, af, ao, ag] = &step.act;
        for j in 0..hd {
            let dh = grad_h[t][j] + dh_next[j];
            let d_o = dh * step.tanh_c[j];
            let dc = dc_next[j] + dh * ao[j] * (1.0 - step.tanh_c[j] * step.tanh_c[j]);
            da[I][j] = dc * ag[j] * ai[j] * (1.0 - ai[j]);
            da[F][j] = dc * step.c_prev[j] * af[j] * (1.0 - af[j]);
            da[O][j] = d_o * ao[j] * (1.0 - ao[j]);
            da[G][j] = dc * ai[j] * (1.0 - ag[j] * ag[j]);
            dc_next[j] = dc * af[j];
        }
        let mut dx = vec![0.0; p.input_dim];
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..4 {
            outer_acc(grads.slot(p.w[k]), &da[k], &step.input);
            outer_acc(grads.slot(p.u[k]), &da[k], &step.h_prev);
            for (b, d) in grads.slot(p.b[k]).iter_mut().zip(&da[k]) {
                *b += d;
            }
            gemv_t_acc(values.slot(p.w[k]), hd, p.input_dim, &da[k], &mut dx);
            gemv_t_acc(values.slot(p.u[k]), hd, hd, &da[k], &mut dh_next);
        }
        dx_all[t] = dx;
    }
    Ok(dx_all)
}

/// Forward and backward LSTMs over the same inputs; position `i` outputs
/// `fwd_h[i] ++ bwd_h[i]`, where the backward pass reads the inputs reversed.
pub fn bilstm_forward(
    values: Values<'_>,
    fwd: &LstmParams,
    bwd: &LstmParams,
    inputs: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, LstmTrace, LstmTrace)> {
    if fwd.input_dim != bwd.input_dim {
        return Err(Error::usage("BiLSTM directions disagree on input dimension"));
    }
    let (hf, tf) = lstm_forward(values, fwd, inputs)?;
    let rev: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
    let (hb, tb) = lstm_forward(values, bwd, &rev)?;
    let n = inputs.len();
    let hs = (0..n)
        .map(|i| {
            let mut v = hf[i].clone();
            v.extend_from_slice(&hb[n - 1 - i]);
            v
        })
        .collect();
    Ok((hs, tf, tb))
}

pub fn bilstm_backward(
    values: Values<'_>,
    grads: &mut Grads<'_>,
    fwd: &LstmParams,
    bwd: &LstmParams,
    traces: (&LstmTrace, &LstmTrace),
    grad_h: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let n = grad_h.len();
    let hd = fwd.hidden;
    let gf: Vec<Vec<f64>> = grad_h.iter().map(|g| g[..hd].to_vec()).collect();
    let gb: Vec<Vec<f64>> = grad_h.iter().rev().map(|g| g[hd..].to_vec()).collect();
    let mut dx = lstm_backward(values, grads, fwd, traces.0, &gf)?;
    let dxb = lstm_backward(values, grads, bwd, traces.1, &gb)?;
    for i in 0..n {
        for (a, b) in dx[i].iter_mut().zip(&dxb[n - 1 - i]) {
            *a += b;
        }
    }
    Ok(dx)
}

/// Unidirectional or bidirectional recurrent encoder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Encoder {
    Uni(LstmParams),
    Bi { fwd: LstmParams, bwd: LstmParams },
}

#[derive(Clone, Debug)]
pub enum EncoderTrace {
    Uni(LstmTrace),
    Bi(LstmTrace, LstmTrace),
}

impl Encoder {
    pub fn register<R: FnMut() -> f64>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        bidirectional: bool,
        init: &mut R,
    ) -> Result<Self> {
        if bidirectional {
            let fwd = LstmParams::register(store, &format!("{prefix}.fwd"), input_dim, hidden, init)?;
            let bwd = LstmParams::register(store, &format!("{prefix}.bwd"), input_dim, hidden, init)?;
            Ok(Encoder::Bi { fwd, bwd })
        } else {
            Ok(Encoder::Uni(LstmParams::register(
                store,
                &format!("{prefix}.fwd"),
                input_dim,
                hidden,
                init,
            )?))
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Encoder::Uni(p) => p.hidden,
            Encoder::Bi { fwd, bwd } => fwd.hidden + bwd.hidden,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Encoder::Uni(p) => p.input_dim,
            Encoder::Bi { fwd, .. } => fwd.input_dim,
        }
    }

    pub fn forward(&self, values: Values<'_>, inputs: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, EncoderTrace)> {
        match self {
            Encoder::Uni(p) => {
                let (hs, t) = lstm_forward(values, p, inputs)?;
                Ok((hs, EncoderTrace::Uni(t)))
            }
            Encoder::Bi { fwd, bwd } => {
                let (hs, tf, tb) = bilstm_forward(values, fwd, bwd, inputs)?;
                Ok((hs, EncoderTrace::Bi(tf, tb)))
            }
        }
    }

    pub fn backward(
        &self,
        values: Values<'_>,
        grads: &mut Grads<'_>,
        trace: &EncoderTrace,
        grad_h: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>> {
        match (self, trace) {
            (Encoder::Uni(p), EncoderTrace::Uni(t)) => lstm_backward(values, grads, p, t, grad_h),
            (Encoder::Bi { fwd, bwd }, EncoderTrace::Bi(tf, tb)) => {
                bilstm_backward(values, grads, fwd, bwd, (tf, tb), grad_h)
            }
            _ => Err(Error::usage("encoder trace does not match encoder direction")),
        }
    }
}

/// Per-position affine map `W h (+ b)` with no normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Projection {
    pub fn register<R: FnMut() -> f64>(
        store: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        with_bias: bool,
        init: &mut R,
    ) -> Result<Self> {
        let wv = (0..in_dim * out_dim).map(|_| init()).collect();
        let weight = store.add(&format!("{prefix}.weight"), out_dim, in_dim, SlotKind::Dense, wv)?;
        let bias = if with_bias {
            Some(store.add_zeros(&format!("{prefix}.bias"), 1, out_dim, SlotKind::Dense)?)
        } else {
            None
        };
        Ok(Projection {
            weight,
            bias,
            in_dim,
            out_dim,
        })
    }
}

pub fn project(values: Values<'_>, p: &Projection, hs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    hs.iter()
        .map(|h| {
            if h.len() != p.in_dim {
                return Err(Error::usage(format!(
                    "projection expects dimension {}, got {}",
                    p.in_dim,
                    h.len()
                )));
            }
            let mut out = match p.bias {
                Some(b) => values.slot(b).to_vec(),
                None => vec![0.0; p.out_dim],
            };
            gemv_acc(values.slot(p.weight), p.out_dim, p.in_dim, h, &mut out);
            Ok(out)
        })
        .collect()
}

/// Accumulate projection parameter gradients; returns gradients wrt `hs`.
pub fn project_backward(
    values: Values<'_>,
    grads: &mut Grads<'_>,
    p: &Projection,
    hs: &[Vec<f64>],
    grad_out: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    hs.iter()
        .zip(grad_out)
        .map(|(h, g)| {
            outer_acc(grads.slot(p.weight), g, h);
            if let Some(b) = p.bias {
                for (a, d) in grads.slot(b).iter_mut().zip(g) {
                    *a += d;
                }
            }
            let mut dh = vec![0.0; p.in_dim];
            gemv_t_acc(values.slot(p.weight), p.out_dim, p.in_dim, g, &mut dh);
            dh
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkern::{grad_check, GradCheckConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_store(input: usize, hidden: usize, seed: u64) -> (ParamStore, LstmParams) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = ParamStore::new();
        let mut init = || rng.random_range(-0.8..0.8);
        let p = LstmParams::register(&mut st, "lstm", input, hidden, &mut init).unwrap();
        for k in 0..4 {
            for v in st.value_mut(p.b[k]) {
                *v += init();
            }
        }
        (st, p)
    }

    #[test]
    fn zero_params_stay_at_zero() {
        let mut st = ParamStore::new();
        let p = LstmParams::register(&mut st, "z", 3, 2, &mut || 0.0).unwrap();
        st.value_mut(p.b[F]).iter_mut().for_each(|v| *v = 0.0);
        let inputs = vec![vec![1.0, -2.0, 0.5]; 4];
        let (hs, trace) = lstm_forward(st.values(), &p, &inputs).unwrap();
        assert!(hs.iter().flatten().all(|&v| v == 0.0));
        assert!(trace.steps.iter().all(|s| s.act[I].iter().all(|&a| a == 0.5)));
        let (hs, _) = lstm_forward(st.values(), &p, &[]).unwrap();
        assert!(hs.is_empty());
    }

    #[test]
    fn scalar_step_matches_hand_evaluation() {
        let mut st = ParamStore::new();
        let p = LstmParams::register(&mut st, "s", 1, 1, &mut || 1.0).unwrap();
        st.value_mut(p.b[F])[0] = 0.0;
        let (hs, _) = lstm_forward(st.values(), &p, &[vec![1.0]]).unwrap();
        // h0 = c0 = 0, so every pre-activation is 1 (input weight 1, input 1)
        let s1 = 1.0 / (1.0 + (-1.0f64).exp());
        let c = s1 * 1.0f64.tanh();
        let expected = s1 * c.tanh();
        assert!((hs[0][0] - expected).abs() < 1e-15);
    }

    #[test]
    fn scalar_step_gradient_matches_chain_rule() {
        let mut st = ParamStore::new();
        let p = LstmParams::register(&mut st, "s", 1, 1, &mut || 1.0).unwrap();
        st.value_mut(p.b[F])[0] = 0.0;
        let (_, trace) = lstm_forward(st.values(), &p, &[vec![1.0]]).unwrap();
        let (values, mut grads) = st.split();
        let dx = lstm_backward(values, &mut grads, &p, &trace, &[vec![1.0]]).unwrap();
        // h = o * tanh(i * g) with i = o = sigmoid(1), g = tanh(1), all pre-activations 1
        let s = 1.0 / (1.0 + (-1.0f64).exp());
        let g = 1.0f64.tanh();
        let c = s * g;
        let tc = c.tanh();
        let dh_do = tc;
        let dh_dc = s * (1.0 - tc * tc);
        let d_ai = dh_dc * g * s * (1.0 - s);
        let d_ag = dh_dc * s * (1.0 - g * g);
        let d_ao = dh_do * s * (1.0 - s);
        // forget gate multiplies c_prev = 0
        let expected_dx = d_ai + d_ag + d_ao;
        assert!((dx[0][0] - expected_dx).abs() < 1e-15);
        assert!((st.grad(p.w[I])[0] - d_ai).abs() < 1e-15);
        assert_eq!(st.grad(p.w[F])[0], 0.0);
        assert_eq!(st.grad(p.u[O])[0], 0.0); // h_prev = 0
        assert!((st.grad(p.b[G])[0] - d_ag).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let (mut st, p) = random_store(3, 2, 1);
        let inputs = vec![vec![0.3, -0.1, 0.7]; 3];
        let (_, trace) = lstm_forward(st.values(), &p, &inputs).unwrap();
        let (values, mut grads) = st.split();
        lstm_backward(values, &mut grads, &p, &trace, &vec![vec![0.0; 2]; 3]).unwrap();
        assert!(st.ids().all(|id| st.grad(id).iter().all(|&g| g == 0.0)));
        let (values, mut grads) = st.split();
        assert!(lstm_backward(values, &mut grads, &p, &trace, &[vec![0.0; 2]]).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (st, p) = random_store(3, 2, 1);
        assert!(lstm_forward(st.values(), &p, &[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn replay_is_bit_exact_and_gates_bounded() {
        let (st, p) = random_store(4, 3, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inputs: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let (hs, trace) = lstm_forward(st.values(), &p, &inputs).unwrap();
        let (hs2, trace2) = lstm_forward(st.values(), &p, &inputs).unwrap();
        assert_eq!(hs, hs2);
        assert_eq!(trace, trace2);
        for (t, s) in trace.steps.iter().enumerate() {
            let again = lstm_step(st.values(), &p, &s.input, s.h_prev.clone(), s.c_prev.clone());
            assert_eq!(&again, s);
            assert_eq!(s.h, hs[t]);
            for k in [I, F, O] {
                assert!(s.act[k].iter().all(|&a| a > 0.0 && a < 1.0));
            }
            assert!(s.c.iter().all(|c| c.is_finite()));
        }
    }

    /// Finite-difference check over params and inputs of random small LSTMs.
    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..6u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let t = rng.random_range(1..=5);
            let din = rng.random_range(1..=4);
            let hd = rng.random_range(1..=4);
            let (mut st, p) = random_store(din, hd, seed);
            let x0: Vec<f64> = (0..t * din).map(|_| rng.random_range(-1.0..1.0)).collect();
            let xs = st.add("inputs", t, din, SlotKind::Dense, x0).unwrap();
            let weights: Vec<f64> = (0..t * hd).map(|_| rng.random_range(-1.0..1.0)).collect();
            let loss = |st: &mut ParamStore| -> Result<f64> {
                let inputs: Vec<Vec<f64>> = st.value(xs).chunks(din).map(<[f64]>::to_vec).collect();
                let (hs, trace) = lstm_forward(st.values(), &p, &inputs)?;
                let l: f64 = hs.iter().flatten().zip(&weights).map(|(h, w)| h * w).sum();
                let gh: Vec<Vec<f64>> = weights.chunks(hd).map(<[f64]>::to_vec).collect();
                let (values, mut grads) = st.split();
                let dx = lstm_backward(values, &mut grads, &p, &trace, &gh)?;
                let flat: Vec<f64> = dx.into_iter().flatten().collect();
                for (g, d) in grads.slot(xs).iter_mut().zip(flat) {
                    *g += d;
                }
                Ok(l)
            };
            let cfg = GradCheckConfig {
                tol: 1e-6,
                ..Default::default()
            };
            let rep = grad_check(&mut st, loss, &cfg).unwrap();
            assert!(rep.passed(), "seed {seed}: {:?}", rep.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn bilstm_symmetry_and_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut st = ParamStore::new();
        let mut init = || rng.random_range(-0.5..0.5);
        let fwd = LstmParams::register(&mut st, "f", 2, 3, &mut init).unwrap();
        let bwd = LstmParams::register(&mut st, "b", 2, 3, &mut init).unwrap();
        // tie the backward direction to the forward one
        for k in 0..4 {
            for (src, dst) in [(fwd.w[k], bwd.w[k]), (fwd.u[k], bwd.u[k]), (fwd.b[k], bwd.b[k])] {
                let v = st.value(src).to_vec();
                st.value_mut(dst).copy_from_slice(&v);
            }
        }
        let pal = vec![
            vec![1.0, 0.0],
            vec![0.5, -0.5],
            vec![0.2, 0.9],
            vec![0.5, -0.5],
            vec![1.0, 0.0],
        ];
        let (hs, _, _) = bilstm_forward(st.values(), &fwd, &bwd, &pal).unwrap();
        let n = pal.len();
        for i in 0..n {
            assert_eq!(hs[i][..3], hs[n - 1 - i][3..]);
            assert_eq!(hs[i][3..], hs[n - 1 - i][..3]);
        }

        let one = vec![vec![0.3, -0.2]];
        let (hs, _, _) = bilstm_forward(st.values(), &fwd, &bwd, &one).unwrap();
        let (hf, _) = lstm_forward(st.values(), &fwd, &one).unwrap();
        let (hb, _) = lstm_forward(st.values(), &bwd, &one).unwrap();
        assert_eq!(hs[0], [hf[0].clone(), hb[0].clone()].concat());
    }

    #[test]
    fn bilstm_with_zero_backward_is_padded_lstm() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut st = ParamStore::new();
        let mut init = || rng.random_range(-0.5..0.5);
        let fwd = LstmParams::register(&mut st, "f", 2, 3, &mut init).unwrap();
        let bwd = LstmParams::register(&mut st, "b", 2, 3, &mut || 0.0).unwrap();
        st.value_mut(bwd.b[F]).iter_mut().for_each(|v| *v = 0.0);
        let xs = vec![vec![0.1, 0.2], vec![-0.3, 0.4], vec![0.9, -1.0]];
        let (hs, _, _) = bilstm_forward(st.values(), &fwd, &bwd, &xs).unwrap();
        let (hf, _) = lstm_forward(st.values(), &fwd, &xs).unwrap();
        for (b, f) in hs.iter().zip(&hf) {
            assert_eq!(&b[..3], f.as_slice());
            assert_eq!(&b[3..], &[0.0; 3]);
        }
        let mut st0 = ParamStore::new();
        let f0 = LstmParams::register(&mut st0, "f", 2, 3, &mut || 0.0).unwrap();
        let b0 = LstmParams::register(&mut st0, "b", 2, 3, &mut || 0.0).unwrap();
        st0.value_mut(f0.b[F]).iter_mut().for_each(|v| *v = 0.0);
        st0.value_mut(b0.b[F]).iter_mut().for_each(|v| *v = 0.0);
        let (hs, _, _) = bilstm_forward(st0.values(), &f0, &b0, &xs).unwrap();
        assert!(hs.iter().all(|h| h.len() == 6 && h.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn projection_examples() {
        let mut st = ParamStore::new();
        let p = Projection::register(&mut st, "p", 2, 3, true, &mut || 0.0).unwrap();
        st.value_mut(p.bias.unwrap()).copy_from_slice(&[1.0, 2.0, 3.0]);
        let out = project(st.values(), &p, &[vec![5.0, -1.0], vec![0.0, 7.0]]).unwrap();
        assert_eq!(out, vec![vec![1.0, 2.0, 3.0]; 2]);

        let mut st = ParamStore::new();
        let id = Projection::register(&mut st, "id", 3, 3, false, &mut || 0.0).unwrap();
        for k in 0..3 {
            st.value_mut(id.weight)[k * 3 + k] = 1.0;
        }
        let h = vec![vec![0.5, -2.0, 3.0]];
        assert_eq!(project(st.values(), &id, &h).unwrap(), h);
        assert!(project(st.values(), &id, &[vec![1.0]]).is_err());

        let mut st = ParamStore::new();
        let tr = Projection::register(&mut st, "t", 4, 9, false, &mut || 0.1).unwrap();
        assert_eq!(project(st.values(), &tr, &[vec![1.0; 4]]).unwrap()[0].len(), 9);
    }
}
