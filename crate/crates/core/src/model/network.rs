//! GRU recurrence, causal attention and the per-hour output head, with the
//! matching backward pass.

use super::config::{AttentionMode, ModelConfig};
use super::params::{AttentionParams, GruParams, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, dropout_mask, sigmoid, softmax_into, Matrix, SeededRng};

pub const PROB_CLAMP: f64 = 1e-7;

/// Per-hour outputs of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrajectory {
    pub probs: Vec<f64>,
    /// `T x T`; row `t` holds the weights over hours `0..=t`, zero above the
    /// diagonal.
    pub attention: Matrix,
    pub hidden_final: Vec<f64>,
}

impl PredictionTrajectory {
    pub fn hours(&self) -> usize {
        self.probs.len()
    }

    /// Weight each hour assigns to itself.
    pub fn attention_diagonal(&self) -> Vec<f64> {
        (0..self.hours()).map(|t| self.attention.get(t, t)).collect()
    }
}

fn gru_gates(g: &GruParams, x: &[f64], h_prev: &[f64], r: &mut [f64], z: &mut [f64], hc: &mut [f64], uh: &mut [f64]) {
    let k = h_prev.len();
    for i in 0..k {
        r[i] = sigmoid(dot(g.w_r.row(i), x) + dot(g.u_r.row(i), h_prev) + g.b_r.get(i, 0));
        z[i] = sigmoid(dot(g.w_z.row(i), x) + dot(g.u_z.row(i), h_prev) + g.b_z.get(i, 0));
        uh[i] = dot(g.u_h.row(i), h_prev);
    }
    for i in 0..k {
        hc[i] = (dot(g.w_x.row(i), x) + r[i] * uh[i] + g.b_h.get(i, 0)).tanh();
    }
}

#[inline]
fn gru_combine(h_prev: &[f64], z: &[f64], hc: &[f64], h: &mut [f64]) {
    for i in 0..h.len() {
        h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hc[i];
    }
}

/// One GRU update `h_prev -> h`.
pub fn gru_step(params: &GruParams, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
    let k = h_prev.len();
    let (mut r, mut z, mut hc, mut uh) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    gru_gates(params, x, h_prev, &mut r, &mut z, &mut hc, &mut uh);
    let mut h = vec![0.0; k];
    gru_combine(h_prev, &z, &hc, &mut h);
    h
}

/// Hidden states and attention projections for a growing sequence.
///
/// Both whole-sequence evaluation and streaming go through [`Unroll::push`],
/// so they share every floating-point operation.
#[derive(Debug, Clone)]
pub(crate) struct Unroll {
    mode: AttentionMode,
    scale: f64,
    k: usize,
    keep_gates: bool,
    pub(crate) hs: Vec<f64>,
    pub(crate) r: Vec<f64>,
    pub(crate) z: Vec<f64>,
    pub(crate) hc: Vec<f64>,
    pub(crate) uh: Vec<f64>,
    pub(crate) q: Vec<f64>,
    pub(crate) key: Vec<f64>,
    pub(crate) val: Vec<f64>,
    pub(crate) score: Vec<f64>,
    pub(crate) alphas: Vec<Vec<f64>>,
    pub(crate) ctx: Vec<f64>,
    pub(crate) masks: Vec<f64>,
    pub(crate) probs: Vec<f64>,
    logits: Vec<f64>,
}

impl Unroll {
    pub(crate) fn new(mode: AttentionMode, scale: f64, k: usize, keep_gates: bool) -> Self {
        Unroll {
            mode,
            scale,
            k,
            keep_gates,
            hs: Vec::new(),
            r: Vec::new(),
            z: Vec::new(),
            hc: Vec::new(),
            uh: Vec::new(),
            q: Vec::new(),
            key: Vec::new(),
            val: Vec::new(),
            score: Vec::new(),
            alphas: Vec::new(),
            ctx: Vec::new(),
            masks: Vec::new(),
            probs: Vec::new(),
            logits: Vec::new(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.probs.len()
    }

    pub(crate) fn hidden(&self, t: usize) -> &[f64] {
        &self.hs[t * self.k..(t + 1) * self.k]
    }

    fn row(v: &[f64], k: usize, t: usize) -> &[f64] {
        &v[t * k..(t + 1) * k]
    }

    /// Advances one hour. `mask` multiplies the context (dropout).
    pub(crate) fn push(&mut self, params: &ModelParams, x: &[f64], mask: Option<&[f64]>) -> f64 {
        let k = self.k;
        let t = self.len();
        let zeros;
        let h_prev: &[f64] = if t == 0 {
            zeros = vec![0.0; k];
            &zeros
        } else {
            Self::row(&self.hs, k, t - 1)
        };
        let (mut r, mut z, mut hc, mut uh) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        gru_gates(&params.gru, x, h_prev, &mut r, &mut z, &mut hc, &mut uh);
        let mut h = vec![0.0; k];
        gru_combine(h_prev, &z, &hc, &mut h);
        self.hs.extend_from_slice(&h);
        if self.keep_gates {
            self.r.extend_from_slice(&r);
            self.z.extend_from_slice(&z);
            self.hc.extend_from_slice(&hc);
            self.uh.extend_from_slice(&uh);
        }

        let mut alpha = vec![0.0; t + 1];
        let mut ctx = vec![0.0; k];
        match (&params.attention, self.mode) {
            (AttentionParams::Query { w_q, w_k, w_v }, AttentionMode::SelfAttention | AttentionMode::SelfAttentionLiteral) => {
                let qt = w_q.matvec(&h);
                let kt = w_k.matvec(&h);
                let vt = w_v.matvec(&h);
                self.score.push(self.scale * dot(&qt, &kt));
                self.q.extend_from_slice(&qt);
                self.key.extend_from_slice(&kt);
                self.val.extend_from_slice(&vt);
                self.logits.clear();
                if self.mode == AttentionMode::SelfAttention {
                    for i in 0..=t {
                        self.logits.push(self.scale * dot(&qt, Self::row(&self.key, k, i)));
                    }
                } else {
                    self.logits.extend_from_slice(&self.score);
                }
                softmax_into(&self.logits, &mut alpha);
                for (i, &a) in alpha.iter().enumerate() {
                    axpy(a, Self::row(&self.val, k, i), &mut ctx);
                }
            }
            (AttentionParams::Global { w_att }, AttentionMode::GlobalAttention) => {
                self.score.push(dot(w_att.row(0), &h));
                softmax_into(&self.score, &mut alpha);
                for (i, &a) in alpha.iter().enumerate() {
                    axpy(a, Self::row(&self.hs, k, i), &mut ctx);
                }
            }
            (AttentionParams::None, AttentionMode::LastHidden) => {
                alpha[t] = 1.0;
                ctx.copy_from_slice(&h);
            }
            _ => unreachable!("parameters checked against the attention mode"),
        }

        if let Some(m) = mask {
            for (c, mi) in ctx.iter_mut().zip(m) {
                *c *= mi;
            }
            if self.keep_gates {
                self.masks.extend_from_slice(m);
            }
        } else if self.keep_gates {
            self.masks.extend(std::iter::repeat_n(1.0, k));
        }
        let logit = dot(params.w_y.row(0), &ctx) + params.b_y.get(0, 0);
        let p = sigmoid(logit);
        self.ctx.extend_from_slice(&ctx);
        self.alphas.push(alpha);
        self.probs.push(p);
        p
    }

    pub(crate) fn trajectory(&self) -> PredictionTrajectory {
        let n = self.len();
        let mut attention = Matrix::zeros(n, n);
        for (t, a) in self.alphas.iter().enumerate() {
            attention.row_mut(t)[..a.len()].copy_from_slice(a);
        }
        PredictionTrajectory {
            probs: self.probs.clone(),
            attention,
            hidden_final: if n == 0 { vec![0.0; self.k] } else { self.hidden(n - 1).to_vec() },
        }
    }
}

pub(crate) fn check_mode(params: &ModelParams, mode: AttentionMode) -> Result<()> {
    let ok = matches!(
        (&params.attention, mode),
        (AttentionParams::Query { .. }, AttentionMode::SelfAttention | AttentionMode::SelfAttentionLiteral)
            | (AttentionParams::Global { .. }, AttentionMode::GlobalAttention)
            | (AttentionParams::None, AttentionMode::LastHidden)
    );
    if ok {
        Ok(())
    } else {
        Err(Error::Shape(format!("parameters do not carry {mode} weights")))
    }
}

fn check_inputs(params: &ModelParams, inputs: &Matrix) -> Result<()> {
    if inputs.rows() == 0 {
        return Err(Error::Shape("empty input sequence".into()));
    }
    if inputs.cols() != params.input_dim() {
        return Err(Error::Shape(format!(
            "inputs have {} columns, model expects {}",
            inputs.cols(),
            params.input_dim()
        )));
    }
    Ok(())
}

/// Attention over `hiddens` (rows `h_1..h_t`) from the last row's point of
/// view. Returns the context and the `t` weights.
pub fn attend(params: &ModelParams, hiddens: &Matrix, mode: AttentionMode, scale: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_mode(params, mode)?;
    let t = hiddens.rows();
    if t == 0 {
        return Err(Error::Shape("attention over zero steps".into()));
    }
    let k = params.hidden_dim();
    let last = hiddens.row(t - 1);
    let mut alpha = vec![0.0; t];
    let mut ctx = vec![0.0; k];
    match &params.attention {
        AttentionParams::Query { w_q, w_k, w_v } => {
            let logits: Vec<f64> = (0..t)
                .map(|i| {
                    let h = hiddens.row(i);
                    let q = if mode == AttentionMode::SelfAttention { w_q.matvec(last) } else { w_q.matvec(h) };
                    scale * dot(&q, &w_k.matvec(h))
                })
                .collect();
            softmax_into(&logits, &mut alpha);
            for (i, &a) in alpha.iter().enumerate() {
                axpy(a, &w_v.matvec(hiddens.row(i)), &mut ctx);
            }
        }
        AttentionParams::Global { w_att } => {
            let logits: Vec<f64> = (0..t).map(|i| dot(w_att.row(0), hiddens.row(i))).collect();
            softmax_into(&logits, &mut alpha);
            for (i, &a) in alpha.iter().enumerate() {
                axpy(a, hiddens.row(i), &mut ctx);
            }
        }
        AttentionParams::None => {
            alpha[t - 1] = 1.0;
            ctx.copy_from_slice(last);
        }
    }
    Ok((ctx, alpha))
}

pub(crate) fn unroll(
    params: &ModelParams,
    config: &ModelConfig,
    inputs: &Matrix,
    dropout_rng: Option<&mut SeededRng>,
    keep_gates: bool,
) -> Result<Unroll> {
    check_mode(params, config.attention_mode)?;
    check_inputs(params, inputs)?;
    let k = params.hidden_dim();
    let mut u = Unroll::new(config.attention_mode, config.logit_scale(), k, keep_gates);
    match dropout_rng {
        Some(rng) if config.dropout_p > 0.0 => {
            for t in 0..inputs.rows() {
                let m = dropout_mask(rng, k, config.dropout_p);
                u.push(params, inputs.row(t), Some(&m));
            }
        }
        _ => {
            for t in 0..inputs.rows() {
                u.push(params, inputs.row(t), None);
            }
        }
    }
    Ok(u)
}

/// Runs the network over `inputs` (`T x d`, already normalized). Dropout is
/// applied to the context when an RNG is supplied.
pub fn forward(
    params: &ModelParams,
    config: &ModelConfig,
    inputs: &Matrix,
    dropout_rng: Option<&mut SeededRng>,
) -> Result<PredictionTrajectory> {
    Ok(unroll(params, config, inputs, dropout_rng, false)?.trajectory())
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Target-replicated cross-entropy: the label is applied at every hour and
/// the per-hour losses are averaged.
pub fn loss(probs: &[f64], label: bool) -> f64 {
    let y = if label { 1.0 } else { 0.0 };
    let total: f64 = probs
        .iter()
        .map(|&p| {
            let p = clamp_prob(p);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    total / probs.len() as f64
}

/// Loss and gradient for one sequence, given a cached unroll.
pub(crate) fn backward(params: &ModelParams, u: &Unroll, inputs: &Matrix, label: bool) -> (f64, ModelParams) {
    let k = params.hidden_dim();
    let n = u.len();
    let y = if label { 1.0 } else { 0.0 };
    let mut grads = params.zeros_like();
    let row = |v: &[f64], t: usize| -> std::ops::Range<usize> {
        debug_assert!(v.len() >= (t + 1) * k);
        t * k..(t + 1) * k
    };

    let mut dh = vec![0.0; n * k];
    let mut dq = vec![0.0; n * k];
    let mut dkey = vec![0.0; n * k];
    let mut dval = vec![0.0; n * k];
    let mut dscore = vec![0.0; n];
    let mut dctx = vec![0.0; k];

    for t in 0..n {
        let p = u.probs[t];
        let g = if p < PROB_CLAMP || p > 1.0 - PROB_CLAMP {
            0.0
        } else {
            (p - y) / n as f64
        };
        let ctx = &u.ctx[row(&u.ctx, t)];
        axpy(g, ctx, grads.w_y.row_mut(0));
        grads.b_y.as_mut_slice()[0] += g;
        let mask = &u.masks[row(&u.masks, t)];
        for i in 0..k {
            dctx[i] = g * params.w_y.get(0, i) * mask[i];
        }
        if g == 0.0 {
            continue;
        }
        let alpha = &u.alphas[t];
        match u.mode {
            AttentionMode::SelfAttention | AttentionMode::SelfAttentionLiteral => {
                let da: Vec<f64> = (0..=t).map(|i| dot(&dctx, &u.val[row(&u.val, i)])).collect();
                let s: f64 = alpha.iter().zip(&da).map(|(a, d)| a * d).sum();
                for i in 0..=t {
                    let ds = alpha[i] * (da[i] - s);
                    if u.mode == AttentionMode::SelfAttention {
                        let (qr, kr) = (row(&u.q, t), row(&u.key, i));
                        axpy(u.scale * ds, &u.key[kr.clone()], &mut dq[qr.clone()]);
                        axpy(u.scale * ds, &u.q[qr], &mut dkey[kr]);
                    } else {
                        dscore[i] += ds;
                    }
                    axpy(alpha[i], &dctx, &mut dval[row(&u.val, i)]);
                }
            }
            AttentionMode::GlobalAttention => {
                let da: Vec<f64> = (0..=t).map(|i| dot(&dctx, &u.hs[row(&u.hs, i)])).collect();
                let s: f64 = alpha.iter().zip(&da).map(|(a, d)| a * d).sum();
                for i in 0..=t {
                    dscore[i] += alpha[i] * (da[i] - s);
                    axpy(alpha[i], &dctx, &mut dh[row(&u.hs, i)]);
                }
            }
            AttentionMode::LastHidden => {
                axpy(1.0, &dctx, &mut dh[row(&u.hs, t)]);
            }
        }
    }

    match (&params.attention, &mut grads.attention) {
        (AttentionParams::Query { w_q, w_k, w_v }, AttentionParams::Query { w_q: gq, w_k: gk, w_v: gv }) => {
            for i in 0..n {
                let r = row(&u.hs, i);
                if u.mode == AttentionMode::SelfAttentionLiteral && dscore[i] != 0.0 {
                    axpy(u.scale * dscore[i], &u.key[r.clone()], &mut dq[r.clone()]);
                    axpy(u.scale * dscore[i], &u.q[r.clone()], &mut dkey[r.clone()]);
                }
                let h = &u.hs[r.clone()];
                gq.add_outer(&dq[r.clone()], h);
                gk.add_outer(&dkey[r.clone()], h);
                gv.add_outer(&dval[r.clone()], h);
                let dhi = &mut dh[r.clone()];
                w_q.matvec_t_acc(&dq[r.clone()], dhi);
                w_k.matvec_t_acc(&dkey[r.clone()], dhi);
                w_v.matvec_t_acc(&dval[r], dhi);
            }
        }
        (AttentionParams::Global { w_att }, AttentionParams::Global { w_att: ga }) => {
            for i in 0..n {
                let r = row(&u.hs, i);
                axpy(dscore[i], &u.hs[r.clone()], ga.row_mut(0));
                axpy(dscore[i], w_att.row(0), &mut dh[r]);
            }
        }
        _ => {}
    }

    let gp = &params.gru;
    let gg = &mut grads.gru;
    let zeros = vec![0.0; k];
    let mut carry = vec![0.0; k];
    let (mut da_h, mut da_z, mut da_r, mut duh) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    for t in (0..n).rev() {
        let r_ = row(&u.hs, t);
        let x = inputs.row(t);
        let h_prev = if t == 0 { &zeros[..] } else { &u.hs[row(&u.hs, t - 1)] };
        let (r, z, hc, uh) = (&u.r[r_.clone()], &u.z[r_.clone()], &u.hc[r_.clone()], &u.uh[r_.clone()]);
        let dht: Vec<f64> = dh[r_].iter().zip(&carry).map(|(a, b)| a + b).collect();
        let mut dprev = vec![0.0; k];
        for i in 0..k {
            let dz = dht[i] * (hc[i] - h_prev[i]);
            let dhc = dht[i] * z[i];
            dprev[i] = dht[i] * (1.0 - z[i]);
            da_h[i] = dhc * (1.0 - hc[i] * hc[i]);
            let dr = da_h[i] * uh[i];
            duh[i] = da_h[i] * r[i];
            da_z[i] = dz * z[i] * (1.0 - z[i]);
            da_r[i] = dr * r[i] * (1.0 - r[i]);
        }
        gg.w_x.add_outer(&da_h, x);
        gg.w_z.add_outer(&da_z, x);
        gg.w_r.add_outer(&da_r, x);
        if t > 0 {
            gg.u_h.add_outer(&duh, h_prev);
            gg.u_z.add_outer(&da_z, h_prev);
            gg.u_r.add_outer(&da_r, h_prev);
        }
        axpy(1.0, &da_h, gg.b_h.as_mut_slice());
        axpy(1.0, &da_z, gg.b_z.as_mut_slice());
        axpy(1.0, &da_r, gg.b_r.as_mut_slice());
        gp.u_h.matvec_t_acc(&duh, &mut dprev);
        gp.u_z.matvec_t_acc(&da_z, &mut dprev);
        gp.u_r.matvec_t_acc(&da_r, &mut dprev);
        carry = dprev;
    }

    (loss(&u.probs, label), grads)
}

/// Loss and exact gradient for one sequence. Dropout is used when an RNG is
/// supplied.
pub fn sequence_gradient(
    params: &ModelParams,
    config: &ModelConfig,
    inputs: &Matrix,
    label: bool,
    dropout_rng: Option<&mut SeededRng>,
) -> Result<(f64, ModelParams)> {
    let u = unroll(params, config, inputs, dropout_rng, true)?;
    Ok(backward(params, &u, inputs, label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::init_params;
    use crate::numerics::rng_for;

    fn cfg(mode: AttentionMode, k: usize) -> ModelConfig {
        ModelConfig {
            hidden_dim: k,
            attention_mode: mode,
            seed: 5,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn zero_params_gru() {
        let p = ModelParams::zeros(AttentionMode::LastHidden, 2, 3);
        assert_eq!(gru_step(&p.gru, &[1.0, -1.0], &[0.0; 3]), vec![0.0; 3]);
        assert_eq!(gru_step(&p.gru, &[1.0, -1.0], &[2.0, -4.0, 1.0]), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn single_step_attention() {
        for mode in AttentionMode::ALL {
            let p = init_params(&cfg(mode, 3)).unwrap();
            let h = Matrix::from_vec(1, 3, vec![0.3, -0.2, 0.9]).unwrap();
            let (ctx, alpha) = attend(&p, &h, mode, 1.0).unwrap();
            assert_eq!(alpha, vec![1.0]);
            let expected = match &p.attention {
                AttentionParams::Query { w_v, .. } => w_v.matvec(h.row(0)),
                _ => h.row(0).to_vec(),
            };
            assert_eq!(ctx, expected);
        }
    }

    #[test]
    fn identical_hiddens_give_uniform_weights() {
        for mode in [AttentionMode::SelfAttention, AttentionMode::GlobalAttention] {
            let p = init_params(&cfg(mode, 4)).unwrap();
            let h = Matrix::from_fn(5, 4, |_, j| j as f64 * 0.1 - 0.2);
            let (_, alpha) = attend(&p, &h, mode, 1.0).unwrap();
            for a in alpha {
                assert!((a - 0.2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hand_traced_two_step_attention() {
        let mut p = ModelParams::zeros(AttentionMode::SelfAttention, 1, 2);
        if let AttentionParams::Query { w_q, w_k, w_v } = &mut p.attention {
            *w_q = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
            *w_k = Matrix::from_vec(2, 2, vec![2.0, 0.0, 0.0, 0.0]).unwrap();
            *w_v = Matrix::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        }
        let h = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        // q_2 = (0,1); keys (2,0) and (0,0): logits 0 and 0.
        let (ctx, alpha) = attend(&p, &h, AttentionMode::SelfAttention, 1.0).unwrap();
        assert_eq!(alpha, vec![0.5, 0.5]);
        // values (0,1) and (1,0).
        assert_eq!(ctx, vec![0.5, 0.5]);

        let h = Matrix::from_vec(2, 2, vec![0.5, 0.0, 1.0, 0.0]).unwrap();
        // q_2 = (1,0); keys (1,0), (2,0): logits 1, 2.
        let (ctx, alpha) = attend(&p, &h, AttentionMode::SelfAttention, 1.0).unwrap();
        let e = std::f64::consts::E;
        let a1 = 1.0 / (1.0 + e);
        assert!((alpha[0] - a1).abs() < 1e-15);
        // values (0,0.5), (0,1).
        assert!((ctx[1] - (0.5 * a1 + (1.0 - a1))).abs() < 1e-15);
        assert_eq!(ctx[0], 0.0);
    }

    #[test]
    fn attend_matches_forward_rows() {
        for mode in AttentionMode::ALL {
            let c = cfg(mode, 4);
            let p = init_params(&c).unwrap();
            let x = Matrix::from_fn(6, 14, |t, j| ((t * 14 + j) as f64 * 0.37).sin());
            let u = unroll(&p, &c, &x, None, false).unwrap();
            for t in 0..6 {
                let h = Matrix::from_vec(t + 1, 4, u.hs[..(t + 1) * 4].to_vec()).unwrap();
                let (ctx, alpha) = attend(&p, &h, mode, 1.0).unwrap();
                assert_eq!(alpha, u.alphas[t]);
                assert_eq!(ctx, u.ctx[t * 4..(t + 1) * 4]);
            }
        }
    }

    #[test]
    fn zero_weights_give_bias_probability() {
        let c = cfg(AttentionMode::SelfAttention, 4);
        let mut p = ModelParams::zeros(c.attention_mode, 14, 4);
        p.b_y.set(0, 0, 0.7);
        let traj = forward(&p, &c, &Matrix::zeros(9, 14), None).unwrap();
        for &q in &traj.probs {
            assert_eq!(q, sigmoid(0.7));
        }
    }

    #[test]
    fn single_hour() {
        let c = cfg(AttentionMode::SelfAttention, 3);
        let p = init_params(&c).unwrap();
        let traj = forward(&p, &c, &Matrix::from_fn(1, 14, |_, j| j as f64 / 10.0), None).unwrap();
        assert_eq!(traj.probs.len(), 1);
        assert_eq!(traj.attention.as_slice(), &[1.0]);
    }

    #[test]
    fn loss_examples() {
        assert!((loss(&[0.5, 0.5, 0.5], true) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((loss(&[0.5], false) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(loss(&[1.0, 1.0], true) < 1e-6);
        let expected = -(0.9f64.ln() + 0.8f64.ln()) / 2.0;
        assert!((loss(&[0.9, 0.8], true) - expected).abs() < 1e-15);
        assert!((expected - 0.1643).abs() < 1e-4);
    }

    #[test]
    fn saturated_output_has_zero_gradient() {
        let c = ModelConfig { dropout_p: 0.0, ..cfg(AttentionMode::SelfAttention, 3) };
        let mut p = init_params(&c).unwrap();
        p.b_y.set(0, 0, 40.0);
        let x = Matrix::from_fn(4, 14, |t, j| (t + j) as f64 * 0.01);
        let (l, g) = sequence_gradient(&p, &c, &x, true, None).unwrap();
        assert!(l < 1e-6);
        assert!(g.named().iter().all(|(_, m)| m.as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn dropout_is_seeded() {
        let c = cfg(AttentionMode::SelfAttention, 8);
        let p = init_params(&c).unwrap();
        let x = Matrix::from_fn(5, 14, |t, j| ((t + 2 * j) as f64).cos());
        let a = forward(&p, &c, &x, Some(&mut rng_for(1, &[2]))).unwrap();
        let b = forward(&p, &c, &x, Some(&mut rng_for(1, &[2]))).unwrap();
        let off = forward(&p, &c, &x, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.probs, off.probs);
        assert_eq!(a.attention, off.attention);
    }
}
