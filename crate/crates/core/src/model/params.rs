use rand::Rng;

use super::config::{AttentionMode, ModelConfig};
use crate::error::{Error, Result};
use crate::numerics::{rng_for, Matrix, ParamSet};

const INIT_STREAM: u64 = 1;

/// GRU weights. Input maps are `k x d`, recurrent maps `k x k`, biases `k x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_r: Matrix,
    pub u_r: Matrix,
    pub b_r: Matrix,
    pub w_z: Matrix,
    pub u_z: Matrix,
    pub b_z: Matrix,
    pub w_x: Matrix,
    pub u_h: Matrix,
    pub b_h: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttentionParams {
    /// `k x k` query, key and value projections.
    Query { w_q: Matrix, w_k: Matrix, w_v: Matrix },
    /// `1 x k` scoring vector.
    Global { w_att: Matrix },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gru: GruParams,
    pub attention: AttentionParams,
    /// `1 x k` output weights.
    pub w_y: Matrix,
    /// `1 x 1` output bias.
    pub b_y: Matrix,
}

impl ModelParams {
    /// All-zero parameters with the shapes implied by `mode`, `d` and `k`.
    pub fn zeros(mode: AttentionMode, d: usize, k: usize) -> Self {
        let gru = GruParams {
            w_r: Matrix::zeros(k, d),
            u_r: Matrix::zeros(k, k),
            b_r: Matrix::zeros(k, 1),
            w_z: Matrix::zeros(k, d),
            u_z: Matrix::zeros(k, k),
            b_z: Matrix::zeros(k, 1),
            w_x: Matrix::zeros(k, d),
            u_h: Matrix::zeros(k, k),
            b_h: Matrix::zeros(k, 1),
        };
        let attention = match mode {
            AttentionMode::SelfAttention | AttentionMode::SelfAttentionLiteral => AttentionParams::Query {
                w_q: Matrix::zeros(k, k),
                w_k: Matrix::zeros(k, k),
                w_v: Matrix::zeros(k, k),
            },
            AttentionMode::GlobalAttention => AttentionParams::Global {
                w_att: Matrix::zeros(1, k),
            },
            AttentionMode::LastHidden => AttentionParams::None,
        };
        ModelParams {
            gru,
            attention,
            w_y: Matrix::zeros(1, k),
            b_y: Matrix::zeros(1, 1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }

    pub fn input_dim(&self) -> usize {
        self.gru.w_r.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.gru.w_r.rows()
    }

    /// Tensors in their canonical order, with stable names.
    pub fn named(&self) -> Vec<(&'static str, &Matrix)> {
        let g = &self.gru;
        let mut out = vec![
            ("w_r", &g.w_r),
            ("u_r", &g.u_r),
            ("b_r", &g.b_r),
            ("w_z", &g.w_z),
            ("u_z", &g.u_z),
            ("b_z", &g.b_z),
            ("w_x", &g.w_x),
            ("u_h", &g.u_h),
            ("b_h", &g.b_h),
        ];
        match &self.attention {
            AttentionParams::Query { w_q, w_k, w_v } => {
                out.extend([("w_q", w_q), ("w_k", w_k), ("w_v", w_v)]);
            }
            AttentionParams::Global { w_att } => out.push(("w_att", w_att)),
            AttentionParams::None => {}
        }
        out.extend([("w_y", &self.w_y), ("b_y", &self.b_y)]);
        out
    }

    pub fn named_mut(&mut self) -> Vec<(&'static str, &mut Matrix)> {
        let g = &mut self.gru;
        let mut out = vec![
            ("w_r", &mut g.w_r),
            ("u_r", &mut g.u_r),
            ("b_r", &mut g.b_r),
            ("w_z", &mut g.w_z),
            ("u_z", &mut g.u_z),
            ("b_z", &mut g.b_z),
            ("w_x", &mut g.w_x),
            ("u_h", &mut g.u_h),
            ("b_h", &mut g.b_h),
        ];
        match &mut self.attention {
            AttentionParams::Query { w_q, w_k, w_v } => {
                out.extend([("w_q", w_q), ("w_k", w_k), ("w_v", w_v)]);
            }
            AttentionParams::Global { w_att } => out.push(("w_att", w_att)),
            AttentionParams::None => {}
        }
        out.extend([("w_y", &mut self.w_y), ("b_y", &mut self.b_y)]);
        out
    }

    pub fn add_assign(&mut self, other: &ModelParams) {
        for ((_, a), (_, b)) in self.named_mut().into_iter().zip(other.named()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (_, a) in self.named_mut() {
            a.scale(s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.named().iter().all(|(_, m)| m.is_finite())
    }

    /// Checks that the tensors fit a config with input size `d`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let expected = ModelParams::zeros(config.attention_mode, config.input_dim(), config.hidden_dim);
        let ours = self.named();
        let theirs = expected.named();
        let same = ours.len() == theirs.len()
            && ours
                .iter()
                .zip(&theirs)
                .all(|((na, a), (nb, b))| na == nb && a.shape() == b.shape());
        if same {
            Ok(())
        } else {
            Err(Error::Shape("parameters do not match the model config".into()))
        }
    }

    /// 64-bit FNV-1a over every parameter's bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for s in self.slices() {
            for v in s {
                for b in v.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        h
    }
}

impl ParamSet for ModelParams {
    fn slices(&self) -> Vec<&[f64]> {
        self.named().into_iter().map(|(_, m)| m.as_slice()).collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.named_mut().into_iter().map(|(_, m)| m.as_mut_slice()).collect()
    }
}

fn is_bias(name: &str) -> bool {
    name.starts_with("b_")
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(config: &ModelConfig) -> Result<ModelParams> {
    config.validate()?;
    let mut params = ModelParams::zeros(config.attention_mode, config.input_dim(), config.hidden_dim);
    let mut rng = rng_for(config.seed, &[INIT_STREAM]);
    for (name, m) in params.named_mut() {
        if is_bias(name) {
            continue;
        }
        let bound = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
        for v in m.as_mut_slice() {
            *v = bound * (2.0 * rng.random::<f64>() - 1.0);
        }
    }
    Ok(params)
}
