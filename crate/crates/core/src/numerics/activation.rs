use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

/// Softmax over the first `valid_len` logits; the rest are exactly zero.
pub fn masked_softmax(logits: &[f64], valid_len: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; logits.len()];
    masked_softmax_into(logits, valid_len, &mut out)?;
    Ok(out)
}

pub fn masked_softmax_into(logits: &[f64], valid_len: usize, out: &mut [f64]) -> Result<()> {
    if valid_len == 0 || valid_len > logits.len() {
        return Err(Error::MaskLength {
            valid_len,
            len: logits.len(),
        });
    }
    let (valid, masked) = out.split_at_mut(valid_len);
    softmax_into(&logits[..valid_len], valid);
    masked.fill(0.0);
    Ok(())
}

/// Max-subtracted softmax of a nonempty slice.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}
