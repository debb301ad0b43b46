//! Central finite differences, used as an independent gradient oracle.

use super::matrix::ParamSet;

/// `(f(θ + h e_i) - f(θ - h e_i)) / 2h` for every parameter, flattened in
/// [`ParamSet::slices`] order.
pub fn finite_diff_grad<P, F>(loss_fn: F, params: &P, h: f64) -> Vec<f64>
where
    P: ParamSet + Clone,
    F: Fn(&P) -> f64,
{
    let mut probe = params.clone();
    let lens: Vec<usize> = params.slices().iter().map(|s| s.len()).collect();
    let mut out = Vec::with_capacity(lens.iter().sum());
    for (t, &len) in lens.iter().enumerate() {
        for i in 0..len {
            let orig = probe.slices()[t][i];
            probe.slices_mut()[t][i] = orig + h;
            let up = loss_fn(&probe);
            probe.slices_mut()[t][i] = orig - h;
            let down = loss_fn(&probe);
            probe.slices_mut()[t][i] = orig;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

/// Floor on the relative-error denominator. Central differences with
/// `h = 1e-5` on an O(1) loss carry roughly `1e-11` of roundoff, so
/// gradients below this floor are compared in absolute terms instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERROR_FLOOR)
}

pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| relative_error(x, y))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let g = finite_diff_grad(|p: &Vec<f64>| p[0] * p[0], &vec![3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = finite_diff_grad(|_: &Vec<f64>| 4.2, &vec![1.0, 2.0, 3.0], 1e-5);
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn multivariate() {
        let f = |p: &Vec<f64>| p[0].sin() * p[1] + p[1].powi(3);
        let p = vec![0.3, -1.2];
        let g = finite_diff_grad(f, &p, 1e-5);
        let exact = [p[0].cos() * p[1], p[0].sin() + 3.0 * p[1] * p[1]];
        assert!(max_relative_error(&g, &exact) < 1e-8);
    }
}
