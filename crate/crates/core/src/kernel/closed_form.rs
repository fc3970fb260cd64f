use nalgebra::DMatrix;

use super::se::{se_eval, SeHyperparams};

/// Curl-free covariance for 3-D fields:
/// `sf2 exp(-|r|^2 / 2l^2) (I - (r/l)(r/l)^T)` with `r = x - x'`.
///
/// This equals `l^2` times the kernel obtained by applying the gradient to
/// both arguments of the SE kernel; the scaling leaves the constraint intact.
pub fn curl_free_closed_form(x: &[f64], x2: &[f64], theta: &SeHyperparams) -> DMatrix<f64> {
    assert_eq!(x.len(), 3, "curl-free kernel is defined for 3-D inputs");
    assert_eq!(x2.len(), 3, "curl-free kernel is defined for 3-D inputs");
    let l = theta.length_scale;
    let e = se_eval(x, x2, theta);
    let r = [(x[0] - x2[0]) / l, (x[1] - x2[1]) / l, (x[2] - x2[2]) / l];
    DMatrix::from_fn(3, 3, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        e * (delta - r[i] * r[j])
    })
}

/// Independent outputs sharing one SE kernel: `k(x, x') I_K`.
pub fn diagonal_kernel(x: &[f64], x2: &[f64], theta: &SeHyperparams, outputs: usize) -> DMatrix<f64> {
    DMatrix::identity(outputs, outputs) * se_eval(x, x2, theta)
}
