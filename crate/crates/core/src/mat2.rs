//! Small helpers for 2x2 complex matrices.

use crate::{C64, CMat2};

/// Largest absolute value among the four entries.
pub fn max_abs(m: &CMat2) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Spectral norm (largest singular value), from the closed-form
/// eigenvalues of the 2x2 Hermitian matrix m† m.
pub fn spectral_norm(m: &CMat2) -> f64 {
    let g = m.adjoint() * m;
    let tr = g[(0, 0)].re + g[(1, 1)].re;
    let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

/// Deviation from Hermiticity, max |m - m†|.
pub fn hermiticity_defect(m: &CMat2) -> f64 {
    max_abs(&(m - m.adjoint()))
}

#[cfg(test)]
pub fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
