//! Adaptive Gauss-Legendre quadrature for small vectors of complex
//! integrands sharing one panel decomposition.
//!
//! Error estimation pairs a 7-point rule with a 15-point rule on each
//! panel; the panel with the worst estimate is bisected until the summed
//! estimate drops below the requested absolute tolerance.

use crate::C64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// Abscissas/weights for an n-point Gauss-Legendre rule on [-1, 1],
/// from Newton iteration on the Legendre recurrence.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut nodes = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre polynomial and derivative at x by recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = (-x, w);
        nodes[n - 1 - i] = (x, w);
    }
    nodes
}

fn rules() -> &'static (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    static RULES: OnceLock<(Vec<(f64, f64)>, Vec<(f64, f64)>)> = OnceLock::new();
    RULES.get_or_init(|| (gauss_legendre(7), gauss_legendre(15)))
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [C64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn eval_panel<const N: usize>(f: &dyn Fn(f64) -> [C64; N], a: f64, b: f64) -> Panel<N> {
    let (lo_rule, hi_rule) = rules();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut lo = [C64::new(0.0, 0.0); N];
    let mut hi = [C64::new(0.0, 0.0); N];
    for &(x, w) in lo_rule {
        let fx = f(c + h * x);
        for i in 0..N {
            lo[i] += fx[i] * w;
        }
    }
    for &(x, w) in hi_rule {
        let fx = f(c + h * x);
        for i in 0..N {
            hi[i] += fx[i] * w;
        }
    }
    let mut err = 0.0f64;
    for i in 0..N {
        lo[i] *= h;
        hi[i] *= h;
        err = err.max((hi[i] - lo[i]).norm());
    }
    Panel { a, b, value: hi, error: err }
}

/// Integral of `f` over the union of `segments`, refined until the summed
/// per-panel error estimate drops below `abs_tol` (or the panel budget is
/// spent). Returns the value vector and the achieved error estimate.
pub fn integrate<const N: usize>(
    f: impl Fn(f64) -> [C64; N],
    segments: &[(f64, f64)],
    abs_tol: f64,
    max_panels: usize,
) -> ([C64; N], f64) {
    let f: &dyn Fn(f64) -> [C64; N] = &f;
    let mut heap: BinaryHeap<Panel<N>> = segments
        .iter()
        .filter(|(a, b)| b > a)
        .map(|&(a, b)| eval_panel(f, a, b))
        .collect();
    let mut panels = heap.len();
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        if total_err <= abs_tol || panels >= max_panels {
            let mut value = [C64::new(0.0, 0.0); N];
            for p in heap.iter() {
                for i in 0..N {
                    value[i] += p.value[i];
                }
            }
            return (value, total_err);
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel no longer splittable at f64 resolution; freeze it.
            let mut frozen = worst;
            frozen.error = 0.0;
            heap.push(frozen);
            continue;
        }
        heap.push(eval_panel(f, worst.a, mid));
        heap.push(eval_panel(f, mid, worst.b));
        panels += 1;
    }
}
