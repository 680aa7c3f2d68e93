//! Analytic dynamics of the isolated double dot.
//!
//! With no reservoirs attached, the Heisenberg operators evolve through a
//! 2x2 propagator `w(t)` solving `dw/dt = -i eps w`, `w(0) = 1`. The
//! propagator is evaluated in closed form from the eigenmodes of the dot
//! Hamiltonian, and the two-time occupation correlator of the second dot
//! follows from Wick factorization for the initial state
//! `(|01> + |10>)/sqrt(2)`.

use crate::model::DotHamiltonian;
use crate::{C64, CMat2};
use nalgebra::Matrix2;

/// Tunneling amplitudes below this threshold switch to the decoupled
/// (diagonal) branch, which avoids the `1/e21` in the eigenmode form.
const DIAGONAL_THRESHOLD: f64 = 1e-12;

/// Initial dot state for the closed-system correlators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosedInitialState {
    /// `(|01> + |10>)/sqrt(2)`, one electron shared between the dots.
    #[default]
    SuperpositionPlus,
}

/// Closed-system propagator with its cached eigenmode constants.
///
/// `alpha` is the level splitting, `beta` the level sum, `gamma_diff` the
/// detuning; `a1 .. a4` are the mode amplitudes of the matrix entries.
#[derive(Debug, Clone, Copy)]
pub struct ClosedPropagator {
    alpha: f64,
    beta: f64,
    gamma_diff: f64,
    a1: f64,
    a2: f64,
    a3: C64,
    a4: C64,
    e21: C64,
    e11: f64,
    e22: f64,
    diagonal: bool,
}

impl ClosedPropagator {
    pub fn new(dots: &DotHamiltonian) -> Self {
        let e11 = dots.e11();
        let e22 = dots.e22();
        let e12 = dots.e12();
        let e21 = dots.e21();
        let gamma_diff = e22 - e11;
        let alpha = dots.rabi_splitting();
        let diagonal = e21.norm() < DIAGONAL_THRESHOLD;
        let (a1, a2, a3, a4) = if diagonal {
            (0.0, 0.0, C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (
                (alpha + gamma_diff) / (2.0 * alpha),
                (alpha - gamma_diff) / (2.0 * alpha),
                -e12 / alpha,
                e12 / alpha,
            )
        };
        ClosedPropagator {
            alpha,
            beta: e11 + e22,
            gamma_diff,
            a1,
            a2,
            a3,
            a4,
            e21,
            e11,
            e22,
            diagonal,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma_diff(&self) -> f64 {
        self.gamma_diff
    }

    /// Propagator `w(t)` relative to `t0 = 0`.
    pub fn at(&self, t: f64) -> CMat2 {
        if self.diagonal {
            return Matrix2::new(
                C64::new(0.0, -self.e11 * t).exp(),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, -self.e22 * t).exp(),
            );
        }
        // Two phase factors e^{-i (beta -/+ alpha) t / 2}.
        let slow = C64::new(0.0, -0.5 * (self.beta - self.alpha) * t).exp();
        let fast = C64::new(0.0, -0.5 * (self.beta + self.alpha) * t).exp();
        let w11 = slow * self.a1 + fast * self.a2;
        let w12 = self.a3 * slow + self.a4 * fast;
        let w21 = (-self.e21 / self.alpha) * slow + (self.e21 / self.alpha) * fast;
        let w22 = slow * self.a2 + fast * self.a1;
        Matrix2::new(w11, w12, w21, w22)
    }
}

/// Closed-system propagator `w(t, t0 = 0)` of a dot Hamiltonian.
pub fn closed_propagator(dots: &DotHamiltonian, t: f64) -> CMat2 {
    ClosedPropagator::new(dots).at(t)
}

/// Two-time occupation correlator `<n2(t2) n2(t1)>` of the second dot for
/// the initial state `(|01> + |10>)/sqrt(2)`, as the eight-term Wick
/// expansion in the propagator entries.
pub fn closed_two_time_n2(dots: &DotHamiltonian, t1: f64, t2: f64) -> C64 {
    let prop = ClosedPropagator::new(dots);
    closed_two_time_n2_with(&prop, t1, t2)
}

pub(crate) fn closed_two_time_n2_with(prop: &ClosedPropagator, t1: f64, t2: f64) -> C64 {
    let w1 = prop.at(t1);
    let w2 = prop.at(t2);
    let (p1, q1) = (w1[(1, 0)], w1[(1, 1)]);
    let (p2, q2) = (w2[(1, 0)], w2[(1, 1)]);
    let terms = p2.norm_sqr() * p1.norm_sqr()
        + p2.norm_sqr() * (p1.conj() * q1)
        + p2.conj() * q2 * q1.conj() * p1
        + p2.conj() * q2 * q1.norm_sqr()
        + q2.conj() * p2 * p1.norm_sqr()
        + q2.conj() * p2 * p1.conj() * q1
        + q2.norm_sqr() * (q1.conj() * p1)
        + q2.norm_sqr() * q1.norm_sqr();
    terms * 0.5
}

/// Mean occupation `<n2(t)>` of the second dot for the same initial state.
pub fn closed_n2(dots: &DotHamiltonian, t: f64) -> f64 {
    closed_n2_with(&ClosedPropagator::new(dots), t)
}

pub(crate) fn closed_n2_with(prop: &ClosedPropagator, t: f64) -> f64 {
    let w = prop.at(t);
    let (p, q) = (w[(1, 0)], w[(1, 1)]);
    0.5 * (p.norm_sqr() + 2.0 * (p.conj() * q).re + q.norm_sqr())
}

/// Two-time correlator of the dichotomic charge observable
/// `Q = 2 n2 - 1`: `4 <n2(t2) n2(t1)> - 2 <n2(t2)> - 2 <n2(t1)> + 1`.
pub fn closed_q_correlator(dots: &DotHamiltonian, t1: f64, t2: f64) -> C64 {
    let prop = ClosedPropagator::new(dots);
    let nn = closed_two_time_n2_with(&prop, t1, t2);
    nn * 4.0 - 2.0 * (closed_n2_with(&prop, t2) + closed_n2_with(&prop, t1)) + 1.0
}
