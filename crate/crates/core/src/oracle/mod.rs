//! Brute-force validation engine.
//!
//! Each reservoir is discretized into a finite comb of fermionic modes
//! whose couplings sample the Lorentzian spectral density. The resulting
//! quadratic Hamiltonian is diagonalized exactly; single-particle
//! propagation plus Wick factorization over the Gaussian initial state
//! (dots in a fixed state, leads thermal) then yields exact one- and
//! two-time correlators against which the Green's-function pipeline is
//! checked. Valid up to the recurrence time of the finite comb,
//! `t < pi K / span`.

pub mod fock;

use crate::model::{DeviceConfig, LeadSpec};
use crate::{C64, CMat2, Error, Result};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

/// Default half-width of the sampled energy window around each lead's
/// chemical potential.
pub const DEFAULT_SPAN: f64 = 20.0;
/// Default number of modes per lead.
pub const DEFAULT_MODES: usize = 64;

/// One discretized reservoir mode: its energy, thermal occupation and
/// coupling amplitudes to the two dots.
#[derive(Debug, Clone, Copy)]
pub struct BathMode {
    pub energy: f64,
    pub occupation: f64,
    pub coupling: Vector2<f64>,
}

/// Finite-mode realization of both reservoirs.
#[derive(Debug, Clone)]
pub struct FiniteBath {
    pub modes_per_lead: usize,
    pub span: f64,
    modes: Vec<BathMode>,
}

impl FiniteBath {
    /// Assemble from explicit modes (custom spectral samplings in tests
    /// and probes).
    pub fn from_modes(modes_per_lead: usize, span: f64, modes: Vec<BathMode>) -> Self {
        FiniteBath { modes_per_lead, span, modes }
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    /// Times beyond this are contaminated by recurrences of the finite
    /// comb (level spacing `2 span / K`).
    pub fn validity_window(&self) -> f64 {
        std::f64::consts::PI * self.modes_per_lead as f64 / self.span
    }
}

/// Discretize both leads of a device into `k` modes each on the windows
/// `[mu - span, mu + span]`.
///
/// The coupling matrix is realized through its eigendecomposition: every
/// non-null eigenpair `(lambda, e)` contributes one mode per energy bin
/// with amplitudes `e_i sqrt(lambda L(eps) d_eps / 2 pi)`, which
/// reproduces the matrix spectral density exactly at the sample points.
/// Rank-1 matrices (series, parallel) therefore cost one mode per bin.
pub fn build_bath(config: &DeviceConfig, k: usize, span: f64) -> Result<FiniteBath> {
    if k < 1 {
        return Err(Error::param("need at least one bath mode per lead"));
    }
    if !(span > 0.0) {
        return Err(Error::param("bath span must be positive"));
    }
    let mut modes = Vec::new();
    for lead in config.leads() {
        append_lead_modes(&mut modes, lead, k, span);
    }
    Ok(FiniteBath { modes_per_lead: k, span, modes })
}

fn append_lead_modes(modes: &mut Vec<BathMode>, lead: &LeadSpec, k: usize, span: f64) {
    let d_eps = 2.0 * span / k as f64;
    let gamma = lead.gamma();
    for (lambda, dir) in sym2_eigenpairs(gamma) {
        if lambda <= 1e-14 {
            continue;
        }
        for j in 0..k {
            let energy = lead.mu - span + (j as f64 + 0.5) * d_eps;
            let weight = lorentz_scalar(energy, lead.mu, lead.bandwidth) * d_eps
                / (2.0 * std::f64::consts::PI);
            modes.push(BathMode {
                energy,
                occupation: crate::kernels::fermi(energy, lead),
                coupling: dir * (lambda * weight).sqrt(),
            });
        }
    }
}

fn lorentz_scalar(eps: f64, mu: f64, w: f64) -> f64 {
    let x = eps - mu;
    w * w / (x * x + w * w)
}

/// Eigenpairs of a symmetric 2x2 real matrix.
fn sym2_eigenpairs(m: &Matrix2<f64>) -> [(f64, Vector2<f64>); 2] {
    let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    if b.abs() < 1e-300 {
        return [(a, Vector2::new(1.0, 0.0)), (c, Vector2::new(0.0, 1.0))];
    }
    let tr = a + c;
    let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    let (lo, hi) = (0.5 * (tr - disc), 0.5 * (tr + disc));
    let v_hi = Vector2::new(b, hi - a).normalize();
    let v_lo = Vector2::new(-(hi - a), b).normalize();
    [(hi, v_hi), (lo, v_lo)]
}

/// Exact single-particle propagator `U(t) = e^{-i H t}` of the combined
/// dots-plus-modes Hamiltonian, from one Hermitian eigendecomposition.
/// Index order: dot 1, dot 2, then bath modes.
pub struct SingleParticlePropagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
    occupations: Vec<f64>,
    dim: usize,
}

impl SingleParticlePropagator {
    pub fn new(config: &DeviceConfig, bath: &FiniteBath) -> Self {
        let nb = bath.modes().len();
        let dim = 2 + nb;
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        let eps = config.dots.matrix();
        for i in 0..2 {
            for j in 0..2 {
                h[(i, j)] = eps[(i, j)];
            }
        }
        for (m, mode) in bath.modes().iter().enumerate() {
            let p = 2 + m;
            h[(p, p)] = C64::new(mode.energy, 0.0);
            for i in 0..2 {
                h[(i, p)] = C64::new(mode.coupling[i], 0.0);
                h[(p, i)] = C64::new(mode.coupling[i], 0.0);
            }
        }
        let eig = h.symmetric_eigen();
        let mut occupations = vec![0.0; dim];
        for (m, mode) in bath.modes().iter().enumerate() {
            occupations[2 + m] = mode.occupation;
        }
        SingleParticlePropagator {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
            occupations,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One row of `U(t)`: how mode `row` at time `t` decomposes into the
    /// initial annihilation operators.
    pub fn row(&self, row: usize, t: f64) -> DVector<C64> {
        let q = &self.eigenvectors;
        let mut weighted = DVector::<C64>::zeros(self.dim);
        for m in 0..self.dim {
            weighted[m] = q[(row, m)] * C64::new(0.0, -self.eigenvalues[m] * t).exp();
        }
        let mut out = DVector::<C64>::zeros(self.dim);
        for p in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..self.dim {
                acc += weighted[m] * q[(p, m)].conj();
            }
            out[p] = acc;
        }
        out
    }

    /// Full propagator (test use; O(dim^2) per call).
    pub fn matrix(&self, t: f64) -> DMatrix<C64> {
        let q = &self.eigenvectors;
        let phases =
            DMatrix::from_diagonal(&self.eigenvalues.map(|e| C64::new(0.0, -e * t).exp()));
        q * phases * q.adjoint()
    }

    /// Dot-block of `U(t)`: the exact retarded propagator of the dots in
    /// the discretized-bath model.
    pub fn dot_propagator(&self, t: f64) -> CMat2 {
        let r0 = self.row(0, t);
        let r1 = self.row(1, t);
        Matrix2::new(r0[0], r0[1], r1[0], r1[1])
    }

    /// Exact noise correlation `v_ij(t1, t2) = <F_j†(t2) F_i(t1)>`: the
    /// bath-sourced part of the evolved operators contracted with the
    /// thermal occupations.
    pub fn noise_v(&self, t1: f64, t2: f64) -> CMat2 {
        let rows1 = [self.row(0, t1), self.row(1, t1)];
        let rows2 = [self.row(0, t2), self.row(1, t2)];
        let mut out = CMat2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for p in 2..self.dim {
                    acc += rows2[j][p].conj() * rows1[i][p] * self.occupations[p];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

/// Initial dot correlations `<a_i† a_j>` for the supported states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DotState {
    /// `|01>`: first dot empty, second occupied.
    SecondOccupied,
    /// `(|01> + |10>)/sqrt(2)`.
    SuperpositionPlus,
}

impl DotState {
    pub fn correlation(&self) -> CMat2 {
        match self {
            DotState::SecondOccupied => {
                Matrix2::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0))
            }
            DotState::SuperpositionPlus => Matrix2::from_element(C64::new(0.5, 0.0)),
        }
    }
}

/// Result of one exact two-time evaluation.
#[derive(Debug, Clone, Copy)]
pub struct OracleTwoTime {
    pub n2_t1: f64,
    pub n2_t2: f64,
    /// `<n2(t2) n2(t1)>`.
    pub nn: C64,
    /// False when either time exceeds the recurrence window.
    pub within_validity: bool,
}

/// Exact `<n2(t1)>`, `<n2(t2)>` and `<n2(t2) n2(t1)>` by Wick
/// factorization over the Gaussian initial state.
pub fn oracle_two_time(
    prop: &SingleParticlePropagator,
    bath: &FiniteBath,
    state: DotState,
    t1: f64,
    t2: f64,
) -> OracleTwoTime {
    let c0 = state.correlation();
    let rows1 = [prop.row(0, t1), prop.row(1, t1)];
    let rows2 = [prop.row(0, t2), prop.row(1, t2)];

    // <a_2†(s) a_2(s')> and <a_2(s) a_2†(s')> from rows of U
    let contraction = |ra: &DVector<C64>, rb: &DVector<C64>| -> (C64, C64) {
        let mut particle = C64::new(0.0, 0.0); // <a†(a-row) a(b-row)>
        let mut hole = C64::new(0.0, 0.0); // <a(a-row) a†(b-row)>
        for p in 0..2 {
            for q in 0..2 {
                particle += ra[p].conj() * rb[q] * c0[(p, q)];
                let delta = if p == q { 1.0 } else { 0.0 };
                hole += ra[p] * rb[q].conj() * (delta - c0[(q, p)]);
            }
        }
        for p in 2..prop.dim() {
            let f = prop.occupations[p];
            particle += ra[p].conj() * rb[p] * f;
            hole += ra[p] * rb[p].conj() * (1.0 - f);
        }
        (particle, hole)
    };

    let (n1, _) = contraction(&rows1[1], &rows1[1]);
    let (n2, _) = contraction(&rows2[1], &rows2[1]);
    // Wick: <a†(t2) a(t2) a†(t1) a(t1)> =
    //   <n(t2)><n(t1)> + <a†(t2) a(t1)> <a(t2) a†(t1)>
    let (cross_particle, cross_hole) = contraction(&rows2[1], &rows1[1]);
    let nn = n2 * n1 + cross_particle * cross_hole;

    let window = bath.validity_window();
    OracleTwoTime {
        n2_t1: n1.re,
        n2_t2: n2.re,
        nn,
        within_validity: t1 <= window && t2 <= window,
    }
}

/// Exact LGI correlators from the finite-bath model at the four times
/// `0, tau, 2 tau, 3 tau` for the initial dot state `|01>`.
pub fn oracle_lgi(
    prop: &SingleParticlePropagator,
    bath: &FiniteBath,
    tau: f64,
) -> crate::lgi::LgiResult {
    let times = [0.0, tau, 2.0 * tau, 3.0 * tau];
    let q = |i: usize, j: usize| -> f64 {
        let r = oracle_two_time(prop, bath, DotState::SecondOccupied, times[i], times[j]);
        crate::lgi::q_correlator(r.nn, r.n2_t2, r.n2_t1)
    };
    crate::lgi::LgiResult::from_correlators(tau, q(0, 1), q(1, 2), q(0, 2), q(2, 3), q(0, 3))
}
