//! Nonequilibrium Green's functions of the reservoir-coupled dots.
//!
//! The retarded propagator `u(t, t0)` solves the Volterra
//! integro-differential equation
//!
//! ```text
//! du/dt + i eps u + sum_a int_{t0}^{t} g_a(t - s) u(s, t0) ds = 0,   u(t0, t0) = 1,
//! ```
//!
//! and the reservoir-induced noise correlations are the double time
//! integrals
//!
//! ```text
//! v(t1, t2)    = sum_a int_0^{t1} da int_0^{t2} db  u(t1, a) g~_a(a - b) u†(t2, b),
//! vbar(t1, t2) = same with g-_a.
//! ```
//!
//! Because the Lorentzian kernels are stationary, `u(t, s) = u(t - s, 0)`;
//! the solver produces the one-argument table and the correlation engine
//! reuses it for both integral arguments.

use crate::kernels::KernelTable;
use crate::mat2::spectral_norm;
use crate::model::{DeviceConfig, TimeGrid};
use crate::{C64, CMat2, Error, Result};
use nalgebra::Matrix2;
use std::collections::BTreeMap;
use std::io::Write;

/// Growth beyond this norm aborts the solve (dissipative dynamics cannot
/// amplify; growth means the step is too large for the kernel phase).
const INSTABILITY_NORM: f64 = 1.0 + 1e-3;
/// Post-solve contractivity tolerance on singular values.
const CONTRACTIVITY_TOL: f64 = 1e-8;
/// Kernel entries below this fraction of the zero-lag norm are dropped
/// from the memory sum.
const MEMORY_CUTOFF: f64 = 1e-14;

/// Time-stepping scheme for the retarded propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Second-order product integration: trapezoidal rule for both the
    /// time derivative and the memory integral, O(dt^2), O(n^2) work.
    #[default]
    ProductIntegration,
    /// Exponential-kernel fast path: the Lorentzian memory integral
    /// satisfies a local ODE for one auxiliary 2x2 variable per lead, and
    /// the enlarged system is integrated with classic RK4, O(dt^4), O(n).
    AuxiliaryOde,
}

/// Retarded propagator sampled on a uniform grid, `u[k] = u(t_k, 0)`.
#[derive(Debug, Clone)]
pub struct RetardedGreen {
    grid: TimeGrid,
    u: Vec<CMat2>,
}

impl RetardedGreen {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn at(&self, k: usize) -> &CMat2 {
        &self.u[k]
    }

    pub fn values(&self) -> &[CMat2] {
        &self.u
    }

    /// Propagator between two grid nodes, `u(t_k, t_j) = u(t_{k-j}, 0)`
    /// (stationary kernels).
    pub fn between(&self, k: usize, j: usize) -> &CMat2 {
        debug_assert!(k >= j);
        &self.u[k - j]
    }
}

/// Solve the Volterra equation for `u` on `grid` given per-lead kernel
/// tables.
pub fn solve_retarded(
    config: &DeviceConfig,
    grid: &TimeGrid,
    tables: &[KernelTable],
    method: SolverMethod,
) -> Result<RetardedGreen> {
    for table in tables {
        table.check_grid(grid)?;
    }
    let u = match method {
        SolverMethod::ProductIntegration => product_integration(config, grid, tables)?,
        SolverMethod::AuxiliaryOde => auxiliary_ode(config, grid)?,
    };
    for (k, m) in u.iter().enumerate() {
        let s = spectral_norm(m);
        if s > 1.0 + CONTRACTIVITY_TOL {
            return Err(Error::numeric(format!(
                "retarded propagator is not contractive at t = {} (largest singular value \
                 1 + {:.2e}); reduce the time step",
                grid.node(k),
                s - 1.0
            )));
        }
    }
    Ok(RetardedGreen { grid: *grid, u })
}

fn product_integration(
    config: &DeviceConfig,
    grid: &TimeGrid,
    tables: &[KernelTable],
) -> Result<Vec<CMat2>> {
    let n = grid.len();
    let dt = grid.dt();
    let eps = *config.dots.matrix();

    // Summed kernel over leads at non-negative lags.
    let kernel: Vec<CMat2> = (0..n)
        .map(|k| {
            tables
                .iter()
                .map(|t| t.g_at(k as isize))
                .fold(CMat2::zeros(), |acc, g| acc + g)
        })
        .collect();
    let k0_norm = crate::mat2::max_abs(&kernel[0]);
    // The kernel decays exponentially; entries below the cutoff cannot
    // move the memory sum at double precision, so truncate the window.
    let cutoff = kernel
        .iter()
        .rposition(|k| crate::mat2::max_abs(k) > MEMORY_CUTOFF * k0_norm.max(1e-300))
        .unwrap_or(0);

    let half_i_dt = C64::new(0.0, 0.5 * dt);
    let ap = Matrix2::identity() + eps * half_i_dt + kernel[0] * C64::new(0.25 * dt * dt, 0.0);
    let a_inv = ap
        .try_inverse()
        .ok_or_else(|| Error::numeric("implicit step matrix is singular; reduce the time step"))?;

    let mut u = Vec::with_capacity(n);
    u.push(CMat2::identity());
    // memory integral at the current node, M_k = int_0^{t_k} g(t_k - s) u(s) ds
    let mut mem_prev = CMat2::zeros();
    for k in 0..n - 1 {
        // trapezoidal memory sum at t_{k+1} excluding the unknown u_{k+1}
        let lo = (k + 1).saturating_sub(cutoff);
        let mut partial = CMat2::zeros();
        if k0_norm > 0.0 {
            for m in lo.max(1)..=k {
                partial += kernel[k + 1 - m] * u[m];
            }
            if lo == 0 {
                partial += kernel[k + 1] * u[0] * C64::new(0.5, 0.0);
            }
            partial *= C64::new(dt, 0.0);
        }
        let rhs_prev = eps * u[k] * C64::new(0.0, -1.0) - mem_prev;
        let rhs = u[k] + (rhs_prev - partial) * C64::new(0.5 * dt, 0.0);
        let next = a_inv * rhs;
        let norm = spectral_norm(&next);
        if !norm.is_finite() || norm > INSTABILITY_NORM {
            return Err(Error::numeric(format!(
                "product-integration step unstable at t = {} (norm {:.3}); \
                 reduce the time step dt = {}",
                grid.node(k + 1),
                norm,
                dt
            )));
        }
        mem_prev = partial + kernel[0] * next * C64::new(0.5 * dt, 0.0);
        u.push(next);
    }
    Ok(u)
}

/// State of the enlarged local ODE system: the propagator plus one
/// auxiliary memory variable per lead,
/// `z_a(t) = int_0^t e^{-(W_a + i mu_a)(t - s)} u(s) ds`.
#[derive(Clone, Copy)]
struct AuxState {
    u: CMat2,
    z: [CMat2; 2],
}

impl AuxState {
    fn scale_add(&self, rate: &AuxState, factor: f64) -> AuxState {
        let f = C64::new(factor, 0.0);
        AuxState {
            u: self.u + rate.u * f,
            z: [self.z[0] + rate.z[0] * f, self.z[1] + rate.z[1] * f],
        }
    }
}

fn auxiliary_ode(config: &DeviceConfig, grid: &TimeGrid) -> Result<Vec<CMat2>> {
    let n = grid.len();
    let dt = grid.dt();
    let eps = *config.dots.matrix();
    let leads = config.leads();
    // g_a(s) = prefactor_a e^{-(W_a + i mu_a) s} with a matrix prefactor
    let prefactor: Vec<CMat2> = leads
        .iter()
        .map(|l| l.gamma().map(|g| C64::new(g * l.bandwidth * 0.5, 0.0)))
        .collect();
    let decay: Vec<C64> = leads.iter().map(|l| C64::new(l.bandwidth, l.mu)).collect();

    let deriv = |s: &AuxState| -> AuxState {
        let mut du = eps * s.u * C64::new(0.0, -1.0);
        let mut dz = [CMat2::zeros(), CMat2::zeros()];
        for a in 0..2 {
            du -= prefactor[a] * s.z[a];
            dz[a] = s.u - s.z[a] * decay[a];
        }
        AuxState { u: du, z: dz }
    };

    let mut state = AuxState { u: CMat2::identity(), z: [CMat2::zeros(); 2] };
    let mut u = Vec::with_capacity(n);
    u.push(state.u);
    for k in 0..n - 1 {
        let k1 = deriv(&state);
        let k2 = deriv(&state.scale_add(&k1, 0.5 * dt));
        let k3 = deriv(&state.scale_add(&k2, 0.5 * dt));
        let k4 = deriv(&state.scale_add(&k3, dt));
        let mut step = k1.scale_add(&k2, 2.0);
        step = step.scale_add(&k3, 2.0);
        step = step.scale_add(&k4, 1.0);
        state = state.scale_add(&step, dt / 6.0);
        let norm = spectral_norm(&state.u);
        if !norm.is_finite() || norm > INSTABILITY_NORM {
            return Err(Error::numeric(format!(
                "auxiliary-ODE step unstable at t = {} (norm {:.3}); reduce the time step",
                grid.node(k + 1),
                norm
            )));
        }
        u.push(state.u);
    }
    Ok(u)
}

/// Which noise-correlation entries to evaluate.
#[derive(Debug, Clone)]
pub enum CorrelationScope {
    /// Selected `(earlier, later)` node-index pairs.
    Pairs(Vec<(usize, usize)>),
    /// Equal-time entries at every grid node (trace dumps).
    Diagonal,
    /// Every pair `i1 <= i2`. Debug feature; quadratic storage and cubic
    /// work, restricted to small grids.
    FullGrid,
}

/// One stored entry of the noise correlations.
#[derive(Debug, Clone, Copy)]
pub struct NoisePair {
    pub v: CMat2,
    pub vbar: CMat2,
}

/// Noise correlations `v`, `vbar` at selected node pairs `(i1 <= i2)`.
/// Reversed lookups are served through the Hermitian symmetry
/// `v(t2, t1) = v(t1, t2)†`.
#[derive(Debug, Clone)]
pub struct NoiseCorrelation {
    grid: TimeGrid,
    entries: BTreeMap<(usize, usize), NoisePair>,
}

impl NoiseCorrelation {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), NoisePair> {
        &self.entries
    }

    pub fn pair(&self, i1: usize, i2: usize) -> Option<NoisePair> {
        if i1 <= i2 {
            self.entries.get(&(i1, i2)).copied()
        } else {
            self.entries.get(&(i2, i1)).map(|p| NoisePair {
                v: p.v.adjoint(),
                vbar: p.vbar.adjoint(),
            })
        }
    }

    pub fn v(&self, i1: usize, i2: usize) -> Option<CMat2> {
        self.pair(i1, i2).map(|p| p.v)
    }

    pub fn vbar(&self, i1: usize, i2: usize) -> Option<CMat2> {
        self.pair(i1, i2).map(|p| p.vbar)
    }
}

/// Evaluate the noise correlations by 2D trapezoidal quadrature over the
/// solved propagator and tabulated kernels.
pub fn solve_noise_correlations(
    config: &DeviceConfig,
    grid: &TimeGrid,
    tables: &[KernelTable],
    u: &RetardedGreen,
    scope: CorrelationScope,
) -> Result<NoiseCorrelation> {
    if u.grid() != grid {
        return Err(Error::param("propagator was solved on a different grid"));
    }
    for table in tables {
        table.check_grid(grid)?;
    }
    if config.leads().len() != tables.len() {
        return Err(Error::param("need one kernel table per lead"));
    }
    let n = grid.len();
    let pairs: Vec<(usize, usize)> = match scope {
        CorrelationScope::Pairs(p) => {
            for &(i1, i2) in &p {
                if i1 > i2 || i2 >= n {
                    return Err(Error::param(format!(
                        "correlation pair ({i1}, {i2}) outside the grid (n = {n}, need i1 <= i2)"
                    )));
                }
            }
            p
        }
        CorrelationScope::Diagonal => (0..n).map(|i| (i, i)).collect(),
        CorrelationScope::FullGrid => {
            if n > 600 {
                return Err(Error::param(
                    "full-grid noise correlations are a debug feature; use a grid of \
                     at most 600 nodes",
                ));
            }
            (0..n).flat_map(|i2| (0..=i2).map(move |i1| (i1, i2))).collect()
        }
    };

    let tilde = |k: isize| -> CMat2 {
        tables.iter().map(|t| t.gtilde_at(k)).fold(CMat2::zeros(), |a, g| a + g)
    };
    let bar = |k: isize| -> CMat2 {
        tables.iter().map(|t| t.gbar_at(k)).fold(CMat2::zeros(), |a, g| a + g)
    };
    let (v_map, vbar_map) = rayon::join(
        || correlation_from_kernel(grid, u.values(), &tilde, &pairs),
        || correlation_from_kernel(grid, u.values(), &bar, &pairs),
    );

    let mut entries = BTreeMap::new();
    for &(i1, i2) in &pairs {
        let v = v_map[&(i1, i2)];
        let vbar = vbar_map[&(i1, i2)];
        if i1 == i2 {
            for i in 0..2 {
                let occ = v[(i, i)].re;
                let hole = vbar[(i, i)].re;
                if !(-1e-8..=1.0 + 1e-8).contains(&occ) || !(-1e-8..=1.0 + 1e-8).contains(&hole) {
                    return Err(Error::numeric(format!(
                        "noise correlation diagonal out of [0, 1] at t = {} (v = {occ:.6}, \
                         vbar = {hole:.6}); reduce the time step",
                        grid.node(i1)
                    )));
                }
            }
        }
        entries.insert((i1, i2), NoisePair { v, vbar });
    }
    Ok(NoiseCorrelation { grid: *grid, entries })
}

/// Shared engine for the double integrals over many node pairs.
/// Substituting both integration variables by their distance from the
/// outer times turns each entry into
///
/// ```text
/// v(i1, i2) = dt^2  S''_a  u[a] chi(i2 - i1 + a, i2),
/// chi(x, i2) = S''_b  K(b - x) u†[b],        (S'' = trapezoid weights)
/// ```
///
/// and `chi` is a prefix sum over `b` shared by every pair with the same
/// later index, so one sweep over `b` serves all requested pairs with
/// O(n^2) kernel products in total.
fn correlation_from_kernel(
    grid: &TimeGrid,
    u: &[CMat2],
    kernel: &dyn Fn(isize) -> CMat2,
    pairs: &[(usize, usize)],
) -> BTreeMap<(usize, usize), CMat2> {
    let dt = grid.dt();
    let dt2 = C64::new(dt * dt, 0.0);
    let half = C64::new(0.5, 0.0);
    let mut out = BTreeMap::new();

    // group pair list by the later index
    let mut by_later: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(i1, i2) in pairs {
        if i1 == 0 || i2 == 0 {
            out.insert((i1, i2), CMat2::zeros());
        } else {
            by_later.entry(i2).or_default().push(i1);
        }
    }
    let Some(&max_later) = by_later.keys().next_back() else {
        return out;
    };

    let udag: Vec<CMat2> = u[..=max_later].iter().map(|m| m.adjoint()).collect();
    let mut acc = vec![CMat2::zeros(); max_later + 1];
    for b in 0..=max_later {
        for (xoff, slot) in acc.iter_mut().enumerate() {
            *slot += kernel(b as isize - xoff as isize) * udag[b];
        }
        let Some(earliers) = by_later.get(&b) else {
            continue;
        };
        let i2 = b;
        let chi = |xoff: usize| -> CMat2 {
            acc[xoff]
                - kernel(-(xoff as isize)) * udag[0] * half
                - kernel((i2 - xoff) as isize) * udag[i2] * half
        };
        for &i1 in earliers {
            let mut sum = CMat2::zeros();
            for a in 0..=i1 {
                let term = u[a] * chi(i2 - i1 + a);
                sum += if a == 0 || a == i1 { term * half } else { term };
            }
            out.insert((i1, i2), sum * dt2);
        }
    }
    out
}

/// Reference evaluation of one correlation entry by the plain double
/// trapezoid sum, any time ordering. Used to cross-check the prefix
/// engine and the Hermitian symmetry.
#[cfg(test)]
pub(crate) fn direct_pair(
    grid: &TimeGrid,
    u: &[CMat2],
    kernel: &dyn Fn(isize) -> CMat2,
    i1: usize,
    i2: usize,
) -> CMat2 {
    let dt = grid.dt();
    let mut sum = CMat2::zeros();
    if i1 == 0 || i2 == 0 {
        return sum;
    }
    for a in 0..=i1 {
        let wa = if a == 0 || a == i1 { 0.5 } else { 1.0 };
        for b in 0..=i2 {
            let wb = if b == 0 || b == i2 { 0.5 } else { 1.0 };
            // original coordinates: tau1 = a dt, tau2 = b dt
            let term = u[i1 - a] * kernel(a as isize - b as isize) * u[i2 - b].adjoint();
            sum += term * C64::new(wa * wb, 0.0);
        }
    }
    sum * C64::new(dt * dt, 0.0)
}

/// Mean occupation of the second dot, `|u22(t)|^2 + v22(t, t)`, for the
/// initial dot state `|01>`.
pub fn occupation_n2(u: &RetardedGreen, noise: &NoiseCorrelation, k: usize) -> Result<f64> {
    let v = noise
        .v(k, k)
        .ok_or_else(|| Error::param(format!("no equal-time noise entry at node {k}")))?;
    let n = u.at(k)[(1, 1)].norm_sqr() + v[(1, 1)].re;
    if !(-1e-8..=1.0 + 1e-8).contains(&n) {
        return Err(Error::numeric(format!(
            "occupation {n:.6} outside [0, 1] at node {k}; reduce the time step"
        )));
    }
    Ok(n.clamp(0.0, 1.0))
}

/// Write `t`, the propagator entries and (where available) the equal-time
/// noise correlations as CSV, one row per grid node.
pub fn dump_traces<W: Write>(mut out: W, u: &RetardedGreen, noise: &NoiseCorrelation) -> Result<()> {
    writeln!(
        out,
        "t,re_u11,im_u11,re_u12,im_u12,re_u21,im_u21,re_u22,im_u22,\
         re_v11,im_v11,re_v12,im_v12,re_v21,im_v21,re_v22,im_v22"
    )?;
    let fmt = |x: f64| format!("{x:.12e}");
    for k in 0..u.grid().len() {
        let m = u.at(k);
        let mut row = vec![fmt(u.grid().node(k))];
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            row.push(fmt(m[(i, j)].re));
            row.push(fmt(m[(i, j)].im));
        }
        let v = noise.v(k, k).unwrap_or_else(CMat2::zeros);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            row.push(fmt(v[(i, j)].re));
            row.push(fmt(v[(i, j)].im));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
