//! Time-domain memory kernels of the fermionic reservoirs.
//!
//! Each electrode enters the dot dynamics through three stationary
//! kernels, all Fourier transforms of its Lorentzian spectral density:
//! the full kernel `g` (dissipation), the occupied part `g~` (weighted by
//! the Fermi function) and the empty part `g-` (weighted by `1 - f`).
//! They depend on the time difference only and satisfy `g = g~ + g-`.
//!
//! For the Lorentzian line shape the full kernel has the closed form
//! `gamma * (W/2) * exp(-(W + i mu) |s|)` (conjugated for `s < 0`); the
//! Fermi-weighted kernels are evaluated by adaptive quadrature over the
//! window `[mu - c, mu + c]`, `c = max(50 W, 50 kT, 50)`, plus analytic
//! tail corrections expressed through the exponential integral so that
//! the tabulated values track the full frequency line to ~1e-10.

mod expint;
pub(crate) mod quad;

use crate::model::{LeadSpec, TimeGrid};
use crate::{C64, CMat2, Error, RMat2, Result};
use expint::em1;
use rayon::prelude::*;

/// Absolute tolerance requested from the frequency quadrature.
const QUAD_TOL: f64 = 1e-10;
/// Panel budget per time difference.
const MAX_PANELS: usize = 200_000;

/// Fermi-Dirac occupation of a lead at energy `eps`. Overflow-safe; at
/// zero temperature this is the exact step with value 1/2 at `eps = mu`.
pub fn fermi(eps: f64, lead: &LeadSpec) -> f64 {
    fermi_scalar(eps, lead.mu, lead.temperature)
}

fn fermi_scalar(eps: f64, mu: f64, kt: f64) -> f64 {
    if kt == 0.0 {
        return match eps.partial_cmp(&mu) {
            Some(std::cmp::Ordering::Less) => 1.0,
            Some(std::cmp::Ordering::Greater) => 0.0,
            _ => 0.5,
        };
    }
    let x = (eps - mu) / kt;
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Lorentzian spectral density of one lead,
/// `J_ij(eps) = gamma_ij W^2 / ((eps - mu)^2 + W^2)`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralDensity<'a> {
    pub lead: &'a LeadSpec,
}

impl SpectralDensity<'_> {
    pub fn value(&self, eps: f64) -> RMat2 {
        self.lead.gamma() * lorentz(eps, self.lead.mu, self.lead.bandwidth)
    }
}

fn lorentz(eps: f64, mu: f64, w: f64) -> f64 {
    let x = eps - mu;
    w * w / (x * x + w * w)
}

/// Full memory kernel at time difference `dtau`, closed form.
pub fn kernel_g(lead: &LeadSpec, dtau: f64) -> CMat2 {
    let scalar = scalar_g_closed(lead.bandwidth, lead.mu, dtau);
    scale_gamma(lead.gamma(), scalar)
}

fn scalar_g_closed(w: f64, mu: f64, s: f64) -> C64 {
    let envelope = 0.5 * w * (-w * s.abs()).exp();
    envelope * C64::new(0.0, -mu * s).exp()
}

/// Fermi-occupied kernel at time difference `dtau` (either sign), by
/// adaptive frequency quadrature.
pub fn kernel_gtilde(lead: &LeadSpec, dtau: f64) -> Result<CMat2> {
    let (_, tilde, _) = scalar_components(lead.bandwidth, lead.mu, lead.temperature, dtau.abs())?;
    let m = scale_gamma(lead.gamma(), tilde);
    Ok(if dtau < 0.0 { m.adjoint() } else { m })
}

/// Complementary `1 - f` kernel at time difference `dtau`.
pub fn kernel_gbar(lead: &LeadSpec, dtau: f64) -> Result<CMat2> {
    let (_, _, bar) = scalar_components(lead.bandwidth, lead.mu, lead.temperature, dtau.abs())?;
    let m = scale_gamma(lead.gamma(), bar);
    Ok(if dtau < 0.0 { m.adjoint() } else { m })
}

fn scale_gamma(gamma: &RMat2, z: C64) -> CMat2 {
    gamma.map(|g| z * g)
}

/// Scalar parts of (g, g~, g-) at `s >= 0`, for unit coupling strength.
///
/// All three integrands share one adaptive panel decomposition, so the
/// identity `g = g~ + g-` holds to rounding by construction. The window
/// truncation is repaired with exponential-integral tail terms; the Fermi
/// factor is indistinguishable from its asymptote beyond the window
/// (`|x| >= 50 kT`), so the same tails serve all three components.
fn scalar_components(w: f64, mu: f64, kt: f64, s: f64) -> Result<(C64, C64, C64)> {
    debug_assert!(s >= 0.0);
    let c = (50.0 * w).max(50.0 * kt).max(50.0);
    let inv_2pi = 0.5 / std::f64::consts::PI;
    let f = |eps: f64| -> [C64; 3] {
        let occ = fermi_scalar(eps, mu, kt);
        let phase = C64::new(0.0, -eps * s).exp();
        let base = phase * (lorentz(eps, mu, w) * inv_2pi);
        [base, base * occ, base * (1.0 - occ)]
    };
    // Split at mu so the zero-temperature step sits on a panel edge.
    let segments = [(mu - c, mu), (mu, mu + c)];
    let (vals, err) = quad::integrate(f, &segments, QUAD_TOL, MAX_PANELS);
    if err > 1e-8 {
        return Err(Error::numeric(format!(
            "frequency quadrature did not converge (achieved {err:.2e}, wanted {QUAD_TOL:.0e}) \
             for W={w}, mu={mu}, kT={kt}, dtau={s}"
        )));
    }

    // Analytic tails beyond the window. With x = eps - mu,
    //   upper = (W^2/2pi) e^{-i mu s} T(s),   T(s) = int_c^inf e^{-ixs}/(x^2+W^2) dx,
    //   lower = (W^2/2pi) e^{-i mu s} conj(T(s)),
    // and f = 1 (resp. 0) on the lower (upper) tail to better than e^{-50}.
    let t_upper = tail_integral(c, w, s);
    let prefactor = C64::new(0.0, -mu * s).exp() * (w * w * inv_2pi);
    let upper = prefactor * t_upper;
    let lower = prefactor * t_upper.conj();

    let g = vals[0] + lower + upper;
    let gtilde = vals[1] + lower;
    let gbar = vals[2] + upper;
    Ok((g, gtilde, gbar))
}

/// `T(s) = int_c^inf e^{-i x s} / (x^2 + W^2) dx` for `s >= 0`, via
/// partial fractions and the scaled exponential integral.
fn tail_integral(c: f64, w: f64, s: f64) -> C64 {
    if s == 0.0 {
        return C64::new((std::f64::consts::FRAC_PI_2 - (c / w).atan()) / w, 0.0);
    }
    let zp = C64::new(s * w, s * c); // i s c + s w
    let zm = C64::new(-s * w, s * c); // i s c - s w
    let phase = C64::new(0.0, -s * c).exp();
    phase * (em1(zp) - em1(zm)) / C64::new(0.0, 2.0 * w)
}

/// Tabulated scalar kernel components on a uniform grid of non-negative
/// time differences `k dt`. Shared by every lead with the same bandwidth,
/// bias and temperature; multiplying by the coupling matrix restores the
/// physical kernels.
#[derive(Debug, Clone)]
pub struct ScalarKernelTable {
    pub bandwidth: f64,
    pub mu: f64,
    pub temperature: f64,
    dt: f64,
    g: Vec<C64>,
    gtilde: Vec<C64>,
    gbar: Vec<C64>,
}

impl ScalarKernelTable {
    pub fn build(bandwidth: f64, mu: f64, temperature: f64, grid: &TimeGrid) -> Result<Self> {
        let dt = grid.dt();
        let n = grid.len();
        let rows: Result<Vec<(C64, C64, C64)>> = (0..n)
            .into_par_iter()
            .map(|k| scalar_components(bandwidth, mu, temperature, k as f64 * dt))
            .collect();
        let rows = rows?;
        Ok(ScalarKernelTable {
            bandwidth,
            mu,
            temperature,
            dt,
            g: rows.iter().map(|r| r.0).collect(),
            gtilde: rows.iter().map(|r| r.1).collect(),
            gbar: rows.iter().map(|r| r.2).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn matches(&self, lead: &LeadSpec) -> bool {
        self.bandwidth == lead.bandwidth
            && self.mu == lead.mu
            && self.temperature == lead.temperature
    }
}

/// Per-lead kernel tables: 2x2 complex matrices at time differences
/// `k dt`, `k = 0 .. n-1`. Negative differences follow from the
/// conjugate-transpose symmetry `g(-s) = g(s)†`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    lead: LeadSpec,
    dt: f64,
    g: Vec<CMat2>,
    gtilde: Vec<CMat2>,
    gbar: Vec<CMat2>,
}

impl KernelTable {
    /// Scale a shared scalar table by this lead's coupling matrix.
    pub fn from_scalar(lead: &LeadSpec, scalar: &ScalarKernelTable) -> Result<Self> {
        if !scalar.matches(lead) {
            return Err(Error::param(
                "scalar kernel table was built for different reservoir parameters",
            ));
        }
        let gamma = lead.gamma();
        let scale = |v: &[C64]| v.iter().map(|&z| scale_gamma(gamma, z)).collect();
        Ok(KernelTable {
            lead: *lead,
            dt: scalar.dt,
            g: scale(&scalar.g),
            gtilde: scale(&scalar.gtilde),
            gbar: scale(&scalar.gbar),
        })
    }

    pub fn lead(&self) -> &LeadSpec {
        &self.lead
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// Full kernel at signed difference index `k` (time `k dt`).
    pub fn g_at(&self, k: isize) -> CMat2 {
        signed_lookup(&self.g, k)
    }

    /// Fermi-occupied kernel at signed difference index `k`.
    pub fn gtilde_at(&self, k: isize) -> CMat2 {
        signed_lookup(&self.gtilde, k)
    }

    /// Complementary kernel at signed difference index `k`.
    pub fn gbar_at(&self, k: isize) -> CMat2 {
        signed_lookup(&self.gbar, k)
    }

    /// Check that the table covers a solver grid.
    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.len() < grid.len() {
            return Err(Error::param(format!(
                "kernel table covers {} nodes, grid needs {}",
                self.len(),
                grid.len()
            )));
        }
        if (self.dt - grid.dt()).abs() > 1e-12 * grid.dt() {
            return Err(Error::param("kernel table step does not match the grid step"));
        }
        Ok(())
    }
}

fn signed_lookup(table: &[CMat2], k: isize) -> CMat2 {
    if k >= 0 {
        table[k as usize]
    } else {
        table[(-k) as usize].adjoint()
    }
}

/// Tabulate all three kernels of one lead on a time grid.
pub fn tabulate_kernels(lead: &LeadSpec, grid: &TimeGrid) -> Result<KernelTable> {
    if lead.is_decoupled() {
        // every kernel carries the coupling matrix as a prefactor
        let zeros = vec![CMat2::zeros(); grid.len()];
        return Ok(KernelTable {
            lead: *lead,
            dt: grid.dt(),
            g: zeros.clone(),
            gtilde: zeros.clone(),
            gbar: zeros,
        });
    }
    let scalar = ScalarKernelTable::build(lead.bandwidth, lead.mu, lead.temperature, grid)?;
    KernelTable::from_scalar(lead, &scalar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::max_abs;
    use crate::model::{LeadSpec, ReservoirParams, TimeGrid};
    use nalgebra::Matrix2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn lead(gamma: f64, w: f64, mu: f64, kt: f64) -> LeadSpec {
        LeadSpec::new(
            Matrix2::new(gamma, 0.0, 0.0, gamma),
            ReservoirParams::new(w, mu, kt),
        )
        .unwrap()
    }

    /// Independent second quadrature route: adaptive Simpson on the same
    /// window plus the same analytic tails.
    fn simpson_route(w: f64, mu: f64, kt: f64, s: f64, occupied: Option<bool>) -> C64 {
        let inv_2pi = 0.5 / std::f64::consts::PI;
        let f = |eps: f64| -> C64 {
            let weight = match occupied {
                None => 1.0,
                Some(true) => fermi_scalar(eps, mu, kt),
                Some(false) => 1.0 - fermi_scalar(eps, mu, kt),
            };
            C64::new(0.0, -eps * s).exp() * (lorentz(eps, mu, w) * inv_2pi * weight)
        };
        fn simpson(f: &dyn Fn(f64) -> C64, a: f64, b: f64, fa: C64, fb: C64, fm: C64, tol: f64, depth: u32) -> C64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let h = b - a;
            let whole = (fa + fm * 4.0 + fb) * (h / 6.0);
            let left = (fa + flm * 4.0 + fm) * (h / 12.0);
            let right = (fm + frm * 4.0 + fb) * (h / 12.0);
            let delta = left + right - whole;
            if depth == 0 || delta.norm() < 15.0 * tol {
                left + right + delta / 15.0
            } else {
                simpson(f, a, m, fa, fm, flm, tol / 2.0, depth - 1)
                    + simpson(f, m, b, fm, fb, frm, tol / 2.0, depth - 1)
            }
        }
        let c = (50.0 * w).max(50.0 * kt).max(50.0);
        let mut acc = C64::new(0.0, 0.0);
        // pre-split into per-oscillation chunks so the recursion depth stays low
        let chunks = ((2.0 * c * s / std::f64::consts::PI).ceil() as usize).clamp(8, 20_000);
        for half in [(mu - c, mu), (mu, mu + c)] {
            let step = (half.1 - half.0) / chunks as f64;
            for i in 0..chunks {
                let (a, b) = (half.0 + i as f64 * step, half.0 + (i + 1) as f64 * step);
                acc += simpson(&f, a, b, f(a), f(b), f(0.5 * (a + b)), 1e-13, 40);
            }
        }
        let t_upper = tail_integral(c, w, s);
        let prefactor = C64::new(0.0, -mu * s).exp() * (w * w * inv_2pi);
        acc + match occupied {
            None => prefactor * (t_upper + t_upper.conj()),
            Some(true) => prefactor * t_upper.conj(),
            Some(false) => prefactor * t_upper,
        }
    }

    #[test]
    fn fermi_reference_points() {
        let l = lead(1.0, 1.0, 0.7, 0.25);
        assert_eq!(fermi(0.7, &l), 0.5);
        // mu + 10 kT
        let val = fermi(0.7 + 2.5, &l);
        assert!((val - 1.0 / (10f64.exp() + 1.0)).abs() < 1e-18);
        assert!((val - 4.5398e-5).abs() < 1e-9);
        // zero temperature step
        let l0 = lead(1.0, 1.0, 0.7, 0.0);
        assert_eq!(fermi(-0.3, &l0), 1.0);
        assert_eq!(fermi(1.7, &l0), 0.0);
        assert_eq!(fermi(0.7, &l0), 0.5);
        // no overflow far from mu
        let lt = lead(1.0, 1.0, 0.0, 1e-6);
        assert_eq!(fermi(1e6, &lt), 0.0);
        assert_eq!(fermi(-1e6, &lt), 1.0);
    }

    #[test]
    fn kernel_g_closed_form_values() {
        let l = lead(0.8, 1.0, 5.0, 0.1);
        // dtau = 0: gamma * W / 2
        let g0 = kernel_g(&l, 0.0);
        assert!((g0[(0, 0)] - C64::new(0.4, 0.0)).norm() < 1e-15);
        // W = 1, mu = 5, dtau = 1: scalar 0.5 e^{-1} e^{-5i}
        let g1 = kernel_g(&lead(1.0, 1.0, 5.0, 0.1), 1.0);
        let expect = C64::new(0.0, -5.0).exp() * 0.5 * (-1.0f64).exp();
        assert!((g1[(0, 0)] - expect).norm() < 1e-15);
        // decoupled lead
        let gz = kernel_g(&lead(0.0, 1.0, 5.0, 0.1), 2.3);
        assert_eq!(max_abs(&gz), 0.0);
    }

    #[test]
    fn closed_form_matches_quadrature_for_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let w = rng.gen_range(0.4..3.0);
            let mu = rng.gen_range(-6.0..6.0);
            let s = rng.gen_range(0.0..3.0);
            let (g_quad, _, _) = scalar_components(w, mu, 0.1, s).unwrap();
            let diff = (g_quad - scalar_g_closed(w, mu, s)).norm();
            assert!(diff < 1e-8, "W={w} mu={mu} s={s}: diff {diff:.2e}");
        }
    }

    #[test]
    fn dual_quadrature_routes_agree() {
        // W = 1, mu = 0, kT = 0.1, dtau = 0: both routes give gamma/4
        let (_, tilde, _) = scalar_components(1.0, 0.0, 0.1, 0.0).unwrap();
        let second = simpson_route(1.0, 0.0, 0.1, 0.0, Some(true));
        assert!((tilde - second).norm() < 1e-8);
        assert!((tilde - C64::new(0.25, 0.0)).norm() < 1e-8);

        for &(w, mu, kt, s) in &[(1.0, 5.0, 0.1, 0.7), (0.5, -2.0, 0.3, 1.9), (2.0, 1.0, 0.0, 0.4)] {
            let (g, tilde, bar) = scalar_components(w, mu, kt, s).unwrap();
            assert!((g - simpson_route(w, mu, kt, s, None)).norm() < 1e-8);
            assert!((tilde - simpson_route(w, mu, kt, s, Some(true))).norm() < 1e-8);
            assert!((bar - simpson_route(w, mu, kt, s, Some(false))).norm() < 1e-8);
        }
    }

    #[test]
    fn high_temperature_limit_halves_the_kernel() {
        // f -> 1/2 across the line, so g~ -> g/2; the residual is O(W/kT).
        let (g, tilde, _) = scalar_components(1.0, 0.0, 1e4, 0.1).unwrap();
        assert!((tilde - g * 0.5).norm() < 1e-3 * g.norm());
        // at dtau = 0 the Fermi deviation from 1/2 is odd around mu and
        // cancels exactly against the even Lorentzian
        let (g0, tilde0, _) = scalar_components(1.0, 0.0, 10.0, 0.0).unwrap();
        assert!((tilde0 - g0 * 0.5).norm() < 1e-9);
    }

    #[test]
    fn kernel_identity_and_symmetry() {
        let l = lead(0.6, 1.3, 4.0, 0.1);
        let grid = TimeGrid::from_step(0.0, 3.0, 0.05).unwrap();
        let table = tabulate_kernels(&l, &grid).unwrap();
        for k in 0..grid.len() {
            let defect = table.g_at(k as isize) - table.gtilde_at(k as isize) - table.gbar_at(k as isize);
            assert!(max_abs(&defect) < 1e-10, "identity defect at k={k}");
        }
        // Hermitian stationarity at random differences
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let s = rng.gen_range(0.0..2.0);
            let plus = kernel_gtilde(&l, s).unwrap();
            let minus = kernel_gtilde(&l, -s).unwrap();
            assert!(max_abs(&(minus - plus.adjoint())) < 1e-12);
        }
    }

    #[test]
    fn table_matches_closed_form_and_zero_coupling() {
        let l = lead(0.7, 1.0, 5.0, 0.1);
        let grid = TimeGrid::from_step(0.0, 2.0, 0.02).unwrap();
        let table = tabulate_kernels(&l, &grid).unwrap();
        let mut worst = 0.0f64;
        for k in 0..grid.len() {
            let diff = max_abs(&(table.g_at(k as isize) - kernel_g(&l, grid.node(k))));
            worst = worst.max(diff);
        }
        assert!(worst < 1e-9, "worst table-vs-closed-form deviation {worst:.2e}");

        let z = tabulate_kernels(&lead(0.0, 1.0, 5.0, 0.1), &grid).unwrap();
        for k in 0..grid.len() {
            assert_eq!(max_abs(&z.g_at(k as isize)), 0.0);
            assert_eq!(max_abs(&z.gtilde_at(k as isize)), 0.0);
        }
    }

    #[test]
    fn two_node_table_reproduces_zero_difference_values() {
        let l = lead(0.5, 2.0, -1.0, 0.2);
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let table = tabulate_kernels(&l, &grid).unwrap();
        assert_eq!(table.len(), 2);
        assert!(max_abs(&(table.g_at(0) - kernel_g(&l, 0.0))) < 1e-9);
        let direct = kernel_gtilde(&l, 0.0).unwrap();
        assert!(max_abs(&(table.gtilde_at(0) - direct)) < 1e-14);
    }

    #[test]
    fn spectral_density_is_psd_at_random_energies() {
        let l = LeadSpec::new(
            Matrix2::new(0.2, 0.1, 0.1, 0.3),
            ReservoirParams::new(1.5, 2.0, 0.1),
        )
        .unwrap();
        let j = SpectralDensity { lead: &l };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let eps = rng.gen_range(-30.0..30.0);
            let m = j.value(eps);
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let lo = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
            assert!(lo >= -1e-12);
        }
    }

    #[test]
    fn zero_temperature_step_is_integrated_exactly() {
        // with kT = 0, g~ is the transform of the filled half-line only
        let (g, tilde, bar) = scalar_components(1.0, 0.0, 0.0, 0.5).unwrap();
        assert!((g - tilde - bar).norm() < 1e-14);
        let second = simpson_route(1.0, 0.0, 0.0, 0.5, Some(true));
        assert!((tilde - second).norm() < 1e-8);
    }

    #[test]
    fn scalar_table_reuse_rejects_other_leads() {
        let grid = TimeGrid::from_step(0.0, 1.0, 0.1).unwrap();
        let scalar = ScalarKernelTable::build(1.0, 5.0, 0.1, &grid).unwrap();
        let other = lead(0.3, 1.0, -5.0, 0.1);
        assert!(KernelTable::from_scalar(&other, &scalar).is_err());
        let same = lead(0.3, 1.0, 5.0, 0.1);
        assert!(KernelTable::from_scalar(&same, &scalar).is_ok());
    }
}
