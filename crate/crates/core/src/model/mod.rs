//! Physical parameter types shared by every other module.
//!
//! Conventions: a reference tunneling rate sets the unit system. All
//! energies (`eps`, `gamma`, `mu`, `kT`, `W`) are dimensionless multiples
//! of it, all times are multiples of its inverse, and `ħ = 1`.

pub mod config;

use crate::{C64, CMat2, Error, RMat2, Result};
use nalgebra::Matrix2;

/// Tolerance for positive-semidefiniteness checks on coupling matrices.
const PSD_TOL: f64 = 1e-12;

/// The 2x2 single-particle Hamiltonian of the double dot.
///
/// Diagonal entries are the dot level energies, off-diagonals the
/// inter-dot tunneling amplitude. Hermitian by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DotHamiltonian {
    eps: CMat2,
}

impl DotHamiltonian {
    /// Build from level energies and the (possibly complex) tunneling
    /// amplitude; the conjugate entry is filled in automatically.
    pub fn new(e11: f64, e22: f64, e12: C64) -> Self {
        let eps = Matrix2::new(C64::new(e11, 0.0), e12, e12.conj(), C64::new(e22, 0.0));
        DotHamiltonian { eps }
    }

    /// Validate an explicit matrix. Fails unless it is Hermitian to 1e-12.
    pub fn from_matrix(eps: CMat2) -> Result<Self> {
        let defect = crate::mat2::hermiticity_defect(&eps);
        let scale = crate::mat2::max_abs(&eps).max(1.0);
        if defect > 1e-12 * scale {
            return Err(Error::param(format!(
                "dot Hamiltonian must be Hermitian (defect {defect:.3e})"
            )));
        }
        // Symmetrize so downstream code can rely on exact Hermiticity.
        let h = (eps + eps.adjoint()) * C64::new(0.5, 0.0);
        Ok(DotHamiltonian { eps: h })
    }

    pub fn matrix(&self) -> &CMat2 {
        &self.eps
    }

    pub fn e11(&self) -> f64 {
        self.eps[(0, 0)].re
    }

    pub fn e22(&self) -> f64 {
        self.eps[(1, 1)].re
    }

    pub fn e12(&self) -> C64 {
        self.eps[(0, 1)]
    }

    pub fn e21(&self) -> C64 {
        self.eps[(1, 0)]
    }

    /// Level splitting of the isolated pair,
    /// `sqrt((e22 - e11)^2 + 4 |e12|^2)`.
    pub fn rabi_splitting(&self) -> f64 {
        let gap = self.e22() - self.e11();
        (gap * gap + 4.0 * self.e12().norm_sqr()).sqrt()
    }
}

/// Thermodynamic parameters of one reservoir: Lorentzian bandwidth,
/// chemical potential and temperature (as `k_B T`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirParams {
    pub bandwidth: f64,
    pub mu: f64,
    pub temperature: f64,
}

impl ReservoirParams {
    pub fn new(bandwidth: f64, mu: f64, temperature: f64) -> Self {
        ReservoirParams { bandwidth, mu, temperature }
    }
}

/// One electrode: the 2x2 coupling-strength matrix together with its
/// Lorentzian bandwidth, chemical potential and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadSpec {
    gamma: RMat2,
    pub bandwidth: f64,
    pub mu: f64,
    pub temperature: f64,
}

impl LeadSpec {
    /// Validates symmetry and positive-semidefiniteness of `gamma`,
    /// positivity of the bandwidth and non-negativity of the temperature.
    pub fn new(gamma: RMat2, params: ReservoirParams) -> Result<Self> {
        if (gamma[(0, 1)] - gamma[(1, 0)]).abs() > 1e-12 {
            return Err(Error::param("coupling matrix must be symmetric"));
        }
        let (lo, _hi) = sym2_eigenvalues(&gamma);
        if lo < -PSD_TOL {
            return Err(Error::param(format!(
                "coupling matrix must be positive-semidefinite (eigenvalue {lo:.3e})"
            )));
        }
        if !(params.bandwidth > 0.0) {
            return Err(Error::param("bandwidth must be positive"));
        }
        if !(params.temperature >= 0.0) {
            return Err(Error::param("temperature must be non-negative"));
        }
        Ok(LeadSpec {
            gamma,
            bandwidth: params.bandwidth,
            mu: params.mu,
            temperature: params.temperature,
        })
    }

    pub fn gamma(&self) -> &RMat2 {
        &self.gamma
    }

    /// Eigenvalues of the coupling matrix, ascending.
    pub fn gamma_eigenvalues(&self) -> (f64, f64) {
        sym2_eigenvalues(&self.gamma)
    }

    pub fn is_decoupled(&self) -> bool {
        self.gamma.iter().all(|&g| g == 0.0)
    }
}

/// Eigenvalues of a symmetric 2x2 real matrix, ascending.
fn sym2_eigenvalues(m: &RMat2) -> (f64, f64) {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr - disc), 0.5 * (tr + disc))
}

/// How the two dots attach to the two electrodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Dot 1 couples to the left electrode only, dot 2 to the right only.
    Series,
    /// Both dots couple to both electrodes with a rank-1 coupling matrix.
    Parallel,
    /// Arbitrary positive-semidefinite coupling matrices.
    Custom,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Topology::Series => write!(f, "series"),
            Topology::Parallel => write!(f, "parallel"),
            Topology::Custom => write!(f, "custom"),
        }
    }
}

/// Complete device description: dot Hamiltonian plus both electrodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceConfig {
    pub dots: DotHamiltonian,
    pub left: LeadSpec,
    pub right: LeadSpec,
    pub topology: Topology,
}

impl DeviceConfig {
    pub fn leads(&self) -> [&LeadSpec; 2] {
        [&self.left, &self.right]
    }

    /// True when both coupling matrices vanish (isolated dots).
    pub fn is_decoupled(&self) -> bool {
        self.left.is_decoupled() && self.right.is_decoupled()
    }
}

/// Series configuration: the left electrode sees dot 1 with strength
/// `g_left`, the right electrode sees dot 2 with strength `g_right`.
pub fn make_series_config(
    g_left: f64,
    g_right: f64,
    dots: DotHamiltonian,
    left: ReservoirParams,
    right: ReservoirParams,
) -> Result<DeviceConfig> {
    check_coupling(g_left)?;
    check_coupling(g_right)?;
    let gl = Matrix2::new(g_left, 0.0, 0.0, 0.0);
    let gr = Matrix2::new(0.0, 0.0, 0.0, g_right);
    Ok(DeviceConfig {
        dots,
        left: LeadSpec::new(gl, left)?,
        right: LeadSpec::new(gr, right)?,
        topology: Topology::Series,
    })
}

/// Parallel configuration: each electrode couples to both dots with the
/// rank-1 matrix `[[g/2, g/2], [g/2, g/2]]` (off-diagonals equal to
/// `sqrt(g11 * g22)`).
pub fn make_parallel_config(
    g_left: f64,
    g_right: f64,
    dots: DotHamiltonian,
    left: ReservoirParams,
    right: ReservoirParams,
) -> Result<DeviceConfig> {
    check_coupling(g_left)?;
    check_coupling(g_right)?;
    let mat = |g: f64| {
        let d = g / 2.0;
        let c = (d * d).sqrt();
        Matrix2::new(d, c, c, d)
    };
    Ok(DeviceConfig {
        dots,
        left: LeadSpec::new(mat(g_left), left)?,
        right: LeadSpec::new(mat(g_right), right)?,
        topology: Topology::Parallel,
    })
}

/// Arbitrary (validated) coupling matrices.
pub fn make_custom_config(
    dots: DotHamiltonian,
    left: LeadSpec,
    right: LeadSpec,
) -> DeviceConfig {
    DeviceConfig { dots, left, right, topology: Topology::Custom }
}

fn check_coupling(g: f64) -> Result<()> {
    if g < 0.0 || !g.is_finite() {
        Err(Error::param(format!("coupling strength must be non-negative, got {g}")))
    } else {
        Ok(())
    }
}

/// Default dot Hamiltonian used by most scenarios: degenerate levels at
/// the reference rate with tunneling amplitude one half of it.
pub fn default_dots() -> DotHamiltonian {
    DotHamiltonian::new(1.0, 1.0, C64::new(0.5, 0.0))
}

/// Default left reservoir: unit bandwidth, bias +5, temperature 0.1.
pub fn default_left_reservoir() -> ReservoirParams {
    ReservoirParams::new(1.0, 5.0, 0.1)
}

/// Default right reservoir: unit bandwidth, bias -5, temperature 0.1.
pub fn default_right_reservoir() -> ReservoirParams {
    ReservoirParams::new(1.0, -5.0, 0.1)
}

/// Four equally spaced measurement times `0, tau, 2 tau, 3 tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSchedule {
    tau: f64,
}

impl MeasurementSchedule {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::param(format!(
                "measurement interval must be positive, got {tau}"
            )));
        }
        Ok(MeasurementSchedule { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn times(&self) -> [f64; 4] {
        [0.0, self.tau, 2.0 * self.tau, 3.0 * self.tau]
    }
}

/// Uniform time grid `t_k = t0 + k dt`, `k = 0 .. n-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_max: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("time grid needs at least two nodes"));
        }
        if !(t_max > t0) {
            return Err(Error::param("time grid must have t_max > t0"));
        }
        Ok(TimeGrid { t0, t_max, n })
    }

    /// Grid from a requested step; the step is adjusted so that the span
    /// divides evenly.
    pub fn from_step(t0: f64, t_max: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::param("time step must be positive"));
        }
        let steps = ((t_max - t0) / dt).round().max(1.0) as usize;
        TimeGrid::new(t0, t0 + steps as f64 * dt, steps + 1)
    }

    /// Grid starting at zero that carries all four measurement times of
    /// `schedule` on nodes, with the step chosen as close to `dt` as the
    /// snapping allows. Returns the grid and the four node indices.
    ///
    /// The interval is snapped to the nearest grid multiple; callers should
    /// read the realized interval back from the returned indices.
    pub fn for_schedule(schedule: &MeasurementSchedule, dt: f64) -> Result<(Self, [usize; 4])> {
        if !(dt > 0.0) {
            return Err(Error::param("time step must be positive"));
        }
        let m = (schedule.tau() / dt).round() as usize;
        if m == 0 {
            return Err(Error::param(format!(
                "measurement interval {} is below the grid resolution {}",
                schedule.tau(),
                dt
            )));
        }
        let n = 3 * m + 1;
        let grid = TimeGrid { t0: 0.0, t_max: (n - 1) as f64 * dt, n };
        Ok((grid, [0, m, 2 * m, 3 * m]))
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t0) / (self.n - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt()
    }

    /// Node index of a time that must lie on the grid (to 1e-9 relative).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let dt = self.dt();
        let k = ((t - self.t0) / dt).round();
        if k < 0.0 || k as usize >= self.n {
            return None;
        }
        let residual = (t - self.t0 - k * dt).abs();
        if residual <= 1e-9 * dt.max(t.abs()) {
            Some(k as usize)
        } else {
            None
        }
    }
}
