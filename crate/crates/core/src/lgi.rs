//! Leggett-Garg correlator assembly.
//!
//! The dichotomic observable is the charge parity of the second dot,
//! `Q = 2 n2 - 1`. Measurements at the four equally spaced times
//! `0, tau, 2 tau, 3 tau` give the pairwise correlators `C_ji` and the
//! combinations
//!
//! ```text
//! C3 = C21 + C32 - C31   (classical bound 1)
//! C4 = C21 + C32 + C43 - C41   (classical bound 2)
//! ```
//!
//! `Q(t_j) Q(t_i)` is not Hermitian, so each pairwise correlator is the
//! expectation of the symmetrized combination
//! `(Q(t_j) Q(t_i) + Q(t_i) Q(t_j))/2`. Writing `A = Q(t_j) Q(t_i)`, the
//! symmetrized expectation is `<A + A†>/2 = Re <A>`, so taking the real
//! part realizes the symmetrization.

use crate::closed::ClosedPropagator;
use crate::greens::{
    solve_noise_correlations, solve_retarded, CorrelationScope, NoiseCorrelation, RetardedGreen,
    SolverMethod,
};
use crate::kernels::tabulate_kernels;
use crate::model::{DeviceConfig, MeasurementSchedule, TimeGrid};
use crate::{C64, Error, Result};

/// Violation flags use this tolerance above the classical bounds so that
/// numerical noise is never reported as quantumness.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Which dynamics produces the correlators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Isolated dots, initial state `(|01> + |10>)/sqrt(2)`, analytic
    /// propagators.
    Closed,
    /// Reservoir-coupled dots, initial state `|01>`, Green's-function
    /// solution of the quantum Langevin equation.
    Open,
}

/// Per-interval record of the five pairwise correlators, the combined
/// quantities and their violation flags.
#[derive(Debug, Clone, Copy)]
pub struct LgiResult {
    pub tau: f64,
    pub c21: f64,
    pub c32: f64,
    pub c31: f64,
    pub c43: f64,
    pub c41: f64,
    pub c3: f64,
    pub c4: f64,
    pub violates_c3: bool,
    pub violates_c4: bool,
    pub tol: f64,
}

impl LgiResult {
    /// Assemble from the five pairwise correlators; the combinations are
    /// formed here so the arithmetic identities hold exactly.
    pub fn from_correlators(tau: f64, c21: f64, c32: f64, c31: f64, c43: f64, c41: f64) -> Self {
        let c3 = c21 + c32 - c31;
        let c4 = c21 + c32 + c43 - c41;
        LgiResult {
            tau,
            c21,
            c32,
            c31,
            c43,
            c41,
            c3,
            c4,
            violates_c3: c3 > 1.0 + VIOLATION_TOL,
            violates_c4: c4 > 2.0 + VIOLATION_TOL,
            tol: VIOLATION_TOL,
        }
    }
}

/// Two-time occupation correlator `<n2(t2) n2(t1)>` of the open system
/// for the initial dot state `|01>`, assembled from the retarded
/// propagator and the noise correlations (eight Wick terms).
///
/// Times must be grid nodes of the solved propagator, `t1 <= t2`.
pub fn two_time_n2_open(
    u: &RetardedGreen,
    noise: &NoiseCorrelation,
    t1: f64,
    t2: f64,
) -> Result<C64> {
    let grid = u.grid();
    let i1 = grid
        .index_of(t1)
        .ok_or_else(|| Error::param(format!("t1 = {t1} is not a grid node")))?;
    let i2 = grid
        .index_of(t2)
        .ok_or_else(|| Error::param(format!("t2 = {t2} is not a grid node")))?;
    if i1 > i2 {
        return Err(Error::param("two_time_n2_open needs t1 <= t2"));
    }
    Ok(two_time_n2_open_indexed(u, noise, i1, i2)?.0)
}

/// Same, by node index; also returns the occupations at both times.
fn two_time_n2_open_indexed(
    u: &RetardedGreen,
    noise: &NoiseCorrelation,
    i1: usize,
    i2: usize,
) -> Result<(C64, f64, f64)> {
    let pair = noise
        .pair(i1, i2)
        .ok_or_else(|| Error::param(format!("no noise entry for pair ({i1}, {i2})")))?;
    let v11 = noise
        .v(i1, i1)
        .ok_or_else(|| Error::param(format!("no equal-time noise entry at node {i1}")))?;
    let v22 = noise
        .v(i2, i2)
        .ok_or_else(|| Error::param(format!("no equal-time noise entry at node {i2}")))?;

    let u1 = u.at(i1);
    let u2 = u.at(i2);
    let (p1, q1) = (u1[(1, 0)], u1[(1, 1)]);
    let (p2, q2) = (u2[(1, 0)], u2[(1, 1)]);
    let v_11 = v11[(1, 1)]; // v22(t1, t1)
    let v_22 = v22[(1, 1)]; // v22(t2, t2)
    let v_12 = pair.v[(1, 1)]; // v22(t1, t2)
    let vbar_12 = pair.vbar[(1, 1)]; // vbar22(t1, t2)

    let nn = q2.conj() * q1 * p2 * p1.conj()
        + q2.norm_sqr() * q1.norm_sqr()
        + q2.norm_sqr() * v_11
        + q1.norm_sqr() * v_22
        + p2 * p1.conj() * v_12
        + q2.conj() * q1 * vbar_12.conj()
        + v_22 * v_11
        + v_12 * vbar_12.conj();

    let n1 = q1.norm_sqr() + v_11.re;
    let n2 = q2.norm_sqr() + v_22.re;
    Ok((nn, n1, n2))
}

/// Symmetrized correlator of `Q = 2 n2 - 1` from a two-time occupation
/// correlator and the two mean occupations:
/// `Re(4 <n2(t2) n2(t1)>) - 2 <n2(t2)> - 2 <n2(t1)> + 1`.
pub fn q_correlator(nn: C64, n2_later: f64, n2_earlier: f64) -> f64 {
    4.0 * nn.re - 2.0 * n2_later - 2.0 * n2_earlier + 1.0
}

/// Options for the open-pipeline solver.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub dt: f64,
    pub method: SolverMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { dt: 0.01, method: SolverMethod::ProductIntegration }
    }
}

/// Compute the LGI correlators for one measurement interval.
///
/// The closed pipeline evaluates the analytic propagators directly; the
/// open pipeline builds a grid over `[0, 3 tau]` with the four times on
/// nodes, tabulates the kernels, solves for `u` and the required noise
/// entries, and assembles the correlators. When both couplings vanish
/// the open pipeline reduces to exact closed evolution of `|01>` and is
/// evaluated analytically.
pub fn compute_lgi(
    config: &DeviceConfig,
    schedule: &MeasurementSchedule,
    pipeline: Pipeline,
    options: &SolveOptions,
) -> Result<LgiResult> {
    match pipeline {
        Pipeline::Closed => Ok(closed_lgi(config, schedule.tau())),
        Pipeline::Open => {
            if config.is_decoupled() {
                return Ok(decoupled_open_lgi(config, schedule.tau()));
            }
            let (grid, idx) = TimeGrid::for_schedule(schedule, options.dt)?;
            let tables: Vec<_> = config
                .leads()
                .iter()
                .map(|l| tabulate_kernels(l, &grid))
                .collect::<Result<_>>()?;
            let u = solve_retarded(config, &grid, &tables, options.method)?;
            let pairs = measurement_pairs(&idx);
            let noise = solve_noise_correlations(
                config,
                &grid,
                &tables,
                &u,
                CorrelationScope::Pairs(pairs),
            )?;
            open_lgi_from_solution(&u, &noise, &idx)
        }
    }
}

/// The noise entries needed for the five pairwise correlators at
/// measurement nodes `idx`.
pub fn measurement_pairs(idx: &[usize; 4]) -> Vec<(usize, usize)> {
    let mut pairs = vec![
        (idx[0], idx[1]),
        (idx[1], idx[2]),
        (idx[0], idx[2]),
        (idx[2], idx[3]),
        (idx[0], idx[3]),
        (idx[0], idx[0]),
        (idx[1], idx[1]),
        (idx[2], idx[2]),
        (idx[3], idx[3]),
    ];
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Assemble the five correlators from a solved open system.
pub fn open_lgi_from_solution(
    u: &RetardedGreen,
    noise: &NoiseCorrelation,
    idx: &[usize; 4],
) -> Result<LgiResult> {
    let tau = u.grid().dt() * (idx[1] - idx[0]) as f64;
    let q = |i: usize, j: usize| -> Result<f64> {
        let (nn, n_early, n_late) = two_time_n2_open_indexed(u, noise, idx[i], idx[j])?;
        Ok(q_correlator(nn, n_late, n_early))
    };
    Ok(LgiResult::from_correlators(tau, q(0, 1)?, q(1, 2)?, q(0, 2)?, q(2, 3)?, q(0, 3)?))
}

/// Closed pipeline: analytic correlators for the superposition state.
fn closed_lgi(config: &DeviceConfig, tau: f64) -> LgiResult {
    let prop = ClosedPropagator::new(&config.dots);
    let times = [0.0, tau, 2.0 * tau, 3.0 * tau];
    let q = |i: usize, j: usize| -> f64 {
        let nn = crate::closed::closed_two_time_n2_with(&prop, times[i], times[j]);
        q_correlator(
            nn,
            crate::closed::closed_n2_with(&prop, times[j]),
            crate::closed::closed_n2_with(&prop, times[i]),
        )
    };
    LgiResult::from_correlators(tau, q(0, 1), q(1, 2), q(0, 2), q(2, 3), q(0, 3))
}

/// Open pipeline with both couplings zero: `u` is the closed propagator,
/// the noise vanishes, and the `|01>` correlators are evaluated exactly.
fn decoupled_open_lgi(config: &DeviceConfig, tau: f64) -> LgiResult {
    let prop = ClosedPropagator::new(&config.dots);
    let times = [0.0, tau, 2.0 * tau, 3.0 * tau];
    let q = |i: usize, j: usize| -> f64 {
        let w1 = prop.at(times[i]);
        let w2 = prop.at(times[j]);
        let (p1, q1) = (w1[(1, 0)], w1[(1, 1)]);
        let (p2, q2) = (w2[(1, 0)], w2[(1, 1)]);
        let nn = q2.conj() * q1 * p2 * p1.conj() + q2.norm_sqr() * q1.norm_sqr();
        q_correlator(nn, q2.norm_sqr(), q1.norm_sqr())
    };
    LgiResult::from_correlators(tau, q(0, 1), q(1, 2), q(0, 2), q(2, 3), q(0, 3))
}

/// Classical three-time bound machinery: given a joint distribution over
/// the eight outcomes `(Q3, Q2, Q1)` with each `Q = ±1`, compute `C3`
/// both from the pairwise-correlator sums and from the two "flip"
/// probabilities, and check that the two routes agree.
///
/// Outcome order: index `b2 b1 b0` in binary with bit 2 for `Q3`, bit 1
/// for `Q2`, bit 0 for `Q1`, and a set bit meaning `Q = +1`. So
/// `p[0b111] = P(+,+,+)`, `p[0b010] = P(-,+,-)`, and so on.
pub fn classical_bound_check(p: &[f64; 8]) -> Result<f64> {
    let total: f64 = p.iter().sum();
    if p.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::param(format!(
            "need a normalized joint distribution (sum = {total}, entries must be non-negative)"
        )));
    }
    let sign = |bits: usize, bit: usize| -> f64 {
        if bits & (1 << bit) != 0 {
            1.0
        } else {
            -1.0
        }
    };
    let (mut c21, mut c32, mut c31) = (0.0, 0.0, 0.0);
    for (bits, &prob) in p.iter().enumerate() {
        let (q3, q2, q1) = (sign(bits, 2), sign(bits, 1), sign(bits, 0));
        c21 += q2 * q1 * prob;
        c32 += q3 * q2 * prob;
        c31 += q3 * q1 * prob;
    }
    let via_sums = c21 + c32 - c31;
    // the same quantity through the two sign-alternating outcomes
    let via_flips = 1.0 - 4.0 * (p[0b101] + p[0b010]);
    if (via_sums - via_flips).abs() > 1e-12 {
        return Err(Error::numeric(format!(
            "classical bound routes disagree: {via_sums} vs {via_flips}"
        )));
    }
    Ok(via_sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::occupation_n2;
    use crate::model::{
        default_dots, default_left_reservoir, default_right_reservoir, make_series_config,
        DotHamiltonian,
    };
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn series(g: f64) -> DeviceConfig {
        make_series_config(g, g, default_dots(), default_left_reservoir(), default_right_reservoir())
            .unwrap()
    }

    #[test]
    fn arithmetic_identities_hold_exactly() {
        let r = LgiResult::from_correlators(0.7, 0.3, -0.2, 0.9, 0.5, -0.1);
        assert_eq!(r.c3, 0.3 + (-0.2) - 0.9);
        assert_eq!(r.c4, 0.3 + (-0.2) + 0.5 - (-0.1));
        assert!(!r.violates_c3);
        assert!(!r.violates_c4);

        let v = LgiResult::from_correlators(0.4, 0.9, 0.9, 0.6, 0.9, -0.4);
        assert_eq!(v.c3, 0.9 + 0.9 - 0.6);
        assert_eq!(v.c4, 0.9 + 0.9 + 0.9 + 0.4);
        assert!(v.violates_c3);
        assert!(v.violates_c4);
    }

    #[test]
    fn q_correlator_reference_arithmetic() {
        // coincident times on a projector: nn = n2, correlator = 1
        assert!((q_correlator(C64::new(0.37, 0.0), 0.37, 0.37) - 1.0).abs() < 1e-15);
        // plain arithmetic spot value
        assert!((q_correlator(C64::new(0.25, 0.0), 0.5, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn closed_pipeline_degenerate_dots_is_cosine_combination() {
        // degenerate dots with e12 = 0.5 give C_ji = cos(t_j - t_i), so
        // C3(tau) = 2 cos tau - cos 2 tau, peaking at 1.5 at tau = pi/3
        let config = series(0.0);
        let opts = SolveOptions::default();
        for &tau in &[0.3, 0.7, 1.3, 2.9] {
            let r = compute_lgi(
                &config,
                &MeasurementSchedule::new(tau).unwrap(),
                Pipeline::Closed,
                &opts,
            )
            .unwrap();
            let expect = 2.0 * tau.cos() - (2.0 * tau).cos();
            assert!((r.c3 - expect).abs() < 1e-12, "tau = {tau}");
            let expect4 = 3.0 * tau.cos() - (3.0 * tau).cos();
            assert!((r.c4 - expect4).abs() < 1e-12);
        }
        let peak = compute_lgi(
            &config,
            &MeasurementSchedule::new(std::f64::consts::FRAC_PI_3).unwrap(),
            Pipeline::Closed,
            &opts,
        )
        .unwrap();
        assert!((peak.c3 - 1.5).abs() < 1e-12);
        assert!(peak.violates_c3);
    }

    #[test]
    fn closed_pipeline_periodicity_random_hamiltonians() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let opts = SolveOptions::default();
        for _ in 0..10 {
            let dots = DotHamiltonian::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                C64::new(rng.gen_range(0.2..1.5), 0.0),
            );
            let config = make_series_config(
                0.0,
                0.0,
                dots,
                default_left_reservoir(),
                default_right_reservoir(),
            )
            .unwrap();
            let period = 2.0 * std::f64::consts::PI / dots.rabi_splitting();
            let tau = rng.gen_range(0.1..3.0);
            let a = compute_lgi(
                &config,
                &MeasurementSchedule::new(tau).unwrap(),
                Pipeline::Closed,
                &opts,
            )
            .unwrap();
            let b = compute_lgi(
                &config,
                &MeasurementSchedule::new(tau + period).unwrap(),
                Pipeline::Closed,
                &opts,
            )
            .unwrap();
            assert!((a.c3 - b.c3).abs() < 1e-6, "period {period}, tau {tau}");
        }
    }

    #[test]
    fn coincidence_limit_both_pipelines() {
        let opts = SolveOptions::default();
        let sched = MeasurementSchedule::new(opts.dt).unwrap();
        for config in [series(0.0), series(0.3)] {
            for pipeline in [Pipeline::Closed, Pipeline::Open] {
                let r = compute_lgi(&config, &sched, pipeline, &opts).unwrap();
                assert!(
                    (r.c3 - 1.0).abs() < 5.0 * opts.dt,
                    "C3 = {} at tau = dt for {pipeline:?}",
                    r.c3
                );
                assert!((r.c4 - 2.0).abs() < 5.0 * opts.dt);
            }
        }
    }

    #[test]
    fn open_pipeline_gamma_zero_matches_closed_01_dynamics() {
        // with zero coupling the open pipeline evolves |01> unitarily
        let config = series(0.0);
        let r = compute_lgi(
            &config,
            &MeasurementSchedule::new(0.9).unwrap(),
            Pipeline::Open,
            &SolveOptions::default(),
        )
        .unwrap();
        let w = |t: f64| crate::closed::closed_propagator(&config.dots, t);
        let q = |t1: f64, t2: f64| -> f64 {
            let (w1, w2) = (w(t1), w(t2));
            let (p1, q1) = (w1[(1, 0)], w1[(1, 1)]);
            let (p2, q2) = (w2[(1, 0)], w2[(1, 1)]);
            let nn = q2.conj() * q1 * p2 * p1.conj() + q2.norm_sqr() * q1.norm_sqr();
            q_correlator(nn, q2.norm_sqr(), q1.norm_sqr())
        };
        let expect = q(0.0, 0.9) + q(0.9, 1.8) - q(0.0, 1.8);
        assert!((r.c3 - expect).abs() < 1e-12);
    }

    #[test]
    fn open_pipeline_solved_and_decoupled_paths_agree_as_gamma_vanishes() {
        // tiny but nonzero coupling must land close to the analytic
        // decoupled path (continuity of the pipeline in gamma)
        let opts = SolveOptions::default();
        let sched = MeasurementSchedule::new(1.0).unwrap();
        let weak = compute_lgi(&series(1e-4), &sched, Pipeline::Open, &opts).unwrap();
        let zero = compute_lgi(&series(0.0), &sched, Pipeline::Open, &opts).unwrap();
        assert!((weak.c3 - zero.c3).abs() < 5e-3);
    }

    #[test]
    fn classical_bound_reference_distributions() {
        // flip-free distribution: C3 = 1
        let mut p = [0.0; 8];
        p[0b111] = 0.4;
        p[0b000] = 0.35;
        p[0b100] = 0.25;
        assert!((classical_bound_check(&p).unwrap() - 1.0).abs() < 1e-12);

        // all weight on the alternating outcomes: C3 = -3
        let mut p = [0.0; 8];
        p[0b101] = 0.6;
        p[0b010] = 0.4;
        assert!((classical_bound_check(&p).unwrap() + 3.0).abs() < 1e-12);

        // uniform distribution: C3 = 0
        let p = [0.125; 8];
        assert!(classical_bound_check(&p).unwrap().abs() < 1e-12);

        // non-normalized input rejected
        let p = [0.2; 8];
        assert!(classical_bound_check(&p).is_err());
    }

    #[test]
    fn classical_sampler_stays_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..1000 {
            let mut p = [0.0f64; 8];
            let mut total = 0.0;
            for slot in p.iter_mut() {
                *slot = rng.gen_range(0.0..1.0);
                total += *slot;
            }
            for slot in p.iter_mut() {
                *slot /= total;
            }
            let c3 = classical_bound_check(&p).unwrap();
            assert!((-3.0 - 1e-12..=1.0 + 1e-12).contains(&c3), "C3 = {c3}");
        }
    }

    #[test]
    fn off_grid_times_are_rejected() {
        let config = series(0.3);
        let opts = SolveOptions::default();
        let sched = MeasurementSchedule::new(0.5).unwrap();
        let (grid, idx) = TimeGrid::for_schedule(&sched, opts.dt).unwrap();
        let tables: Vec<_> = config
            .leads()
            .iter()
            .map(|l| tabulate_kernels(l, &grid).unwrap())
            .collect();
        let u = solve_retarded(&config, &grid, &tables, opts.method).unwrap();
        let noise = solve_noise_correlations(
            &config,
            &grid,
            &tables,
            &u,
            CorrelationScope::Pairs(measurement_pairs(&idx)),
        )
        .unwrap();
        assert!(two_time_n2_open(&u, &noise, 0.0, 0.5).is_ok());
        assert!(matches!(
            two_time_n2_open(&u, &noise, 0.0, 0.5034),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            two_time_n2_open(&u, &noise, 1.0, 0.5),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn open_two_time_initial_value() {
        let config = series(0.2);
        let opts = SolveOptions::default();
        let sched = MeasurementSchedule::new(0.5).unwrap();
        let (grid, idx) = TimeGrid::for_schedule(&sched, opts.dt).unwrap();
        let tables: Vec<_> = config
            .leads()
            .iter()
            .map(|l| tabulate_kernels(l, &grid).unwrap())
            .collect();
        let u = solve_retarded(&config, &grid, &tables, opts.method).unwrap();
        let noise = solve_noise_correlations(
            &config,
            &grid,
            &tables,
            &u,
            CorrelationScope::Pairs(measurement_pairs(&idx)),
        )
        .unwrap();
        // dot 2 occupied at t = 0: <n2(0) n2(0)> = 1
        let nn = two_time_n2_open(&u, &noise, 0.0, 0.0).unwrap();
        assert!((nn - C64::new(1.0, 0.0)).norm() < 1e-12);
        // <n2(t) n2(0)> = <n2(t)> since n2(0) acts on its eigenstate
        let nn = two_time_n2_open(&u, &noise, 0.0, 0.5).unwrap();
        let n = occupation_n2(&u, &noise, idx[1]).unwrap();
        assert!((nn.re - n).abs() < 1e-12);
        assert!(nn.im.abs() < 1e-12);
    }
}
