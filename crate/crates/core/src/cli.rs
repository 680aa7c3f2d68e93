//! Scenario runner behind the command-line front end: tau sweeps over
//! the closed and open pipelines, named parameter presets, CSV output
//! and the oracle cross-check.

use crate::greens::{
    dump_traces, solve_noise_correlations, solve_retarded, CorrelationScope, SolverMethod,
};
use crate::kernels::{KernelTable, ScalarKernelTable};
use crate::lgi::{self, LgiResult, Pipeline, SolveOptions};
use crate::model::config::Scenario;
use crate::model::{
    default_dots, make_parallel_config, make_series_config, DeviceConfig, DotHamiltonian,
    MeasurementSchedule, ReservoirParams, TimeGrid,
};
use crate::oracle;
use crate::{C64, Error, Result};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Agreement threshold for the oracle cross-check on `C3`.
pub const ORACLE_THRESHOLD: f64 = 3e-2;

/// One tau sweep: which correlator, which device, which intervals.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub tau_values: Vec<f64>,
    pub scenario: Scenario,
    pub config: DeviceConfig,
    pub dt: f64,
    pub out: PathBuf,
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.tau_values.is_empty() {
            return Err(Error::param("sweep needs at least one tau value"));
        }
        let mut prev = 0.0;
        for &tau in &self.tau_values {
            if !(tau > 0.0) {
                return Err(Error::param(format!("tau values must be positive, got {tau}")));
            }
            if tau < prev {
                return Err(Error::param("tau values must be sorted ascending"));
            }
            prev = tau;
        }
        if !(self.dt > 0.0) {
            return Err(Error::param("dt must be positive"));
        }
        Ok(())
    }
}

/// Run one sweep and return a row per tau.
///
/// Open scenarios share one grid over `[0, 3 max(tau)]`, one kernel
/// tabulation per distinct reservoir, one propagator solve and one
/// noise-correlation pass; requested intervals are snapped to grid
/// multiples and reported as realized.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<LgiResult>> {
    spec.validate()?;
    if !spec.scenario.is_open() {
        return spec
            .tau_values
            .iter()
            .map(|&tau| {
                lgi::compute_lgi(
                    &spec.config,
                    &MeasurementSchedule::new(tau)?,
                    Pipeline::Closed,
                    &SolveOptions::default(),
                )
            })
            .collect();
    }
    if spec.config.is_decoupled() {
        return spec
            .tau_values
            .iter()
            .map(|&tau| {
                lgi::compute_lgi(
                    &spec.config,
                    &MeasurementSchedule::new(tau)?,
                    Pipeline::Open,
                    &SolveOptions { dt: spec.dt, ..Default::default() },
                )
            })
            .collect();
    }

    let solution = solve_open_sweep(&spec.config, &spec.tau_values, spec.dt, false)?;
    // rows are independent given the shared read-only solution
    use rayon::prelude::*;
    solution
        .measurement_indices
        .par_iter()
        .map(|idx| lgi::open_lgi_from_solution(&solution.u, &solution.noise, idx))
        .collect()
}

/// Shared-grid open-pipeline solution for a set of intervals.
pub(crate) struct OpenSweepSolution {
    pub u: crate::greens::RetardedGreen,
    pub noise: crate::greens::NoiseCorrelation,
    pub measurement_indices: Vec<[usize; 4]>,
}

pub(crate) fn solve_open_sweep(
    config: &DeviceConfig,
    tau_values: &[f64],
    dt: f64,
    with_diagonal: bool,
) -> Result<OpenSweepSolution> {
    let mut steps = Vec::with_capacity(tau_values.len());
    for &tau in tau_values {
        let m = (tau / dt).round() as usize;
        if m == 0 {
            return Err(Error::param(format!(
                "tau = {tau} is below the grid resolution dt = {dt}"
            )));
        }
        steps.push(m);
    }
    let m_max = *steps.iter().max().expect("non-empty");
    let grid = TimeGrid::new(0.0, (3 * m_max) as f64 * dt, 3 * m_max + 1)?;
    let tables = tabulate_shared(config, &grid)?;
    let u = solve_retarded(config, &grid, &tables, SolverMethod::ProductIntegration)?;

    let measurement_indices: Vec<[usize; 4]> =
        steps.iter().map(|&m| [0, m, 2 * m, 3 * m]).collect();
    let mut pairs: Vec<(usize, usize)> = measurement_indices
        .iter()
        .flat_map(|idx| lgi::measurement_pairs(idx))
        .collect();
    if with_diagonal {
        pairs.extend((0..grid.len()).map(|i| (i, i)));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let noise =
        solve_noise_correlations(config, &grid, &tables, &u, CorrelationScope::Pairs(pairs))?;
    Ok(OpenSweepSolution { u, noise, measurement_indices })
}

/// Tabulate kernels for both leads, computing each distinct
/// (bandwidth, mu, temperature) frequency integral only once.
fn tabulate_shared(config: &DeviceConfig, grid: &TimeGrid) -> Result<Vec<KernelTable>> {
    let mut scalars: BTreeMap<(u64, u64, u64), ScalarKernelTable> = BTreeMap::new();
    let mut tables = Vec::with_capacity(2);
    for lead in config.leads() {
        if lead.is_decoupled() {
            tables.push(crate::kernels::tabulate_kernels(lead, grid)?);
            continue;
        }
        let key = (lead.bandwidth.to_bits(), lead.mu.to_bits(), lead.temperature.to_bits());
        if !scalars.contains_key(&key) {
            scalars.insert(
                key,
                ScalarKernelTable::build(lead.bandwidth, lead.mu, lead.temperature, grid)?,
            );
        }
        tables.push(KernelTable::from_scalar(lead, &scalars[&key])?);
    }
    Ok(tables)
}

/// Write sweep rows as CSV. C3 scenarios carry the three-time columns,
/// C4 scenarios additionally the four-time ones; the `violates` flag
/// refers to the scenario's own inequality. Values use 12 significant
/// digits so reruns are byte-identical.
pub fn write_sweep_csv<W: Write>(out: &mut W, scenario: Scenario, rows: &[LgiResult]) -> Result<()> {
    let fmt = |x: f64| format!("{x:.11e}");
    if scenario.is_c4() {
        writeln!(out, "tau,C21,C32,C31,C43,C41,C3,C4,violates")?;
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                fmt(r.tau),
                fmt(r.c21),
                fmt(r.c32),
                fmt(r.c31),
                fmt(r.c43),
                fmt(r.c41),
                fmt(r.c3),
                fmt(r.c4),
                r.violates_c4
            )?;
        }
    } else {
        writeln!(out, "tau,C21,C32,C31,C3,violates")?;
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt(r.tau),
                fmt(r.c21),
                fmt(r.c32),
                fmt(r.c31),
                fmt(r.c3),
                r.violates_c3
            )?;
        }
    }
    Ok(())
}

/// Run a sweep and write its CSV file.
pub fn run_sweep_to_file(spec: &SweepSpec) -> Result<()> {
    let rows = run_sweep(spec)?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(&spec.out)?);
    write_sweep_csv(&mut file, spec.scenario, &rows)?;
    Ok(())
}

/// Run an open sweep, write its CSV and a propagator/occupation trace
/// dump alongside.
pub fn run_sweep_with_traces(spec: &SweepSpec, trace_path: &Path) -> Result<()> {
    if !spec.scenario.is_open() {
        return Err(Error::param("trace dumps need an open scenario"));
    }
    if spec.config.is_decoupled() {
        return Err(Error::param("trace dumps need at least one coupled lead"));
    }
    spec.validate()?;
    let solution = solve_open_sweep(&spec.config, &spec.tau_values, spec.dt, true)?;
    let rows: Vec<LgiResult> = solution
        .measurement_indices
        .iter()
        .map(|idx| lgi::open_lgi_from_solution(&solution.u, &solution.noise, idx))
        .collect::<Result<_>>()?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(&spec.out)?);
    write_sweep_csv(&mut file, spec.scenario, &rows)?;
    let trace = std::io::BufWriter::new(std::fs::File::create(trace_path)?);
    dump_traces(trace, &solution.u, &solution.noise)?;
    Ok(())
}

/// One labeled curve of a preset.
#[derive(Debug, Clone)]
pub struct PresetCurve {
    pub label: String,
    pub scenario: Scenario,
    pub config: DeviceConfig,
    pub tau_values: Vec<f64>,
}

/// Names and one-line descriptions of the built-in presets.
pub fn preset_names() -> Vec<(&'static str, &'static str)> {
    vec![
        ("fig2a", "closed C3, inter-dot coupling sweep {0.3, 0.5, 1.0}"),
        ("fig2b", "closed C3, second-level detuning sweep {0.5, 1.0, 1.5, 2.0}"),
        ("fig3a", "closed C4, inter-dot coupling sweep {0.3, 0.5, 1.0}"),
        ("fig3b", "closed C4, second-level detuning sweep {0.5, 1.0, 1.5, 2.0}"),
        ("fig4a", "open series C3, coupling sweep {0.2 .. 1.0}, W = 1"),
        ("fig4b", "open series C3, bandwidth sweep {0.5 .. 3.0}, coupling 0.3"),
        ("fig5a", "open series C4, coupling sweep {0.2 .. 1.0}, W = 1"),
        ("fig5b", "open series C4, bandwidth sweep {0.5 .. 3.0}, coupling 0.3"),
        ("fig6a", "open parallel C3, coupling sweep {0.2 .. 1.0}, W = 1"),
        ("fig6b", "open parallel C3, bandwidth sweep {0.5 .. 3.0}, coupling 0.3"),
        ("fig7a", "open parallel C4, coupling sweep {0.2 .. 1.0}, W = 1"),
        ("fig7b", "open parallel C4, bandwidth sweep {0.5 .. 3.0}, coupling 0.3"),
        ("fig8", "series vs parallel at coupling 0.3: C3 and C4"),
    ]
}

fn closed_taus() -> Vec<f64> {
    (1..=320).map(|i| 0.05 * i as f64).collect()
}

fn open_taus() -> Vec<f64> {
    (1..=80).map(|i| 0.1 * i as f64).collect()
}

fn biased_reservoirs(w: f64) -> (ReservoirParams, ReservoirParams) {
    (ReservoirParams::new(w, 5.0, 0.1), ReservoirParams::new(w, -5.0, 0.1))
}

/// Expand a preset name into its labeled curves.
pub fn preset(name: &str) -> Result<Vec<PresetCurve>> {
    let closed_cfg = |dots: DotHamiltonian| -> Result<DeviceConfig> {
        let (l, r) = biased_reservoirs(1.0);
        make_series_config(0.0, 0.0, dots, l, r)
    };
    let series_cfg = |g: f64, w: f64| -> Result<DeviceConfig> {
        let (l, r) = biased_reservoirs(w);
        make_series_config(g, g, default_dots(), l, r)
    };
    let parallel_cfg = |g: f64, w: f64| -> Result<DeviceConfig> {
        let (l, r) = biased_reservoirs(w);
        make_parallel_config(g, g, default_dots(), l, r)
    };

    // inter-dot coupling values are not printed in the source captions;
    // this set brackets the captioned fixed value 0.5
    let e12_sweep = [0.3, 0.5, 1.0];
    let e22_sweep = [0.5, 1.0, 1.5, 2.0];
    let coupling_sweep = [0.2, 0.4, 0.6, 0.8, 1.0];
    let bandwidth_sweep = [0.5, 1.0, 1.5, 2.0, 3.0];

    let mut curves = Vec::new();
    match name {
        "fig2a" | "fig3a" => {
            let scenario = if name == "fig3a" { Scenario::ClosedC4 } else { Scenario::ClosedC3 };
            for &e12 in &e12_sweep {
                curves.push(PresetCurve {
                    label: format!("e12_{e12}"),
                    scenario,
                    config: closed_cfg(DotHamiltonian::new(1.0, 1.0, C64::new(e12, 0.0)))?,
                    tau_values: closed_taus(),
                });
            }
        }
        "fig2b" | "fig3b" => {
            let scenario = if name == "fig3b" { Scenario::ClosedC4 } else { Scenario::ClosedC3 };
            for &e22 in &e22_sweep {
                curves.push(PresetCurve {
                    label: format!("e22_{e22}"),
                    scenario,
                    config: closed_cfg(DotHamiltonian::new(1.0, e22, C64::new(0.5, 0.0)))?,
                    tau_values: closed_taus(),
                });
            }
        }
        "fig4a" | "fig5a" => {
            let scenario = if name == "fig5a" { Scenario::OpenC4 } else { Scenario::OpenC3 };
            for &g in &coupling_sweep {
                curves.push(PresetCurve {
                    label: format!("g{g}"),
                    scenario,
                    config: series_cfg(g, 1.0)?,
                    tau_values: open_taus(),
                });
            }
        }
        "fig4b" | "fig5b" => {
            let scenario = if name == "fig5b" { Scenario::OpenC4 } else { Scenario::OpenC3 };
            for &w in &bandwidth_sweep {
                curves.push(PresetCurve {
                    label: format!("W{w}"),
                    scenario,
                    config: series_cfg(0.3, w)?,
                    tau_values: open_taus(),
                });
            }
        }
        "fig6a" | "fig7a" => {
            let scenario = if name == "fig7a" { Scenario::OpenC4 } else { Scenario::OpenC3 };
            for &g in &coupling_sweep {
                curves.push(PresetCurve {
                    label: format!("g{g}"),
                    scenario,
                    config: parallel_cfg(g, 1.0)?,
                    tau_values: open_taus(),
                });
            }
        }
        "fig6b" | "fig7b" => {
            let scenario = if name == "fig7b" { Scenario::OpenC4 } else { Scenario::OpenC3 };
            for &w in &bandwidth_sweep {
                curves.push(PresetCurve {
                    label: format!("W{w}"),
                    scenario,
                    config: parallel_cfg(0.3, w)?,
                    tau_values: open_taus(),
                });
            }
        }
        "fig8" => {
            for (topo_label, cfg) in [("series", series_cfg(0.3, 1.0)?), ("parallel", parallel_cfg(0.3, 1.0)?)] {
                for (scen_label, scenario) in [("c3", Scenario::OpenC3), ("c4", Scenario::OpenC4)] {
                    curves.push(PresetCurve {
                        label: format!("{topo_label}_{scen_label}"),
                        scenario,
                        config: cfg,
                        tau_values: open_taus(),
                    });
                }
            }
        }
        other => {
            return Err(Error::param(format!(
                "unknown preset '{other}' (see `presets` for the list)"
            )))
        }
    }
    Ok(curves)
}

/// Output path for one curve of a multi-curve preset: the curve label is
/// appended to the file stem.
pub fn curve_path(base: &Path, label: &str, multi: bool) -> PathBuf {
    if !multi {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_{label}.{ext}"))
}

/// Run every curve of a preset, one CSV per curve. Returns the written
/// paths.
pub fn run_preset(name: &str, out: &Path, dt: f64) -> Result<Vec<PathBuf>> {
    let curves = preset(name)?;
    let multi = curves.len() > 1;
    let mut written = Vec::new();
    for curve in &curves {
        let path = curve_path(out, &curve.label, multi);
        let spec = SweepSpec {
            tau_values: curve.tau_values.clone(),
            scenario: curve.scenario,
            config: curve.config,
            dt,
            out: path.clone(),
        };
        run_sweep_to_file(&spec)?;
        written.push(path);
    }
    Ok(written)
}

/// One row of the oracle cross-check report.
#[derive(Debug, Clone, Copy)]
pub struct OracleCheckRow {
    pub tau: f64,
    pub c3_negf: f64,
    pub c3_oracle: f64,
    pub delta: f64,
    pub within_validity: bool,
    pub pass: bool,
}

/// Compare the Green's-function pipeline against the finite-bath oracle
/// at the given intervals.
pub fn run_oracle_check(
    config: &DeviceConfig,
    tau_values: &[f64],
    modes: usize,
    span: f64,
    dt: f64,
) -> Result<Vec<OracleCheckRow>> {
    if tau_values.is_empty() {
        return Err(Error::param("oracle check needs at least one tau value"));
    }
    let bath = oracle::build_bath(config, modes, span)?;
    let negf: Vec<LgiResult> = if config.is_decoupled() {
        tau_values
            .iter()
            .map(|&tau| {
                lgi::compute_lgi(
                    config,
                    &MeasurementSchedule::new(tau)?,
                    Pipeline::Open,
                    &SolveOptions { dt, ..Default::default() },
                )
            })
            .collect::<Result<_>>()?
    } else {
        let solution = solve_open_sweep(config, tau_values, dt, false)?;
        solution
            .measurement_indices
            .iter()
            .map(|idx| lgi::open_lgi_from_solution(&solution.u, &solution.noise, idx))
            .collect::<Result<_>>()?
    };
    let window = bath.validity_window();
    let rows = if config.is_decoupled() {
        // no bath modes: the oracle is the exact closed evolution
        negf.iter()
            .map(|r| {
                let sched = [0.0, r.tau, 2.0 * r.tau, 3.0 * r.tau];
                let prop = oracle::SingleParticlePropagator::new(config, &bath);
                let q = |i: usize, j: usize| {
                    let o = oracle::oracle_two_time(
                        &prop,
                        &bath,
                        oracle::DotState::SecondOccupied,
                        sched[i],
                        sched[j],
                    );
                    lgi::q_correlator(o.nn, o.n2_t2, o.n2_t1)
                };
                let c3_oracle = q(0, 1) + q(1, 2) - q(0, 2);
                let delta = (r.c3 - c3_oracle).abs();
                OracleCheckRow {
                    tau: r.tau,
                    c3_negf: r.c3,
                    c3_oracle,
                    delta,
                    within_validity: true,
                    pass: delta < ORACLE_THRESHOLD,
                }
            })
            .collect()
    } else {
        let prop = oracle::SingleParticlePropagator::new(config, &bath);
        negf.iter()
            .map(|r| {
                let o = oracle::oracle_lgi(&prop, &bath, r.tau);
                let delta = (r.c3 - o.c3).abs();
                OracleCheckRow {
                    tau: r.tau,
                    c3_negf: r.c3,
                    c3_oracle: o.c3,
                    delta,
                    within_validity: 3.0 * r.tau <= window,
                    pass: delta < ORACLE_THRESHOLD,
                }
            })
            .collect()
    };
    Ok(rows)
}

/// Write the oracle report as CSV.
pub fn write_oracle_csv<W: Write>(out: &mut W, rows: &[OracleCheckRow]) -> Result<()> {
    writeln!(out, "tau,C3_negf,C3_oracle,abs_diff,within_validity,pass")?;
    let fmt = |x: f64| format!("{x:.11e}");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(r.tau),
            fmt(r.c3_negf),
            fmt(r.c3_oracle),
            fmt(r.delta),
            r.within_validity,
            r.pass
        )?;
    }
    Ok(())
}
