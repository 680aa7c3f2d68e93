//! Plain-text run configuration files.
//!
//! The format is line-based `key = value` pairs grouped into sections:
//!
//! ```text
//! # comments start with '#'
//! [dots]
//! e11 = 1.0
//! e22 = 1.0
//! e12 = 0.5          # complex values as "re,im"
//!
//! [left]
//! coupling = 0.3     # scalar strength, combined with [run] topology
//! W = 1.0
//! mu = 5.0
//! kT = 0.1
//!
//! [right]
//! coupling = 0.3
//! W = 1.0
//! mu = -5.0
//! kT = 0.1
//!
//! [run]
//! topology = series  # series | parallel | custom
//! scenario = open_c3 # closed_c3 | closed_c4 | open_c3 | open_c4
//! tau_min = 0.1
//! tau_max = 8.0
//! tau_steps = 80
//! grid_dt = 0.01
//! ```
//!
//! With `topology = custom` each lead section must give the coupling
//! matrix explicitly via `g11`, `g12`, `g22` instead of `coupling`.
//! Every key is optional and falls back to the defaults above.

use super::{
    make_parallel_config, make_series_config, DeviceConfig, DotHamiltonian,
    LeadSpec, ReservoirParams, Topology,
};
use crate::{C64, Error, Result};
use nalgebra::Matrix2;
use std::collections::BTreeMap;
use std::path::Path;

/// Which pipeline runs and which correlator combination is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    ClosedC3,
    ClosedC4,
    OpenC3,
    OpenC4,
}

impl Scenario {
    pub fn is_open(&self) -> bool {
        matches!(self, Scenario::OpenC3 | Scenario::OpenC4)
    }

    pub fn is_c4(&self) -> bool {
        matches!(self, Scenario::ClosedC4 | Scenario::OpenC4)
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_c3" => Ok(Scenario::ClosedC3),
            "closed_c4" => Ok(Scenario::ClosedC4),
            "open_c3" => Ok(Scenario::OpenC3),
            "open_c4" => Ok(Scenario::OpenC4),
            other => Err(Error::param(format!(
                "unknown scenario '{other}' (expected closed_c3, closed_c4, open_c3 or open_c4)"
            ))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scenario::ClosedC3 => "closed_c3",
            Scenario::ClosedC4 => "closed_c4",
            Scenario::OpenC3 => "open_c3",
            Scenario::OpenC4 => "open_c4",
        };
        write!(f, "{s}")
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub device: DeviceConfig,
    pub scenario: Scenario,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_steps: usize,
    pub dt: f64,
}

impl RunConfig {
    /// Evenly spaced measurement intervals, `tau_min ..= tau_max`.
    pub fn tau_values(&self) -> Vec<f64> {
        if self.tau_steps == 1 {
            return vec![self.tau_min];
        }
        let step = (self.tau_max - self.tau_min) / (self.tau_steps - 1) as f64;
        (0..self.tau_steps).map(|i| self.tau_min + i as f64 * step).collect()
    }
}

pub fn parse_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::param(format!("cannot read config {}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<RunConfig> {
    let sections = split_sections(text)?;
    for name in sections.keys() {
        if !["dots", "left", "right", "run"].contains(&name.as_str()) {
            return Err(Error::param(format!("unknown config section [{name}]")));
        }
    }
    let empty = Section::default();

    let dots_sec = sections.get("dots").unwrap_or(&empty);
    let e11 = dots_sec.get_f64("e11")?.unwrap_or(1.0);
    let e22 = dots_sec.get_f64("e22")?.unwrap_or(1.0);
    let e12 = dots_sec.get_c64("e12")?.unwrap_or(C64::new(0.5, 0.0));
    dots_sec.check_known(&["e11", "e22", "e12"])?;
    let dots = DotHamiltonian::new(e11, e22, e12);

    let run = sections.get("run").unwrap_or(&empty);
    let topology = match run.get_str("topology").unwrap_or("series") {
        "series" => Topology::Series,
        "parallel" => Topology::Parallel,
        "custom" => Topology::Custom,
        other => {
            return Err(Error::param(format!(
                "unknown topology '{other}' (expected series, parallel or custom)"
            )))
        }
    };
    let scenario: Scenario = run.get_str("scenario").unwrap_or("open_c3").parse()?;
    let tau_min = run.get_f64("tau_min")?.unwrap_or(0.1);
    let tau_max = run.get_f64("tau_max")?.unwrap_or(8.0);
    let tau_steps = run.get_f64("tau_steps")?.unwrap_or(80.0) as usize;
    let dt = run.get_f64("grid_dt")?.unwrap_or(0.01);
    run.check_known(&["topology", "scenario", "tau_min", "tau_max", "tau_steps", "grid_dt"])?;

    if !(tau_min > 0.0) || tau_max < tau_min || tau_steps == 0 {
        return Err(Error::param(
            "need 0 < tau_min <= tau_max and tau_steps >= 1".to_string(),
        ));
    }
    if !(dt > 0.0) {
        return Err(Error::param("grid_dt must be positive"));
    }

    let left_sec = sections.get("left").unwrap_or(&empty);
    let right_sec = sections.get("right").unwrap_or(&empty);
    let left_res = parse_reservoir(left_sec, 5.0)?;
    let right_res = parse_reservoir(right_sec, -5.0)?;

    let device = match topology {
        Topology::Series | Topology::Parallel => {
            let gl = scalar_coupling(left_sec, "left")?;
            let gr = scalar_coupling(right_sec, "right")?;
            if topology == Topology::Series {
                make_series_config(gl, gr, dots, left_res, right_res)?
            } else {
                make_parallel_config(gl, gr, dots, left_res, right_res)?
            }
        }
        Topology::Custom => {
            let left = LeadSpec::new(matrix_coupling(left_sec, "left")?, left_res)?;
            let right = LeadSpec::new(matrix_coupling(right_sec, "right")?, right_res)?;
            super::make_custom_config(dots, left, right)
        }
    };

    Ok(RunConfig { device, scenario, tau_min, tau_max, tau_steps, dt })
}

fn parse_reservoir(sec: &Section, default_mu: f64) -> Result<ReservoirParams> {
    let w = sec.get_f64("W")?.unwrap_or(1.0);
    let mu = sec.get_f64("mu")?.unwrap_or(default_mu);
    let kt = sec.get_f64("kT")?.unwrap_or(0.1);
    sec.check_known(&["W", "mu", "kT", "coupling", "g11", "g12", "g22"])?;
    Ok(ReservoirParams::new(w, mu, kt))
}

fn scalar_coupling(sec: &Section, name: &str) -> Result<f64> {
    if sec.get_str("g11").is_some() || sec.get_str("g12").is_some() || sec.get_str("g22").is_some()
    {
        return Err(Error::param(format!(
            "[{name}] gives matrix entries g11/g12/g22; use topology = custom for those"
        )));
    }
    Ok(sec.get_f64("coupling")?.unwrap_or(0.3))
}

fn matrix_coupling(sec: &Section, name: &str) -> Result<crate::RMat2> {
    if sec.get_str("coupling").is_some() {
        return Err(Error::param(format!(
            "[{name}] mixes 'coupling' with topology = custom; give g11/g12/g22 instead"
        )));
    }
    let g11 = sec.get_f64("g11")?.unwrap_or(0.0);
    let g12 = sec.get_f64("g12")?.unwrap_or(0.0);
    let g22 = sec.get_f64("g22")?.unwrap_or(0.0);
    Ok(Matrix2::new(g11, g12, g12, g22))
}

#[derive(Default)]
struct Section {
    entries: BTreeMap<String, String>,
}

impl Section {
    fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::param(format!("key '{key}': expected a number, got '{v}'"))),
        }
    }

    fn get_c64(&self, key: &str) -> Result<Option<C64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => {
                let parts: Vec<&str> = v.split(',').map(str::trim).collect();
                let parse = |s: &str| {
                    s.parse::<f64>().map_err(|_| {
                        Error::param(format!("key '{key}': expected number(s), got '{v}'"))
                    })
                };
                match parts.as_slice() {
                    [re] => Ok(Some(C64::new(parse(re)?, 0.0))),
                    [re, im] => Ok(Some(C64::new(parse(re)?, parse(im)?))),
                    _ => Err(Error::param(format!(
                        "key '{key}': expected 're' or 're,im', got '{v}'"
                    ))),
                }
            }
        }
    }

    fn check_known(&self, known: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::param(format!("unknown config key '{key}'")));
            }
        }
        Ok(())
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = Some(name.trim().to_string());
            sections.entry(name.trim().to_string()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::param(format!(
                "config line {}: expected 'key = value', got '{raw}'",
                lineno + 1
            )));
        };
        let Some(section) = current.as_ref() else {
            return Err(Error::param(format!(
                "config line {}: key outside any [section]",
                lineno + 1
            )));
        };
        let prev = sections
            .get_mut(section)
            .unwrap()
            .entries
            .insert(key.trim().to_string(), value.trim().to_string());
        if prev.is_some() {
            return Err(Error::param(format!(
                "config line {}: duplicate key '{}'",
                lineno + 1,
                key.trim()
            )));
        }
    }
    Ok(sections)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
# fig-4a style run
[dots]
e11 = 1.0
e22 = 1.0
e12 = 0.5

[left]
coupling = 0.2
W = 1.0
mu = 5.0
kT = 0.1

[right]
coupling = 0.2
W = 1.0
mu = -5.0
kT = 0.1

[run]
topology = series
scenario = open_c3
tau_min = 0.5
tau_max = 2.0
tau_steps = 4
grid_dt = 0.01
";

    #[test]
    fn parses_full_config() {
        let rc = parse_str(SAMPLE).unwrap();
        assert_eq!(rc.scenario, Scenario::OpenC3);
        assert_eq!(rc.device.topology, Topology::Series);
        assert_eq!(rc.device.left.gamma()[(0, 0)], 0.2);
        assert_eq!(rc.device.right.mu, -5.0);
        assert_eq!(rc.tau_values(), vec![0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn defaults_cover_everything() {
        let rc = parse_str("").unwrap();
        assert_eq!(rc.scenario, Scenario::OpenC3);
        assert_eq!(rc.device.left.gamma()[(0, 0)], 0.3);
        assert_eq!(rc.dt, 0.01);
        assert_eq!(rc.tau_steps, 80);
    }

    #[test]
    fn complex_tunneling_value() {
        let rc = parse_str("[dots]\ne12 = 0.5, 0.25\n").unwrap();
        assert_eq!(rc.device.dots.e12(), C64::new(0.5, 0.25));
    }

    #[test]
    fn custom_topology_needs_matrix_entries() {
        let rc = parse_str(
            "[run]\ntopology = custom\n[left]\ng11 = 0.1\ng22 = 0.1\n[right]\ng22 = 0.2\n",
        )
        .unwrap();
        assert_eq!(rc.device.topology, Topology::Custom);
        assert_eq!(rc.device.left.gamma()[(0, 0)], 0.1);
        assert_eq!(rc.device.right.gamma()[(1, 1)], 0.2);

        assert!(parse_str("[run]\ntopology = custom\n[left]\ncoupling = 0.1\n").is_err());
        assert!(parse_str("[left]\ng11 = 0.1\n").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_sections() {
        assert!(parse_str("[dots]\nfoo = 1\n").is_err());
        assert!(parse_str("[leads]\nW = 1\n").is_err());
        assert!(parse_str("[dots]\ne11 = abc\n").is_err());
        assert!(parse_str("e11 = 1\n").is_err());
        assert!(parse_str("[dots]\ne11 = 1\ne11 = 2\n").is_err());
        assert!(parse_str("[run]\ntau_min = 0\n").is_err());
    }
}
