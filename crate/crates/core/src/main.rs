use clap::{Args, Parser, Subcommand};
use dqd_lgi::{cli, model, Error};
use std::path::PathBuf;
use std::process::ExitCode;

/// Leggett-Garg correlators for double-quantum-dot transport.
#[derive(Parser)]
#[command(name = "dqd-lgi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the measurement interval and write CSV rows per tau.
    Sweep(SweepArgs),
    /// Cross-check the Green's-function pipeline against the exact
    /// finite-bath oracle.
    OracleCheck(OracleArgs),
    /// List the built-in parameter presets.
    Presets,
}

#[derive(Args)]
struct SweepArgs {
    /// Run configuration file (see the README for the grammar).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (fig2a .. fig8).
    #[arg(long)]
    preset: Option<String>,
    /// Output CSV path; multi-curve presets append the curve label.
    #[arg(long)]
    out: PathBuf,
    /// Time step override for the open-pipeline grid.
    #[arg(long)]
    dt: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Also write propagator/occupation traces to this CSV (open
    /// scenarios from --config only).
    #[arg(long)]
    dump_traces: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Run configuration file supplying the device.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Take the device from this preset instead.
    #[arg(long)]
    preset: Option<String>,
    /// Which curve of the preset (index into its curve list).
    #[arg(long, default_value_t = 0)]
    curve: usize,
    /// Comma-separated measurement intervals.
    #[arg(long, default_value = "0.5,1.0,2.0", value_delimiter = ',')]
    taus: Vec<f64>,
    /// Bath modes per lead.
    #[arg(long, default_value_t = dqd_lgi::oracle::DEFAULT_MODES)]
    oracle_modes: usize,
    /// Half-width of the sampled bath window around each bias.
    #[arg(long, default_value_t = dqd_lgi::oracle::DEFAULT_SPAN)]
    span: f64,
    /// Time step for the Green's-function side.
    #[arg(long)]
    dt: Option<f64>,
    /// Optional CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version are not errors
            if err.use_stderr() {
                eprintln!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(Error::Parameter(msg)) => {
            eprintln!("parameter error: {msg}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}

fn init_workers(workers: Option<usize>) -> Result<(), Error> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::param("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::param(format!("could not size the worker pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Presets => {
            for (name, description) in cli::preset_names() {
                println!("{name:8} {description}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            init_workers(args.workers)?;
            match (&args.config, &args.preset) {
                (Some(path), None) => {
                    let rc = model::config::parse_file(path)?;
                    let spec = cli::SweepSpec {
                        tau_values: rc.tau_values(),
                        scenario: rc.scenario,
                        config: rc.device,
                        dt: args.dt.unwrap_or(rc.dt),
                        out: args.out.clone(),
                    };
                    match &args.dump_traces {
                        Some(trace) => cli::run_sweep_with_traces(&spec, trace)?,
                        None => cli::run_sweep_to_file(&spec)?,
                    }
                    println!("wrote {}", args.out.display());
                    Ok(ExitCode::SUCCESS)
                }
                (None, Some(name)) => {
                    if args.dump_traces.is_some() {
                        return Err(Error::param(
                            "--dump-traces works with --config runs; presets write many curves",
                        ));
                    }
                    let written = cli::run_preset(name, &args.out, args.dt.unwrap_or(0.01))?;
                    for path in written {
                        println!("wrote {}", path.display());
                    }
                    Ok(ExitCode::SUCCESS)
                }
                _ => Err(Error::param("give exactly one of --config or --preset")),
            }
        }
        Command::OracleCheck(args) => {
            init_workers(args.workers)?;
            let (device, dt) = match (&args.config, &args.preset) {
                (Some(path), None) => {
                    let rc = model::config::parse_file(path)?;
                    (rc.device, args.dt.unwrap_or(rc.dt))
                }
                (None, Some(name)) => {
                    let curves = cli::preset(name)?;
                    let curve = curves.get(args.curve).ok_or_else(|| {
                        Error::param(format!(
                            "preset {name} has {} curves, index {} is out of range",
                            curves.len(),
                            args.curve
                        ))
                    })?;
                    (curve.config, args.dt.unwrap_or(0.01))
                }
                _ => return Err(Error::param("give exactly one of --config or --preset")),
            };
            let rows =
                cli::run_oracle_check(&device, &args.taus, args.oracle_modes, args.span, dt)?;
            let mut all_pass = true;
            for r in &rows {
                let validity =
                    if r.within_validity { "" } else { "  [beyond bath validity window]" };
                println!(
                    "tau = {:6.3}: C3 = {:+.6} vs oracle {:+.6}  |diff| = {:.3e}  {}{}",
                    r.tau,
                    r.c3_negf,
                    r.c3_oracle,
                    r.delta,
                    if r.pass { "PASS" } else { "FAIL" },
                    validity
                );
                all_pass &= r.pass;
            }
            if let Some(path) = &args.out {
                let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
                cli::write_oracle_csv(&mut file, &rows)?;
                println!("wrote {}", path.display());
            }
            if all_pass {
                println!("oracle check passed at threshold {}", cli::ORACLE_THRESHOLD);
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("oracle check FAILED at threshold {}", cli::ORACLE_THRESHOLD);
                Ok(ExitCode::from(2))
            }
        }
    }
}
