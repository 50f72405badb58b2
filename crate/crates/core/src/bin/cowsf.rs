use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cowsf::commands::{self, exit_code, to_json, write_output, EXIT_VALIDATION_FAILED};
use cowsf::config::{MuASetting, RunConfig};
use cowsf::optimizer::AttackFamily;
use cowsf::validation::Mutation;
use cowsf::{AttackParams, Error, Result, StatisticsMode};

#[derive(Parser)]
#[command(
    name = "cowsf",
    version,
    about = "Soft-filtering attack analysis for coherent one-way QKD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate and optimal intensity against length, one CSV row per length and attack.
    Curve {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo run of one attack with renewal-reward estimates.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Add analytic expectations and z-scores to the report.
        #[arg(long)]
        compare_analytic: bool,
        /// Write per-signal fates to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Unitarity, enumeration and replay self-checks.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Inject a known fault to confirm the checks can fail.
        #[arg(long, hide = true, value_parser = parse_mutation)]
        inject_fault: Option<Mutation>,
    },
    /// Strongest attack mixture at one length, as JSON.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    /// Channel attenuation in dB/km.
    #[arg(long)]
    delta: Option<f64>,
    /// Probability of a control state.
    #[arg(long)]
    f: Option<f64>,
    /// Alice's mean photon number, or "optimize".
    #[arg(long)]
    mu_a: Option<MuASetting>,
    #[arg(long)]
    mu_a_max: Option<f64>,
    /// strict or free.
    #[arg(long)]
    mode: Option<StatisticsMode>,
    #[arg(long)]
    lmin: Option<f64>,
    #[arg(long)]
    lmax: Option<f64>,
    #[arg(long)]
    lstep: Option<f64>,
    /// Channel length in km for single-point commands.
    #[arg(long)]
    length: Option<f64>,
    /// Comma-separated attack families: sf, bs, usd.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    attacks: Option<Vec<AttackFamily>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Attack evaluations per optimisation.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Signals per Monte Carlo run.
    #[arg(long)]
    signals: Option<usize>,
    #[arg(long)]
    t_sf1: Option<u32>,
    #[arg(long)]
    t_sf2: Option<u32>,
    #[arg(long)]
    mu_b: Option<f64>,
    /// Eve's SF1 intensity; accepts "inf".
    #[arg(long)]
    mu_e1: Option<f64>,
    /// Eve's SF2 intensity; accepts "inf".
    #[arg(long)]
    mu_e2: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV with columns length_km, key_rate, series_label drawn on the chart.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Write an SVG chart of the curves.
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn parse_family(s: &str) -> std::result::Result<AttackFamily, String> {
    AttackFamily::from_label(s).map_err(|e| e.to_string())
}

fn parse_mutation(s: &str) -> std::result::Result<Mutation, String> {
    match s {
        "wrong-q2" => Ok(Mutation::WrongQ2),
        other => Err(format!("unknown fault {other:?}")),
    }
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        take!(eta, delta, f, mu_a_max, mode, lmin, lmax, lstep, length, attacks, seed, budget, tolerance, signals);
        if let Some(m) = self.mu_a {
            cfg.mu_a = Some(m);
        }
        for (slot, value) in [
            (&mut cfg.out, &self.out),
            (&mut cfg.overlay, &self.overlay),
            (&mut cfg.svg, &self.svg),
        ] {
            if value.is_some() {
                *slot = value.clone();
            }
        }
        let a = cfg.attack;
        cfg.attack = AttackParams::from_values(
            self.t_sf1.unwrap_or(a.t_sf1),
            self.t_sf2.unwrap_or(a.t_sf2),
            self.mu_b.unwrap_or(a.mu_b.value()),
            self.mu_e1.unwrap_or(a.mu_e1.value()),
            self.mu_e2.unwrap_or(a.mu_e2.value()),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Curve { common } => {
            let cfg = common.resolve()?;
            let overlay = match &cfg.overlay {
                Some(path) => commands::read_overlay(path)?,
                None => Vec::new(),
            };
            let rows = commands::curve_rows(&cfg)?;
            let mut csv = Vec::new();
            commands::write_curve_csv(&rows, &mut csv)?;
            write_output(cfg.out.as_deref(), &csv)?;
            let echo = to_json(&cfg)?;
            match &cfg.out {
                Some(out) => {
                    let mut sidecar = out.clone().into_os_string();
                    sidecar.push(".config.json");
                    write_output(Some(&PathBuf::from(sidecar)), echo.as_bytes())?;
                }
                None => eprint!("{echo}"),
            }
            if let Some(svg) = &cfg.svg {
                write_output(Some(svg), commands::render_svg(&rows, &overlay).as_bytes())?;
            }
            Ok(0)
        }
        Command::Simulate {
            common,
            compare_analytic,
            trace,
        } => {
            let cfg = common.resolve()?;
            let trace_file = match &trace {
                Some(path) => {
                    Some(BufWriter::new(File::create(path).map_err(|e| {
                        Error::Io(format!("cannot write {}: {e}", path.display()))
                    })?))
                }
                None => None,
            };
            let report = commands::simulate(&cfg, compare_analytic, trace_file)?;
            write_output(cfg.out.as_deref(), to_json(&report)?.as_bytes())?;
            Ok(0)
        }
        Command::Validate { common, inject_fault } => {
            let cfg = common.resolve()?;
            let report = commands::validate(&cfg, inject_fault)?;
            write_output(cfg.out.as_deref(), to_json(&report)?.as_bytes())?;
            Ok(if report.passed { 0 } else { EXIT_VALIDATION_FAILED })
        }
        Command::Optimize { common } => {
            let cfg = common.resolve()?;
            let report = commands::optimize(&cfg)?;
            write_output(cfg.out.as_deref(), to_json(&report)?.as_bytes())?;
            Ok(match report.status {
                commands::OptimizeStatus::Feasible => 0,
                commands::OptimizeStatus::Infeasible => 2,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
