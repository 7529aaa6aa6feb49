//! Command-line front end.
//!
//! Three subcommands: `design` runs the offline synthesis and prints the
//! certificate and gains, `simulate` runs a scenario and writes the trace
//! and metrics files, `report` recomputes window metrics from a trace file.
//!
//! Exit codes: 0 success, 1 usage or IO problem, 2 infeasible design,
//! 3 diverged simulation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use boostsw_core::config::DesignError;
use boostsw_core::scenarios::IrradianceTrace;
use boostsw_core::sim::{run_closed_loop, steady_state_metrics, SimError};
use boostsw_core::synthesis::SynthesisError;
use boostsw_core::trace::SimTrace;
use boostsw_core::{scenario_by_name, DesignArtifacts, ToolConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "boostsw",
    about = "Robust switching control for a DC-DC boost converter: design, simulate, report",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML config file; defaults cover the nominal study.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override single keys, e.g. --set alpha=60 --set seed=9.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Lyapunov design and print certificate, gains and width.
    Design {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run one scenario and write trace and metrics files.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Scenario name: s1, s2 or s3.
        #[arg(long)]
        scenario: String,
        /// Output directory for the trace and metrics files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seed override (same as --set seed=N).
        #[arg(long)]
        seed: Option<u64>,
        /// Irradiance CSV (t_seconds,irradiance_wm2) for s3.
        #[arg(long)]
        irradiance: Option<PathBuf>,
    },
    /// Print window metrics for an existing trace file.
    Report {
        /// Trace CSV produced by `simulate`.
        trace: PathBuf,
        /// Evaluation window as t0:t1 in seconds.
        #[arg(long)]
        window: String,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn load_config(args: &ConfigArgs) -> anyhow::Result<ToolConfig> {
    let mut table = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            text.parse::<toml::Table>()
                .with_context(|| format!("cannot parse config {}", path.display()))?
        }
        None => toml::Table::new(),
    };
    for kv in &args.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        let parsed: toml::Table = format!("{key} = {value}")
            .parse()
            .or_else(|_: toml::de::Error| format!("{key} = {value:?}").parse())
            .with_context(|| format!("cannot parse override {kv:?}"))?;
        for (k, v) in parsed {
            table.insert(k, v);
        }
    }
    let cfg: ToolConfig = toml::Value::Table(table)
        .try_into()
        .context("invalid configuration")?;
    Ok(cfg)
}

fn format_mat(m: &boostsw_core::Mat2) -> String {
    format!(
        "[[{}, {}], [{}, {}]]",
        m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]
    )
}

fn print_design(cfg: &ToolConfig, art: &DesignArtifacts) {
    println!("feasible = true");
    println!("alpha = {}", art.cert.alpha);
    println!("alpha_bar = {}", art.alpha_bar);
    println!("P = {}", format_mat(&art.cert.p));
    println!("slack_min_vertex = {}", art.cert.slack_min_vertex);
    println!("slack_max_vertex = {}", art.cert.slack_max_vertex);
    println!("pmin_eig = {}", art.cert.pmin_eig);
    println!("kappa = {}", format_mat(&art.gains.kappa));
    println!("theta = {}", format_mat(&art.gains.theta));
    println!("lambda = {}", art.gains.lambda);
    println!("gamma = {}", art.gains.gamma);
    println!("r = {}", art.gains.r);
    println!("sigma_star_nominal = {}", art.eq_nominal.sigma_star);
    println!(
        "x_star_nominal = [{}, {}]",
        art.eq_nominal.x_star.il, art.eq_nominal.x_star.vo
    );
    println!("h_nominal = {}", art.h_nominal);
    println!("fs_target = {}", cfg.fs_target);
}

fn cmd_design(args: &ConfigArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    match cfg.design() {
        Ok(art) => {
            print_design(&cfg, &art);
            Ok(())
        }
        Err(DesignError::Synthesis(SynthesisError::Infeasible {
            alpha,
            best_slack,
            alpha_bar,
        })) => {
            println!("feasible = false");
            println!("alpha = {alpha}");
            println!("best_slack = {best_slack}");
            println!("alpha_bar = {alpha_bar}");
            Err(CliError::Infeasible)
        }
        Err(e) => Err(CliError::Other(e.into())),
    }
}

fn parse_window(s: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("--window expects t0:t1, got {s:?}"))?;
    let t0: f64 = a.trim().parse().context("bad t0")?;
    let t1: f64 = b.trim().parse().context("bad t1")?;
    if !t0.is_finite() || !t1.is_finite() || t1 <= t0 {
        return Err(anyhow!("window must have t1 > t0, got {s:?}"));
    }
    Ok((t0, t1))
}

fn write_metrics_file(
    path: &Path,
    scenario: &str,
    seed: u64,
    blocks: &[((f64, f64), boostsw_core::SteadyStateMetrics)],
) -> anyhow::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "scenario = {scenario}")?;
    writeln!(f, "seed = {seed}")?;
    for ((t0, t1), m) in blocks {
        writeln!(f)?;
        writeln!(f, "[window {t0}:{t1}]")?;
        write!(f, "{m}")?;
    }
    Ok(())
}

fn cmd_simulate(
    args: &ConfigArgs,
    scenario_name: &str,
    out: &Path,
    seed: Option<u64>,
    irradiance: Option<&Path>,
) -> Result<(), CliError> {
    let mut cfg = load_config(args)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let irr = irradiance
        .map(IrradianceTrace::from_csv)
        .transpose()
        .map_err(|e| CliError::Other(e.into()))?;
    let scenario = scenario_by_name(scenario_name, irr).map_err(|e| CliError::Other(e.into()))?;
    let art = match cfg.design() {
        Ok(art) => art,
        Err(DesignError::Synthesis(e @ SynthesisError::Infeasible { .. })) => {
            eprintln!("design infeasible: {e}");
            return Err(CliError::Infeasible);
        }
        Err(e) => return Err(CliError::Other(e.into())),
    };
    let sim_cfg = cfg.sim_config(&scenario);
    let trace = match run_closed_loop(&art.model, &art.cert, &art.gains, &scenario, &sim_cfg) {
        Ok(t) => t,
        Err(e @ SimError::NonFinite { .. }) => {
            eprintln!("simulation diverged: {e}");
            return Err(CliError::Diverged);
        }
        Err(e) => return Err(CliError::Other(e.into())),
    };

    std::fs::create_dir_all(out).map_err(|e| CliError::Other(e.into()))?;
    let trace_path = out.join(format!("{scenario_name}_trace.csv"));
    trace
        .save_csv(&trace_path)
        .map_err(|e| CliError::Other(e.into()))?;

    let mut blocks = Vec::new();
    for &(t0, t1) in &scenario.report_windows {
        if t1 <= sim_cfg.t_end {
            let m = steady_state_metrics(&trace, (t0, t1), Some(&art.cert.p))
                .map_err(|e| CliError::Other(e.into()))?;
            blocks.push(((t0, t1), m));
        }
    }
    let metrics_path = out.join(format!("{scenario_name}_metrics.txt"));
    write_metrics_file(&metrics_path, scenario_name, sim_cfg.seed, &blocks)
        .map_err(CliError::Other)?;

    println!("trace = {}", trace_path.display());
    println!("metrics = {}", metrics_path.display());
    println!("samples = {}", trace.len());
    println!("switches = {}", trace.switch_events().count());
    println!("saturations = {}", trace.saturation_count());
    for ((t0, t1), m) in &blocks {
        println!("mean_vo[{t0}:{t1}] = {}", m.mean_vo);
    }
    Ok(())
}

fn cmd_report(args: &ConfigArgs, trace_path: &Path, window: &str) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let window = parse_window(window)?;
    let trace = SimTrace::load_csv(trace_path).map_err(|e| CliError::Other(e.into()))?;
    // the certificate matrix is re-derived from the same config so the
    // Lyapunov summary matches the one written at simulation time
    let p = cfg.design().ok().map(|art| art.cert.p);
    let metrics =
        steady_state_metrics(&trace, window, p.as_ref()).map_err(|e| CliError::Other(e.into()))?;
    print!("{metrics}");
    Ok(())
}

enum CliError {
    Infeasible,
    Diverged,
    Other(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not usage errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Design { cfg } => cmd_design(cfg),
        Command::Simulate {
            cfg,
            scenario,
            out,
            seed,
            irradiance,
        } => cmd_simulate(cfg, scenario, out, *seed, irradiance.as_deref()),
        Command::Report { trace, window, cfg } => cmd_report(cfg, trace, window),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Infeasible) => ExitCode::from(EXIT_INFEASIBLE),
        Err(CliError::Diverged) => ExitCode::from(EXIT_DIVERGED),
        Err(CliError::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
