use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use mcf_cli::config::{describe, parse_config_with, Config};
use mcf_cli::runner::{execute, write_artifacts};
use mcf_cli::sweep::{report_to_csv, run_sweep};

#[derive(Parser)]
#[command(name = "mcf", version, about = "Mean curvature flow of rotationally symmetric noncompact hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single flow and write CSV diagnostics.
    Simulate(Args),
    /// Interpolate between a near and a far perturbation and bisect the class boundary.
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    config: PathBuf,
    /// Override a configuration key, e.g. `--override grid.dr=0.001`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (defaults to `output.dir`, then the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &Args) -> anyhow::Result<Config> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    Ok(parse_config_with(&text, &args.overrides).with_context(|| format!("in {}", args.config.display()))?)
}

fn out_dir(args: &Args, configured: Option<&PathBuf>) -> PathBuf {
    args.out.clone().or_else(|| configured.cloned()).unwrap_or_else(|| PathBuf::from("."))
}

fn simulate(args: &Args) -> anyhow::Result<ExitCode> {
    let Config::Run(cfg) = load(args)? else { bail!("{} is a sweep configuration; use `mcf sweep`", args.config.display()) };
    let art = execute(&cfg)?;
    let dir = out_dir(args, cfg.output_dir.as_ref());
    for p in write_artifacts(&cfg, &art, &dir)? {
        eprintln!("wrote {}", p.display());
    }
    let c = &art.classification;
    println!(
        "terminal {} after {} steps; verdict {}; HS0 drift {:?}; neck ratio {:?}",
        art.outcome.terminal, art.outcome.steps, c.verdict, c.evidence.hs0_final_drift, c.evidence.neck_ratio_final
    );
    Ok(ExitCode::from(art.exit_code() as u8))
}

fn sweep(args: &Args) -> anyhow::Result<ExitCode> {
    let Config::Sweep(cfg) = load(args)? else { bail!("{} has no sweep.* keys; use `mcf simulate`", args.config.display()) };
    let report = run_sweep(&cfg, true)?;
    let dir = out_dir(args, cfg.base.output_dir.as_ref());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("sweep.csv");
    fs::write(&path, report_to_csv(&report, &describe(&cfg.base))).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    println!("bracket [{}, {}]; undetermined inside: {:?}", report.s_lo, report.s_hi, report.undetermined);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
