use std::path::PathBuf;
use std::process::ExitCode;

use blockfv_cli::config::flag_layer;
use blockfv_cli::{parse_config, run_case, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blockfv", version, about = "Finite-strain block-coupled finite-volume solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case and write report.json, errors.csv, convergence.csv and VTK output.
    Solve(SolveArgs),
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Case file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// nlbc, bc or seg.
    #[arg(long)]
    method: Option<String>,
    /// Single mesh as NXxNY.
    #[arg(long)]
    mesh: Option<String>,
    /// Comma-separated meshes, run in order (N or NXxNY each).
    #[arg(long)]
    sweep: Option<String>,
    /// Write the first assembled system as Matrix Market files.
    #[arg(long)]
    dump_matrix: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any case-file key, e.g. `--set stretch=0.65`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn solve(args: SolveArgs) -> Result<i32, CliError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for s in &args.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{s}'")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let named = [
        ("method", args.method),
        ("mesh", args.mesh),
        ("sweep", args.sweep),
        ("out", args.out.map(|p| p.display().to_string())),
        ("dump_matrix", args.dump_matrix.then(|| "true".to_string())),
    ];
    for (k, v) in named {
        if let Some(v) = v {
            pairs.push((k.to_string(), v));
        }
    }
    let overrides = flag_layer(pairs.iter().map(|(k, v)| (k.as_str(), v.clone())))?;
    let cfg = parse_config(args.config.as_deref(), overrides)?;
    let outcome = run_case(&cfg)?;
    for r in &outcome.report.runs {
        let err = r.errors.as_ref().map(|m| format!(" mean_error={:e}", m.mean)).unwrap_or_default();
        let defl = r.end_deflection.map(|d| format!(" end_deflection={d:e}")).unwrap_or_default();
        println!("{} {} {} n_corr={:?}{err}{defl}", r.mesh, cfg.method.name(), r.status, r.n_corr);
        if let Some(why) = &r.divergence_reason {
            println!("  {why}");
        }
    }
    println!("artifacts written to {}", cfg.out_dir.display());
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
