use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hartree_core::verify::{bundle_exit_code, exit_code, run_checks, Convention, LemmaId, Overrides, ReportBundle, RunConfig, Verifier};
use hartree_core::{Error, Result};

/// Numerical checks for a critically coupled Hartree system.
#[derive(Parser)]
#[command(name = "hartree-verify", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report.json, report.md and the CSV tables.
    #[arg(long, global = true, default_value = "hartree-report")]
    out: PathBuf,
    /// Number of radial grid nodes.
    #[arg(long, global = true)]
    grid_m: Option<usize>,
    /// Outer radius of the radial grid.
    #[arg(long, global = true)]
    r_max: Option<f64>,
    /// Multiplier applied to every numerical tolerance.
    #[arg(long, global = true)]
    tol_scale: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Potential smallness convention: A3 or C3.
    #[arg(long, global = true)]
    convention: Option<Convention>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sharp constants, coupling identities and the ground level.
    Constants,
    /// Weak residual of the scalar extremal.
    BubbleCertify,
    /// Projected flow for the limit ground pair.
    SolveGround,
    /// A single check by id.
    Verify {
        /// One of the ids listed by `hartree-verify verify --help`.
        #[arg(value_parser = parse_id, help = ids_help())]
        id: LemmaId,
    },
    /// Admissibility, region search and the level bound.
    ScanRegion,
    /// Sampled non-vanishing of the boundary homotopy.
    HomotopyCheck,
    /// Every check.
    RunAll,
}

fn parse_id(s: &str) -> std::result::Result<LemmaId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn ids_help() -> String {
    format!("Check id: {}", LemmaId::ALL.map(LemmaId::as_str).join(", "))
}

impl Cmd {
    fn ids(&self) -> Vec<LemmaId> {
        use LemmaId::*;
        match self {
            Cmd::Constants => vec![Constants, Identities, Threshold],
            Cmd::BubbleCertify => vec![Bubble],
            Cmd::SolveGround => vec![GroundState, Pohozaev],
            Cmd::Verify { id } => vec![*id],
            Cmd::ScanRegion => vec![Admissibility, Region, LevelBound],
            Cmd::HomotopyCheck => vec![Homotopy],
            Cmd::RunAll => LemmaId::ALL.to_vec(),
        }
    }
}

fn run(cli: &Cli) -> Result<ReportBundle> {
    let mut cfg = match &cli.opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let o = &cli.opts;
    cfg.apply(&Overrides { grid_m: o.grid_m, r_max: o.r_max, tol_scale: o.tol_scale, seed: o.seed, convention: o.convention });
    let v = Verifier::new(cfg)?;
    let bundle = run_checks(&v, &cli.cmd.ids());
    bundle.write(&cli.opts.out)?;
    Ok(bundle)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(b) => {
            for r in &b.reports {
                let err = r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default();
                println!("{:<18} {:?}{err}", r.id, r.status);
            }
            println!("report written to {}", cli.opts.out.display());
            ExitCode::from(bundle_exit_code(&b) as u8)
        }
        Err(e) => {
            eprintln!("hartree-verify: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
