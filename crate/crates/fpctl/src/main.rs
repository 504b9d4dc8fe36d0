//! `fpctl`: run catalog benchmarks, convergence studies, oracles and
//! gradient checks from the command line.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use fpctl::harness::{
    apply_overrides, convergence_study, emit_artifacts, gradcheck, run_benchmark,
    stationary_oracle, write_convergence_csv, Reference,
};
use fpctl::mesh::{build_grid, Domain};
use fpctl::model::{catalog, RunConfig, CATALOG};
use fpctl::Result;

#[derive(Parser)]
#[command(
    name = "fpctl",
    about = "Optimal control of nonlinear nonlocal Fokker-Planck equations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a benchmark and write its artifacts.
    Run(RunArgs),
    /// Refinement study with errors against an analytic or fine-grid reference.
    Convergence(ConvergenceArgs),
    /// Closed-form references evaluated on a grid.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Compare the adjoint control gradient against cost finite differences.
    Gradcheck(GradcheckArgs),
    /// List catalog entries, or print one as JSON.
    Catalog { name: Option<String> },
}

#[derive(Args)]
struct RunArgs {
    /// Catalog name or path to a JSON config.
    config: String,
    /// Repeatable `key=value` tweaks (see `--override help=1` for keys).
    #[arg(long = "override", value_name = "KEY=VAL")]
    overrides: Vec<String>,
    /// Artifact directory (default: `runs/<name>`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Times at which density/control snapshots are written.
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<f64>,
}

#[derive(Args)]
struct ConvergenceArgs {
    /// Catalog name or path to a JSON config.
    config: String,
    /// Resolution exponents, as `a..b` (inclusive) or `a,b,c`.
    #[arg(long)]
    nv: String,
    /// `analytic` or `fine:<exponent>`.
    #[arg(long, default_value = "analytic")]
    reference: String,
    /// Also write the table to this CSV file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Stationary density of the quartic-diffusion alignment model.
    Stationary {
        #[arg(long)]
        sigma2: f64,
        /// Resolution exponent (2^nv cells on [-1, 1]).
        #[arg(long)]
        nv: u32,
        /// Conserved mean of the dynamics.
        #[arg(long, default_value_t = 0.0)]
        mean: f64,
        /// Write `v,value` CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GradcheckArgs {
    /// Catalog name, path to a JSON config, or `default` for the frozen
    /// verification instance.
    #[arg(default_value = "default")]
    config: String,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 3)]
    directions: usize,
    #[arg(long, default_value_t = 11)]
    seed: u64,
}

fn load_config(arg: &str) -> Result<RunConfig> {
    let path = PathBuf::from(arg);
    if path.is_file() {
        let text = fs::read_to_string(&path)?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        // surface inconsistent entries now, not mid-run
        cfg.model()?.validate(cfg.grid()?.as_ref())?;
        Ok(cfg)
    } else {
        catalog(arg)
    }
}

fn parse_resolutions(s: &str) -> Result<Vec<u32>> {
    let bad = || fpctl::Error::Config(format!("cannot parse resolution list '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

fn parse_reference(s: &str) -> Result<Reference> {
    if s == "analytic" {
        return Ok(Reference::Analytic);
    }
    if let Some(rest) = s.strip_prefix("fine:") {
        let n_v: u32 = rest
            .parse()
            .map_err(|_| fpctl::Error::Config(format!("bad fine reference '{s}'")))?;
        return Ok(Reference::Fine { n_v });
    }
    Err(fpctl::Error::Config(format!(
        "reference must be 'analytic' or 'fine:<exponent>', got '{s}'"
    )))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    let pairs: Vec<(String, String)> = args
        .overrides
        .iter()
        .map(|pair| {
            pair.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| {
                    fpctl::Error::Config(format!("override '{pair}' is not key=value"))
                })
        })
        .collect::<Result<_>>()?;
    apply_overrides(&mut cfg, &pairs)?;
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
    let outcome = run_benchmark(&cfg)?;
    emit_artifacts(&outcome, &out_dir, &args.snapshots)?;
    let s = &outcome.summary;
    println!(
        "{}: benchmark {} J* {} iterations {} f_min {:.3e} E_int {:.3e} wall {:.2}s -> {}",
        s.name,
        s.benchmark,
        s.j_star.map(|j| format!("{j:.6e}")).unwrap_or_else(|| "-".into()),
        s.iterations.map(|i| i.to_string()).unwrap_or_else(|| "-".into()),
        s.f_min,
        s.e_int,
        s.wall_seconds,
        out_dir.display()
    );
    outcome.check_invariants()
}

fn cmd_convergence(args: &ConvergenceArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let resolutions = parse_resolutions(&args.nv)?;
    let reference = parse_reference(&args.reference)?;
    let rows = convergence_study(&cfg, &resolutions, &reference)?;
    let mut stdout = std::io::stdout();
    write_convergence_csv(&rows, &mut stdout)?;
    if let Some(path) = &args.out {
        let mut f = fs::File::create(path)?;
        write_convergence_csv(&rows, &mut f)?;
    }
    Ok(())
}

fn cmd_oracle(cmd: &OracleCommand) -> Result<()> {
    match cmd {
        OracleCommand::Stationary {
            sigma2,
            nv,
            mean,
            out,
        } => {
            let domain = Domain::line(-1.0, 1.0)?;
            let grid = Arc::new(build_grid(&domain, &[1usize << *nv])?);
            let f = stationary_oracle(*sigma2, *mean, &grid)?;
            match out {
                Some(path) => {
                    let mut w = fs::File::create(path)?;
                    fpctl::fields::write_csv(&f, &mut w)?;
                }
                None => {
                    let mut w = std::io::stdout();
                    fpctl::fields::write_csv(&f, &mut w)?;
                }
            }
            Ok(())
        }
    }
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<()> {
    let cfg = if args.config == "default" {
        fpctl::harness::gradcheck_instance()
    } else {
        load_config(&args.config)?
    };
    let report = gradcheck(&cfg, args.eps, args.directions, args.seed)?;
    for (i, row) in report.rows.iter().enumerate() {
        println!(
            "direction {i}: fd {:.10e} adjoint {:.10e} rel {:.3e}",
            row.fd, row.adjoint, row.rel_err
        );
    }
    println!("worst rel {:.3e}", report.worst_rel);
    if report.worst_rel > 1e-3 {
        return Err(fpctl::Error::Config(format!(
            "gradient check failed: worst relative error {:.3e} > 1e-3",
            report.worst_rel
        )));
    }
    Ok(())
}

fn cmd_catalog(name: &Option<String>) -> Result<()> {
    match name {
        Some(n) => {
            let cfg = catalog(n)?;
            println!("{}", serde_json::to_string_pretty(&cfg)?);
        }
        None => {
            for n in CATALOG {
                println!("{n}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Oracle(cmd) => cmd_oracle(cmd),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::Catalog { name } => cmd_catalog(name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpctl: {e}");
            ExitCode::FAILURE
        }
    }
}
