//! `chemorelax`: runs, sweeps, the Picard scheme, the invariant suite and
//! plots.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 anything
//! else (I/O).

mod report;

use anyhow::Context;
use chemorelax::harness::{run_check, run_picard, run_single, run_sweep, RunConfig, Solver};
use chemorelax::Error;
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "chemorelax",
    version,
    about = "Hyperbolic chemotaxis relaxation solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One hyperbolic run.
    Simulate(ConfigArgs),
    /// One run of the limit Keller–Segel system.
    Limit(ConfigArgs),
    /// Relaxation study over the run.epsilon list.
    Sweep(ConfigArgs),
    /// Picard iteration near the constant state.
    Picard(ConfigArgs),
    /// Invariant suite on small grids.
    Check(ConfigArgs),
    /// Render the CSVs in a directory to SVG plots.
    Report {
        /// Directory holding the CSVs (defaults to out.dir of the config).
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Plain-text `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    variant: Option<String>,
    /// Single value or a comma list.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long = "grid-n")]
    grid_n: Option<String>,
    #[arg(long = "final-time")]
    final_time: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "out-dir")]
    out_dir: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> chemorelax::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("variant", &self.variant),
            ("run.epsilon", &self.epsilon),
            ("grid.n", &self.grid_n),
            ("run.T", &self.final_time),
            ("ic.seed", &self.seed),
            ("out.dir", &self.out_dir),
        ];
        for s in &self.set {
            cfg.apply_override(s)?;
        }
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn simulate(args: &ConfigArgs, solver: Solver) -> anyhow::Result<()> {
    let cfg = args.resolve()?;
    let out = run_single(&cfg, solver)?;
    println!(
        "{} run: {} steps, min rho {:.6e}, mass drift {:.3e}, initial functional {:.6e}",
        match solver {
            Solver::Hyperbolic => "hyperbolic",
            Solver::Limit => "limit",
        },
        out.steps,
        out.min_rho,
        out.mass_drift,
        out.initial.for_variant(cfg.variant)
    );
    if let Some(g) = &out.gradc {
        println!(
            "grad c bound: J {:.6e}, calibrated C {:.6e}, coefficient {:.4}",
            g.j_value, g.calibration, g.coefficient
        );
    }
    println!(
        "wrote {} files to {}",
        out.files.len(),
        cfg.out.dir.display()
    );
    Ok(())
}

fn sweep(args: &ConfigArgs) -> anyhow::Result<()> {
    let cfg = args.resolve()?;
    let out = run_sweep(&cfg)?;
    std::fs::create_dir_all(&cfg.out.dir)?;
    std::fs::write(cfg.out.dir.join("config.txt"), cfg.to_text())?;
    let path = cfg.out.dir.join("sweep.csv");
    out.table
        .write_csv(BufWriter::new(File::create(&path)?))
        .with_context(|| format!("writing {}", path.display()))?;
    for row in &out.table.rows {
        match &row.errors {
            Ok(e) => println!(
                "eps {:<8} l2 {:.6e} order {}",
                row.epsilon,
                e.l2,
                row.order_l2
                    .map(|o| format!("{o:.3}"))
                    .unwrap_or_else(|| "-".into())
            ),
            Err(msg) => println!("eps {:<8} failed: {msg}", row.epsilon),
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn picard(args: &ConfigArgs) -> anyhow::Result<()> {
    let cfg = args.resolve()?;
    let out = run_picard(&cfg)?;
    for r in &out.records {
        println!(
            "iter {:>3} norm {:.6e} diff {:.6e} min rho {:.6}",
            r.iter, r.sup_norm_weighted, r.diff_norm, r.min_rho
        );
    }
    println!(
        "{} after {} iterates (lambda {:.4}, coercivity {:.4})",
        if out.converged {
            "converged"
        } else {
            "not converged"
        },
        out.records.len(),
        out.lambda,
        out.coercivity
    );
    if !out.converged {
        return Err(Error::Precondition(format!(
            "no convergence within {} iterates",
            cfg.picard.max_iters
        ))
        .into());
    }
    Ok(())
}

/// Check failures exit with the numerical-failure code.
struct ChecksFailed(usize);

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::fmt::Debug for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

impl std::error::Error for ChecksFailed {}

fn check(args: &ConfigArgs) -> anyhow::Result<()> {
    let cfg = args.resolve()?;
    let out = run_check(&cfg)?;
    for i in &out.items {
        println!(
            "{} {:<36} {:.3e} (<= {:.1e})",
            if i.pass { "PASS" } else { "FAIL" },
            i.name,
            i.value,
            i.threshold
        );
    }
    let failed = out.items.iter().filter(|i| !i.pass).count();
    if failed > 0 {
        return Err(ChecksFailed(failed).into());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ChecksFailed>().is_some() {
        return 3;
    }
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 3,
        Some(Error::Io(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, Solver::Hyperbolic),
        Command::Limit(a) => simulate(a, Solver::Limit),
        Command::Sweep(a) => sweep(a),
        Command::Picard(a) => picard(a),
        Command::Check(a) => check(a),
        Command::Report { input, config } => config
            .resolve()
            .map_err(anyhow::Error::from)
            .and_then(|cfg| report::render_dir(input.as_deref().unwrap_or(&cfg.out.dir))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
