use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use msem_flow::config::{parse_list, RunConfig};
use msem_flow::io;
use msem_flow::Error;

#[derive(Parser)]
#[command(name = "msem-flow", version, about = "Space-time spectral element solver for Lagrangian barotropic flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Solve(SolveArgs),
    /// Run one configuration per spatial order and compare boundaries.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long = "t-order")]
    t_order: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "t-final")]
    t_final: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated snapshot times in seconds.
    #[arg(long)]
    snapshots: Option<String>,
    /// Samples per direction in snapshot files.
    #[arg(long)]
    resolution: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated spatial orders, e.g. 2,3,4,5.
    #[arg(long)]
    orders: String,
    #[arg(long)]
    out: Option<String>,
}

impl SolveArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        [
            ("alpha", &self.alpha),
            ("order", &self.order),
            ("t_order", &self.t_order),
            ("dt", &self.dt),
            ("t_final", &self.t_final),
            ("tol", &self.tol),
            ("out_dir", &self.out),
            ("snapshots", &self.snapshots),
            ("sample_resolution", &self.resolution),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }
}

fn solve(args: &SolveArgs) -> Result<(), Error> {
    let cfg = RunConfig::load(&args.config, &args.overrides())?;
    let s = io::run(&cfg)?;
    let (first, last) = (s.records[0], s.records[s.records.len() - 1]);
    println!(
        "{} slabs in {:.2} s; max Picard iterations {}; |dE_tot| = {:.3e}; max Mach {:.4}",
        s.records.len() - 1,
        s.wall_seconds,
        s.records.iter().map(|r| r.picard_iters).max().unwrap_or(0),
        (last.e_tot - first.e_tot).abs(),
        s.max_mach
    );
    println!("output in {}", cfg.out_dir.display());
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Error> {
    let mut overrides = Vec::new();
    if let Some(out) = &args.out {
        overrides.push(("out_dir".to_string(), out.clone()));
    }
    let cfg = RunConfig::load(&args.config, &overrides)?;
    let orders: Vec<usize> = parse_list("orders", &args.orders)?;
    let s = io::sweep(&cfg, &orders)?;
    for r in &s.rows {
        println!(
            "t = {}: N = {} vs {}: max boundary difference {:.3e}",
            io::fmt_time(r.t),
            r.order_a,
            r.order_b,
            r.max_boundary_diff
        );
    }
    for (order, e) in &s.failures {
        eprintln!("order {order} failed: {e}");
    }
    match s.failures.into_iter().next() {
        Some((_, e)) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
