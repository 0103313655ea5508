//! `detcs` — generate deterministic sensing matrices, run seeded recovery
//! experiments, and plot the resulting CSVs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use detcs::bench::{
    run_phase_transition, run_recovery_rate, run_snr_curve, run_sparsity_snr, ExperimentKind,
};
use detcs::config::{choose_degree, parse_config};
use detcs::matgen::{
    coherence, generate_deterministic, generate_naive, sort_into_blocks, BlockCirculantMatrix,
    ConstructionParams,
};
use detcs::{matio, plot, Error, Result};

#[derive(Parser)]
#[command(name = "detcs", version, about = "Deterministic compressed sensing toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Enumerate trace-exponential columns, then sort them into circulant
    /// blocks by shift search.
    NaiveSort,
    /// Emit one generator per orbit, deduplicated by FFT-magnitude
    /// signature.
    FftSignature,
}

impl Method {
    fn label(self) -> &'static str {
        match self {
            Method::NaiveSort => "naive-sort",
            Method::FftSignature => "fft-signature",
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a deterministic circulant-block matrix and write it to a file.
    GenMatrix {
        /// Prime characteristic of the base field.
        #[arg(long)]
        p: u32,
        /// Extension degree of GF(p^s).
        #[arg(long, default_value_t = 2)]
        s: u32,
        /// Coherence budget; the coefficient degree is d = 1 + floor(mu).
        #[arg(long, conflicts_with = "degree")]
        mu: Option<f64>,
        /// Coefficient degree d, overriding --mu.
        #[arg(long)]
        degree: Option<u32>,
        /// Number of columns.
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Method::FftSignature)]
        method: Method,
        /// Output matrix file.
        #[arg(long)]
        out: PathBuf,
        /// Also run the other method and verify both produce the same
        /// column set.
        #[arg(long)]
        check: bool,
    },
    /// Run the experiment described by a config file and write CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the CSV outputs (created if missing).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Render a result CSV as an SVG chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn build_matrix(p: u32, s: u32, d: u32, n: usize, method: Method) -> Result<BlockCirculantMatrix> {
    match method {
        Method::FftSignature => generate_deterministic(p, s, d, n),
        Method::NaiveSort => {
            let dense = generate_naive(p, s, d, n)?;
            let mut blk = sort_into_blocks(&dense);
            blk.params = Some(ConstructionParams { p, s, d, n });
            Ok(blk)
        }
    }
}

/// Multiset equality of columns up to 1e-9 per entry.
fn same_column_set(a: &BlockCirculantMatrix, b: &BlockCirculantMatrix) -> bool {
    let da = a.to_dense();
    let db = b.to_dense();
    if da.n != db.n || da.m != db.m {
        return false;
    }
    let close = |x: &[Complex64], y: &[Complex64]| {
        x.iter().zip(y).all(|(u, v)| (u - v).norm() <= 1e-9)
    };
    let mut used = vec![false; db.n];
    (0..da.n).all(|i| {
        match (0..db.n).find(|&j| !used[j] && close(da.col(i), db.col(j))) {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

fn cmd_gen_matrix(
    p: u32,
    s: u32,
    mu: Option<f64>,
    degree: Option<u32>,
    n: usize,
    method: Method,
    out: &Path,
    check: bool,
) -> Result<()> {
    let d = match (degree, mu) {
        (Some(d), _) => d,
        (None, Some(mu)) => choose_degree(mu)?,
        (None, None) => {
            return Err(Error::config("--mu/--degree", "one of --mu or --degree is required"))
        }
    };
    if d < 1 {
        return Err(Error::config("--degree", "degree must be >= 1"));
    }
    let start = Instant::now();
    let blk = build_matrix(p, s, d, n, method)?;
    let wall = start.elapsed().as_secs_f64();
    let mu_hat = coherence(&blk.to_dense())?;
    matio::write_block(out, &blk)?;
    println!(
        "method={} m={} n={} blocks={} coherence={:.6} wall_time={:.3}s",
        method.label(),
        blk.m,
        blk.n,
        blk.block_lens.len(),
        mu_hat,
        wall
    );
    if check {
        let other = match method {
            Method::NaiveSort => Method::FftSignature,
            Method::FftSignature => Method::NaiveSort,
        };
        let alt = build_matrix(p, s, d, n, other)?;
        if same_column_set(&blk, &alt) {
            println!("check: column sets identical across methods");
        } else {
            return Err(Error::Io(std::io::Error::other(
                "check failed: the two methods produced different column sets \
                 (n truncates an orbit; retry with n = q^d - 1 or a block-aligned n)",
            )));
        }
    }
    Ok(())
}

fn write_meta(out_dir: &Path, seed: u64, trials: usize, wall_time: f64) -> Result<()> {
    let text = format!("key,value\nseed,{seed}\ntrials,{trials}\nwall_time,{wall_time}\n");
    std::fs::write(out_dir.join("run_meta.csv"), text)?;
    Ok(())
}

fn cmd_run(config_path: &Path, out_dir: &Path) -> Result<()> {
    let cfg = parse_config(config_path)?;
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(cfg.kind.csv_name());
    match cfg.kind {
        ExperimentKind::PhaseTransition => {
            let grid = run_phase_transition(&cfg)?;
            std::fs::write(&csv_path, grid.to_csv())?;
            write_meta(out_dir, cfg.master_seed, grid.trials, grid.wall_time)?;
        }
        kind => {
            let res = match kind {
                ExperimentKind::SnrCurve => run_snr_curve(&cfg)?,
                ExperimentKind::SparsitySnr => run_sparsity_snr(&cfg)?,
                ExperimentKind::RecoveryRate => run_recovery_rate(&cfg)?,
                ExperimentKind::PhaseTransition => unreachable!(),
            };
            std::fs::write(&csv_path, res.to_csv())?;
            write_meta(out_dir, cfg.master_seed, res.trials, res.wall_time)?;
        }
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::GenMatrix {
            p,
            s,
            mu,
            degree,
            n,
            method,
            out,
            check,
        } => cmd_gen_matrix(p, s, mu, degree, n, method, &out, check),
        Cmd::Run { config, out_dir } => cmd_run(&config, &out_dir),
        Cmd::Plot { csv, out } => plot::plot_file(&csv, &out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = real_main(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
