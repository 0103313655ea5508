//! Seeded Monte-Carlo experiments over the recovery algorithms.
//!
//! Every random draw is keyed by a seed derived from the master seed and the
//! trial coordinates (experiment tag, grid point, trial index), so results
//! are bit-identical regardless of how rayon schedules the trials.

use std::path::PathBuf;
use std::sync::Once;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::matgen::{generate_deterministic, generate_gaussian, load_user_matrix};
use crate::operator::{vec_norm, SensingOperator};
use crate::recover::Algorithm;
use crate::{Error, Result};

/// SNR values are clamped here; beyond it a recovery counts as exact.
pub const SNR_CAP_DB: f64 = 300.0;

const TAG_PHASE: u64 = 0x7068;
const TAG_SNR: u64 = 0x736e;
const TAG_SPARSITY: u64 = 0x7370;
const TAG_RATE: u64 = 0x7261;

// sub-streams within one trial
const SUB_MATRIX: u64 = 1;
const SUB_SIGNAL: u64 = 2;
const SUB_NOISE: u64 = 3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes the master seed with trial coordinates into an independent stream
/// seed. Order-sensitive and collision-resistant enough for seeding RNGs.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master ^ 0x6265_6e63), |acc, &p| {
            splitmix64(acc ^ p)
        })
}

/// Caps the rayon pool at DETCS_THREADS if the variable is set. First call
/// wins; later calls are no-ops.
pub fn init_threads() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        if let Some(t) = std::env::var("DETCS_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&t| t >= 1)
        {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    });
}

#[derive(Debug, Clone)]
pub struct SparseSignal {
    pub n: usize,
    /// Strictly increasing support indices.
    pub support: Vec<usize>,
    /// Values on the support, aligned with `support`.
    pub values: Vec<f64>,
}

impl SparseSignal {
    pub fn dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            x[j] = v;
        }
        x
    }

    pub fn dense_complex(&self) -> Vec<Complex64> {
        self.dense().iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }
}

/// k-sparse real signal: uniform support without replacement, N(0, var)
/// values.
pub fn gen_sparse_signal(n: usize, k: usize, var_signal: f64, seed: u64) -> Result<SparseSignal> {
    if k > n {
        return Err(Error::SparsityTooLarge { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support: Vec<usize> = rand::seq::index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let sd = var_signal.sqrt();
    let values = (0..k)
        .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    Ok(SparseSignal { n, support, values })
}

/// Adds real Gaussian noise scaled so that the realized SNR equals
/// `snr_in_db` exactly: kappa = sqrt(P_s / (SNR_lin * P_N)) with empirical
/// signal and noise powers (Eqs. (3)-(4) noise model).
pub fn add_noise(
    y: &[Complex64],
    snr_in_db: f64,
    var_noise: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let p_signal = y.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if p_signal == 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    if snr_in_db >= SNR_CAP_DB {
        return Ok(y.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = var_noise.sqrt();
    let noise: Vec<f64> = (0..y.len())
        .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    let p_noise = noise.iter().map(|v| v * v).sum::<f64>();
    if p_noise == 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    let snr_lin = 10f64.powf(snr_in_db / 10.0);
    let kappa = (p_signal / (snr_lin * p_noise)).sqrt();
    Ok(y.iter()
        .zip(&noise)
        .map(|(&z, &nv)| z + kappa * nv)
        .collect())
}

/// Output SNR in dB, 10 log10(||x||^2 / ||x - x_hat||^2), capped at
/// [`SNR_CAP_DB`].
pub fn snr_db(x_true: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x_true.len() != x_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: x_true.len(),
            got: x_hat.len(),
        });
    }
    let p_signal = x_true.iter().map(|v| v * v).sum::<f64>();
    if p_signal == 0.0 {
        return Err(Error::ZeroPowerSignal);
    }
    let p_err = x_true
        .iter()
        .zip(x_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>();
    if p_err == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (p_signal / p_err).log10()).min(SNR_CAP_DB))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    PhaseTransition,
    SnrCurve,
    SparsitySnr,
    RecoveryRate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PhaseTransition => "phase_transition",
            ExperimentKind::SnrCurve => "snr_curve",
            ExperimentKind::SparsitySnr => "sparsity_snr",
            ExperimentKind::RecoveryRate => "recovery_rate",
        }
    }

    pub fn csv_name(self) -> &'static str {
        match self {
            ExperimentKind::PhaseTransition => "pt.csv",
            ExperimentKind::SnrCurve => "snr_curve.csv",
            ExperimentKind::SparsitySnr => "sparsity_snr.csv",
            ExperimentKind::RecoveryRate => "recovery_rate.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Gaussian { m: usize, n: usize },
    Deterministic { p: u32, s: u32, d: u32, n: usize },
    User { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoSpec {
    pub name: String,
    pub algorithm: Algorithm,
    /// Enhanced variants run against the FFT-backed block operator.
    pub enhanced: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub source: MatrixSource,
    pub algos: Vec<AlgoSpec>,
    pub var_signal: f64,
    pub var_noise: f64,
    pub k: usize,
    pub snr_in_min: f64,
    pub snr_in_max: f64,
    /// Fixed input SNR; None means noiseless.
    pub snr_in: Option<f64>,
    /// Number of grid points on the swept axis of an SNR curve.
    pub plotting_precision: usize,
    pub sparsity_max: usize,
    pub trials: usize,
    /// Success threshold on SNRout in dB.
    pub threshold_db: f64,
    pub master_seed: u64,
    /// Step of the m grid in the phase transition.
    pub m_step: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PhaseCell {
    pub m: usize,
    pub k: usize,
    pub success_percent: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub n: usize,
    pub trials: usize,
    pub cells: Vec<PhaseCell>,
    pub wall_time: f64,
}

impl PhaseGrid {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,k,success_percent\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{}\n", c.m, c.k, c.success_percent));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub algorithm: String,
    pub values: Vec<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct CurveResult {
    /// CSV column name of the swept axis ("snr_in_db" or "k").
    pub x_name: &'static str,
    /// CSV column name of the aggregate ("mean_snr_out_db" or
    /// "success_percent").
    pub y_name: &'static str,
    pub xs: Vec<f64>,
    pub series: Vec<Series>,
    pub trials: usize,
    pub wall_time: f64,
}

impl CurveResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("algorithm,{},{}\n", self.x_name, self.y_name);
        for s in &self.series {
            for (&x, &v) in self.xs.iter().zip(&s.values) {
                out.push_str(&format!("{},{},{}\n", s.algorithm, x, v));
            }
        }
        out
    }
}

/// Builds trial operators: Gaussian sources draw a fresh matrix from the
/// trial seed, deterministic and user sources are built once and shared.
struct MatrixFactory {
    source: MatrixSource,
    dense_op: Option<SensingOperator>,
    block_op: Option<SensingOperator>,
    m: usize,
    n: usize,
}

impl MatrixFactory {
    fn new(source: &MatrixSource) -> Result<Self> {
        let (dense_op, block_op, m, n) = match source {
            MatrixSource::Gaussian { m, n } => {
                if *m < 1 || m > n {
                    return Err(Error::BadShape { m: *m, n: *n });
                }
                (None, None, *m, *n)
            }
            MatrixSource::Deterministic { p, s, d, n } => {
                let blk = generate_deterministic(*p, *s, *d, *n)?;
                let m = blk.m;
                let dense = SensingOperator::from_dense(blk.to_dense());
                let block = SensingOperator::from_block(blk);
                (Some(dense), Some(block), m, *n)
            }
            MatrixSource::User { path } => {
                let mat = load_user_matrix(path)?;
                let (m, n) = (mat.m, mat.n);
                (Some(SensingOperator::from_dense(mat)), None, m, n)
            }
        };
        Ok(MatrixFactory {
            source: source.clone(),
            dense_op,
            block_op,
            m,
            n,
        })
    }

    /// Operator for one trial. `enhanced` selects the FFT-backed path when a
    /// block construction exists.
    fn operator(&self, enhanced: bool, trial_seed: u64) -> Result<TrialOp<'_>> {
        match &self.source {
            MatrixSource::Gaussian { m, n } => {
                if enhanced {
                    return Err(Error::config(
                        "algorithms",
                        "enhanced algorithms require a deterministic matrix",
                    ));
                }
                Ok(TrialOp::Owned(SensingOperator::from_dense(
                    generate_gaussian(*m, *n, trial_seed)?,
                )))
            }
            _ => {
                let op = if enhanced {
                    self.block_op.as_ref().ok_or_else(|| {
                        Error::config(
                            "algorithms",
                            "enhanced algorithms require a deterministic matrix",
                        )
                    })?
                } else {
                    self.dense_op.as_ref().expect("dense operator always cached")
                };
                Ok(TrialOp::Shared(op))
            }
        }
    }
}

enum TrialOp<'a> {
    Owned(SensingOperator),
    Shared(&'a SensingOperator),
}

impl TrialOp<'_> {
    fn get(&self) -> &SensingOperator {
        match self {
            TrialOp::Owned(op) => op,
            TrialOp::Shared(op) => op,
        }
    }
}

/// One trial: draw signal (and noise), recover, return SNRout in dB.
#[allow(clippy::too_many_arguments)]
fn trial_snr(
    factory: &MatrixFactory,
    algo: &AlgoSpec,
    k: usize,
    snr_in: Option<f64>,
    cfg: &ExperimentConfig,
    tag: u64,
    point: u64,
    trial: u64,
) -> Result<f64> {
    let mseed = derive_seed(cfg.master_seed, &[tag, SUB_MATRIX, point, trial]);
    let op = factory.operator(algo.enhanced, mseed)?;
    let op = op.get();
    let sseed = derive_seed(cfg.master_seed, &[tag, SUB_SIGNAL, point, trial]);
    let x = gen_sparse_signal(factory.n, k, cfg.var_signal, sseed)?;
    let y = op.apply(&x.dense_complex())?;
    let y = match snr_in {
        Some(snr) if vec_norm(&y) > 0.0 => {
            let nseed = derive_seed(cfg.master_seed, &[tag, SUB_NOISE, point, trial]);
            add_noise(&y, snr, cfg.var_noise, nseed)?
        }
        _ => y,
    };
    let recon = algo.algorithm.run(op, &y, k)?;
    snr_db(&x.dense(), &recon.real_estimate())
}

fn require_algos(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.algos.is_empty() {
        return Err(Error::config("algorithms", "at least one algorithm section is required"));
    }
    if cfg.trials == 0 {
        return Err(Error::config("experiment.iteration", "must be >= 1"));
    }
    Ok(())
}

/// Success percentage over the (m, k) grid for the first configured
/// algorithm. Gaussian matrices are redrawn every trial.
pub fn run_phase_transition(cfg: &ExperimentConfig) -> Result<PhaseGrid> {
    init_threads();
    require_algos(cfg)?;
    let MatrixSource::Gaussian { n, .. } = cfg.source else {
        return Err(Error::config(
            "matrix.kind",
            "phase transition requires a gaussian matrix source",
        ));
    };
    let algo = &cfg.algos[0];
    if algo.enhanced {
        return Err(Error::config(
            "algorithms",
            "enhanced algorithms require a deterministic matrix",
        ));
    }
    let start = Instant::now();
    let step = cfg.m_step.max(1);
    let mut coords: Vec<(usize, usize)> = Vec::new();
    for m in (step..n).step_by(step) {
        for k in 1..m {
            coords.push((m, k));
        }
    }
    let cells: Vec<PhaseCell> = coords
        .par_iter()
        .map(|&(m, k)| -> Result<PhaseCell> {
            let factory = MatrixFactory::new(&MatrixSource::Gaussian { m, n })?;
            // fold m and k into the point id so cells get independent streams
            let point = (m as u64) << 32 | k as u64;
            let mut successes = 0usize;
            for trial in 0..cfg.trials as u64 {
                // phase transition is noiseless by contract
                let snr = trial_snr(&factory, algo, k, None, cfg, TAG_PHASE, point, trial)?;
                if snr >= cfg.threshold_db {
                    successes += 1;
                }
            }
            Ok(PhaseCell {
                m,
                k,
                success_percent: 100.0 * successes as f64 / cfg.trials as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseGrid {
        n,
        trials: cfg.trials,
        cells,
        wall_time: start.elapsed().as_secs_f64().max(1e-9),
    })
}

fn mean(vs: &[f64]) -> f64 {
    vs.iter().sum::<f64>() / vs.len() as f64
}

fn sweep(
    cfg: &ExperimentConfig,
    tag: u64,
    points: &[(f64, usize, Option<f64>)], // (x value, k, snr_in)
    x_name: &'static str,
    y_name: &'static str,
    aggregate_success: bool,
) -> Result<CurveResult> {
    init_threads();
    require_algos(cfg)?;
    let factory = MatrixFactory::new(&cfg.source)?;
    let kmax = points.iter().map(|p| p.1).max().unwrap_or(0);
    if kmax == 0 {
        return Err(Error::config("experiment.k", "sparsity k must be >= 1"));
    }
    if tag == TAG_SPARSITY || tag == TAG_RATE {
        if kmax >= factory.m {
            return Err(Error::config(
                "experiment.Sparsity_max",
                format!("Sparsity_max = {kmax} must be < m = {}", factory.m),
            ));
        }
    } else if kmax > factory.m {
        return Err(Error::config(
            "experiment.k",
            format!("k = {kmax} must not exceed m = {}", factory.m),
        ));
    }
    let start = Instant::now();
    let mut series = Vec::with_capacity(cfg.algos.len());
    for algo in &cfg.algos {
        let algo_start = Instant::now();
        let values: Vec<f64> = points
            .par_iter()
            .enumerate()
            .map(|(pi, &(_, k, snr_in))| -> Result<f64> {
                let snrs: Vec<f64> = (0..cfg.trials as u64)
                    .map(|trial| trial_snr(&factory, algo, k, snr_in, cfg, tag, pi as u64, trial))
                    .collect::<Result<Vec<_>>>()?;
                Ok(if aggregate_success {
                    100.0 * snrs.iter().filter(|&&s| s >= cfg.threshold_db).count() as f64
                        / snrs.len() as f64
                } else {
                    mean(&snrs)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        series.push(Series {
            algorithm: algo.name.clone(),
            values,
            wall_time: algo_start.elapsed().as_secs_f64().max(1e-9),
        });
    }
    Ok(CurveResult {
        x_name,
        y_name,
        xs: points.iter().map(|p| p.0).collect(),
        series,
        trials: cfg.trials,
        wall_time: start.elapsed().as_secs_f64().max(1e-9),
    })
}

/// Mean SNRout versus input SNR at fixed sparsity `k`, one series per
/// algorithm. The swept axis has `plotting_precision` equally spaced points
/// between SNRin_min and SNRin_max inclusive.
pub fn run_snr_curve(cfg: &ExperimentConfig) -> Result<CurveResult> {
    let np = cfg.plotting_precision;
    if np < 1 {
        return Err(Error::config("experiment.plotting_precision", "must be >= 1"));
    }
    if cfg.snr_in_min > cfg.snr_in_max {
        return Err(Error::config(
            "experiment.SNRin_min",
            "SNRin_min must not exceed SNRin_max",
        ));
    }
    let points: Vec<(f64, usize, Option<f64>)> = (0..np)
        .map(|i| {
            let x = if np == 1 {
                cfg.snr_in_min
            } else {
                cfg.snr_in_min + (cfg.snr_in_max - cfg.snr_in_min) * i as f64 / (np - 1) as f64
            };
            (x, cfg.k, Some(x))
        })
        .collect();
    sweep(cfg, TAG_SNR, &points, "snr_in_db", "mean_snr_out_db", false)
}

/// Mean SNRout versus sparsity k in 1..=Sparsity_max at fixed input SNR.
pub fn run_sparsity_snr(cfg: &ExperimentConfig) -> Result<CurveResult> {
    let snr_in = cfg.snr_in;
    let points: Vec<(f64, usize, Option<f64>)> = (1..=cfg.sparsity_max)
        .map(|k| (k as f64, k, snr_in))
        .collect();
    if points.is_empty() {
        return Err(Error::config("experiment.Sparsity_max", "must be >= 1"));
    }
    sweep(cfg, TAG_SPARSITY, &points, "k", "mean_snr_out_db", false)
}

/// Noiseless success percentage versus sparsity k in 1..=Sparsity_max.
pub fn run_recovery_rate(cfg: &ExperimentConfig) -> Result<CurveResult> {
    let points: Vec<(f64, usize, Option<f64>)> = (1..=cfg.sparsity_max)
        .map(|k| (k as f64, k, None))
        .collect();
    if points.is_empty() {
        return Err(Error::config("experiment.Sparsity_max", "must be >= 1"));
    }
    sweep(cfg, TAG_RATE, &points, "k", "success_percent", true)
}
