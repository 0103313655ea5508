//! Sensing-matrix construction.
//!
//! Two sources: seeded Gaussian matrices with unit-norm columns, and
//! deterministic circulant-block matrices built from trace-exponential sums
//! over GF(p^s). Columns of the deterministic matrix are indexed by nonzero
//! coefficient vectors a = (a_1 .. a_d) over GF(q):
//!
//!   Phi[t, a] = (1/sqrt(m)) * omega_p ^ Tr(a_1 g^t + a_2 g^{2t} + ... + a_d g^{dt})
//!
//! with m = q - 1 rows and omega_p the primitive p-th root of unity. A cyclic
//! shift of the row index maps a_j to a_j g^{-j}, so the column universe
//! splits into shift-orbits: exactly the block structure the fast operator
//! exploits. The naive method materializes columns and sorts them by shift
//! search; the signature method discovers whole orbits up front and
//! deduplicates candidates by DFT-magnitude signatures.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::galois::{build_field, FieldTable};
use crate::{Error, Result};

/// Elementwise tolerance when matching a column against a cyclic shift.
pub const SHIFT_MATCH_TOL: f64 = 1e-9;
/// Elementwise tolerance when matching DFT-magnitude signatures.
pub const SIGNATURE_TOL: f64 = 1e-8;

/// Explicit m x n complex matrix, column-major.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    pub m: usize,
    pub n: usize,
    entries: Vec<Complex64>,
    pub normalized: bool,
}

impl DenseMatrix {
    pub fn from_columns(m: usize, cols: Vec<Vec<Complex64>>, normalized: bool) -> Self {
        let n = cols.len();
        let mut entries = Vec::with_capacity(m * n);
        for c in &cols {
            assert_eq!(c.len(), m);
            entries.extend_from_slice(c);
        }
        DenseMatrix {
            m,
            n,
            entries,
            normalized,
        }
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        DenseMatrix {
            m,
            n,
            entries: vec![Complex64::ZERO; m * n],
            normalized: false,
        }
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.entries[j * self.m..(j + 1) * self.m]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.entries[j * self.m..(j + 1) * self.m]
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[j * self.m + i]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Scale every column to unit l2 norm.
    pub fn normalize_columns(&mut self) {
        for j in 0..self.n {
            let norm = self.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                for z in self.col_mut(j) {
                    *z /= norm;
                }
            }
        }
        self.normalized = true;
    }

    /// y = A x (dense reference path).
    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut y = vec![Complex64::ZERO; self.m];
        for (j, &xj) in x.iter().enumerate() {
            if xj == Complex64::ZERO {
                continue;
            }
            for (yi, &aij) in y.iter_mut().zip(self.col(j)) {
                *yi += aij * xj;
            }
        }
        Ok(y)
    }

    /// z = A^H y (conjugate transpose).
    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: y.len(),
            });
        }
        let mut z = vec![Complex64::ZERO; self.n];
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = self
                .col(j)
                .iter()
                .zip(y)
                .map(|(&a, &yi)| a.conj() * yi)
                .sum();
        }
        Ok(z)
    }
}

/// Parameters of the trace construction behind a block matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstructionParams {
    pub p: u32,
    pub s: u32,
    pub d: u32,
    pub n: usize,
}

/// Sorted deterministic matrix: one generator column per block, each block
/// holding successive downward cyclic shifts of its generator.
#[derive(Clone, Debug)]
pub struct BlockCirculantMatrix {
    pub m: usize,
    pub n: usize,
    pub generators: Vec<Vec<Complex64>>,
    pub block_lens: Vec<usize>,
    pub params: Option<ConstructionParams>,
}

impl BlockCirculantMatrix {
    /// Materialize the explicit matrix realizing the same map.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut cols = Vec::with_capacity(self.n);
        for (gen, &len) in self.generators.iter().zip(&self.block_lens) {
            for t in 0..len {
                cols.push(shift_down(gen, t));
            }
        }
        DenseMatrix::from_columns(self.m, cols, true)
    }
}

/// DFT-magnitude signature of a column; identical for all cyclic shifts.
#[derive(Clone, Debug)]
pub struct SignatureVec {
    pub mags: Vec<f64>,
}

/// Monte-Carlo restricted-isometry estimate.
#[derive(Clone, Copy, Debug)]
pub struct RipEstimate {
    pub k: usize,
    pub delta_hat: f64,
    pub trials: usize,
}

/// Cyclic shift down by `t`: out[i] = v[(i - t) mod m].
pub fn shift_down(v: &[Complex64], t: usize) -> Vec<Complex64> {
    let m = v.len();
    let t = t % m;
    let mut out = Vec::with_capacity(m);
    out.extend_from_slice(&v[m - t..]);
    out.extend_from_slice(&v[..m - t]);
    out
}

fn cols_match(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x.re - y.re).abs() <= tol && (x.im - y.im).abs() <= tol)
}

/// Seeded Gaussian matrix with unit-norm columns.
pub fn generate_gaussian(m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    if m < 1 || m > n {
        return Err(Error::BadShape { m, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mat = DenseMatrix::zeros(m, n);
    for j in 0..n {
        for z in mat.col_mut(j) {
            let re: f64 = StandardNormal.sample(&mut rng);
            *z = Complex64::new(re, 0.0);
        }
    }
    mat.normalize_columns();
    Ok(mat)
}

/// Shared context for evaluating trace-exponential columns.
struct TraceContext {
    ft: FieldTable,
    d: u32,
    m: usize,
    universe: u64,
    /// omega_p^r / sqrt(m) for r in [0, p).
    omega: Vec<Complex64>,
}

impl TraceContext {
    fn new(p: u32, s: u32, d: u32, n: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::config("degree", "d must be >= 1"));
        }
        let ft = build_field(p, s)?;
        let q = ft.q() as u64;
        let universe = q
            .checked_pow(d)
            .map(|u| u - 1)
            .ok_or(Error::FieldTooLarge(u64::MAX))?;
        if n as u64 > universe {
            return Err(Error::UniverseExhausted {
                requested: n,
                available: universe.min(usize::MAX as u64) as usize,
            });
        }
        let m = (ft.q() - 1) as usize;
        let scale = 1.0 / (m as f64).sqrt();
        let omega = (0..p)
            .map(|r| {
                let theta = 2.0 * std::f64::consts::PI * r as f64 / p as f64;
                Complex64::from_polar(scale, theta)
            })
            .collect();
        Ok(TraceContext {
            ft,
            d,
            m,
            universe,
            omega,
        })
    }

    /// Coefficient vector (a_1 .. a_d) of a column code, a_1 most significant.
    fn coeffs_of(&self, code: u64) -> Vec<u32> {
        let q = self.ft.q() as u64;
        let mut c = code;
        let mut out = vec![0u32; self.d as usize];
        for j in (0..self.d as usize).rev() {
            out[j] = (c % q) as u32;
            c /= q;
        }
        out
    }

    /// Column of the matrix for one coefficient vector.
    fn column(&self, coeffs: &[u32]) -> Vec<Complex64> {
        let ft = &self.ft;
        let order = ft.order() as u64;
        // precompute logs of the nonzero coefficients
        let logs: Vec<(u64, u64)> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(j, &a)| ((j + 1) as u64, ft.log_of(a) as u64))
            .collect();
        (0..self.m as u64)
            .map(|t| {
                let mut sum = 0u32;
                for &(j, la) in &logs {
                    sum = ft.add_codes(sum, ft.exp_at((la + j * t) % order));
                }
                self.omega[ft.trace_code(sum) as usize]
            })
            .collect()
    }
}

/// Method-1 input: the unsorted dense matrix, columns enumerated by
/// increasing coefficient code (a_1 the most significant base-q digit).
pub fn generate_naive(p: u32, s: u32, d: u32, n: usize) -> Result<DenseMatrix> {
    let ctx = TraceContext::new(p, s, d, n)?;
    let cols = (1..=n as u64)
        .map(|code| ctx.column(&ctx.coeffs_of(code)))
        .collect();
    Ok(DenseMatrix::from_columns(ctx.m, cols, true))
}

/// Method 1: group columns into circulant blocks by exhaustive shift search.
///
/// Repeatedly takes the first unassigned column as a block generator, then for
/// each successive cyclic shift scans the remaining columns for a match
/// (elementwise within [`SHIFT_MATCH_TOL`]); matches chain into the block and
/// leave the pool. A block closes at the first missing shift, so columns with
/// no shift-partners form singleton blocks and the total count is preserved.
pub fn sort_into_blocks(dense: &DenseMatrix) -> BlockCirculantMatrix {
    let m = dense.m;
    let mut alive = vec![true; dense.n];
    let mut generators = Vec::new();
    let mut block_lens = Vec::new();
    for start in 0..dense.n {
        if !alive[start] {
            continue;
        }
        alive[start] = false;
        let gen = dense.col(start).to_vec();
        let mut len = 1usize;
        for t in 1..m {
            let shifted = shift_down(&gen, t);
            let found = (0..dense.n)
                .find(|&j| alive[j] && cols_match(&shifted, dense.col(j), SHIFT_MATCH_TOL));
            match found {
                Some(j) => {
                    alive[j] = false;
                    len += 1;
                }
                None => break,
            }
        }
        generators.push(gen);
        block_lens.push(len);
    }
    BlockCirculantMatrix {
        m,
        n: dense.n,
        generators,
        block_lens,
        params: None,
    }
}

/// Elementwise magnitude of the column's DFT.
pub fn block_signature(column: &[Complex64]) -> SignatureVec {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(column.len());
    let mut buf = column.to_vec();
    fft.process(&mut buf);
    SignatureVec {
        mags: buf.iter().map(|z| z.norm()).collect(),
    }
}

fn sig_matches(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Smallest t > 0 with shift_down(v, t) == v; always divides v.len().
fn orbit_period(v: &[Complex64]) -> usize {
    let m = v.len();
    for t in 1..m {
        if m % t == 0 && cols_match(&shift_down(v, t), v, 0.0) {
            return t;
        }
    }
    m
}

/// Method 2: build the sorted matrix directly, deduplicating candidate
/// columns by DFT-magnitude signature.
///
/// Candidates are enumerated in the same coefficient-code order as
/// [`generate_naive`]. A candidate whose signature matches a stored block
/// signature (within [`SIGNATURE_TOL`]) is confirmed against every cyclic
/// shift of that block's generator and discarded only on an exact-shift
/// confirmation, so signature collisions between distinct orbits never drop
/// a column. New candidates emit their whole shift-orbit; the final orbit is
/// truncated once n columns are out.
pub fn generate_deterministic(p: u32, s: u32, d: u32, n: usize) -> Result<BlockCirculantMatrix> {
    let ctx = TraceContext::new(p, s, d, n)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(ctx.m);
    let mut scratch = vec![Complex64::ZERO; ctx.m];

    let mut generators: Vec<Vec<Complex64>> = Vec::new();
    let mut signatures: Vec<Vec<f64>> = Vec::new();
    let mut block_lens: Vec<usize> = Vec::new();
    let mut emitted = 0usize;

    let mut code = 1u64;
    while emitted < n && code <= ctx.universe {
        let col = ctx.column(&ctx.coeffs_of(code));
        code += 1;

        scratch.copy_from_slice(&col);
        fft.process(&mut scratch);
        let sig: Vec<f64> = scratch.iter().map(|z| z.norm()).collect();

        let duplicate = generators
            .iter()
            .zip(&signatures)
            .filter(|(_, stored)| sig_matches(&sig, stored, SIGNATURE_TOL))
            .any(|(gen, _)| {
                (0..ctx.m).any(|t| cols_match(&shift_down(gen, t), &col, SHIFT_MATCH_TOL))
            });
        if duplicate {
            continue;
        }

        let period = orbit_period(&col);
        let take = period.min(n - emitted);
        emitted += take;
        generators.push(col);
        signatures.push(sig);
        block_lens.push(take);
    }

    if emitted < n {
        return Err(Error::UniverseExhausted {
            requested: n,
            available: emitted,
        });
    }
    Ok(BlockCirculantMatrix {
        m: ctx.m,
        n,
        generators,
        block_lens,
        params: Some(ConstructionParams { p, s, d, n }),
    })
}

/// Maximum absolute inner product between distinct unit-norm columns.
pub fn coherence(mat: &DenseMatrix) -> Result<f64> {
    if mat.n < 2 {
        return Err(Error::BadShape { m: mat.m, n: mat.n });
    }
    if !mat.normalized {
        return Err(Error::Unnormalized);
    }
    let mut max = 0.0f64;
    for i in 0..mat.n {
        for j in i + 1..mat.n {
            let ip: Complex64 = mat
                .col(i)
                .iter()
                .zip(mat.col(j))
                .map(|(&a, &b)| a.conj() * b)
                .sum();
            max = max.max(ip.norm());
        }
    }
    Ok(max)
}

/// Monte-Carlo estimate of the restricted-isometry constant delta_k:
/// the worst relative distortion of ||Phi x||^2 over sampled k-sparse
/// unit vectors with uniform support and Gaussian values.
pub fn rip_estimate(mat: &DenseMatrix, k: usize, trials: usize, seed: u64) -> Result<RipEstimate> {
    if k < 1 || k > mat.n {
        return Err(Error::SparsityTooLarge { k, n: mat.n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta_hat = 0.0f64;
    for _ in 0..trials.max(1) {
        let support = rand::seq::index::sample(&mut rng, mat.n, k);
        let mut x = vec![Complex64::ZERO; mat.n];
        let mut norm_sq = 0.0;
        for idx in support {
            let v: f64 = StandardNormal.sample(&mut rng);
            x[idx] = Complex64::new(v, 0.0);
            norm_sq += v * v;
        }
        if norm_sq == 0.0 {
            continue;
        }
        let y = mat.mul_vec(&x)?;
        let ratio = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / norm_sq;
        delta_hat = delta_hat.max((ratio - 1.0).abs());
    }
    Ok(RipEstimate {
        k,
        delta_hat,
        trials,
    })
}

/// Read a matrix file (see the `matio` format) into dense form, densifying
/// block-circulant files.
pub fn load_user_matrix(path: &std::path::Path) -> Result<DenseMatrix> {
    match crate::matio::read_matrix(path)? {
        crate::matio::MatrixFile::Dense(d) => Ok(d),
        crate::matio::MatrixFile::Block(b) => Ok(b.to_dense()),
    }
}
