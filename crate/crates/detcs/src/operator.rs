//! Uniform linear-operator view over dense and circulant-block matrices.
//!
//! The block path reduces Phi x to one circular convolution per block: with
//! G_j = DFT(gen_j) the apply accumulates G_j .* DFT(pad(x_j)) in the
//! frequency domain and inverts once; the adjoint correlates with
//! conj(G_j). Generator DFTs are precomputed at construction, per-call
//! buffers keep apply/adjoint safe to run concurrently.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::matgen::{shift_down, BlockCirculantMatrix, ConstructionParams, DenseMatrix};
use crate::{Error, Result};

enum Backing {
    Dense(DenseMatrix),
    Block {
        mat: BlockCirculantMatrix,
        /// DFT of each generator column.
        gen_ffts: Vec<Vec<Complex64>>,
        fft: Arc<dyn Fft<f64>>,
        ifft: Arc<dyn Fft<f64>>,
    },
}

pub struct SensingOperator {
    m: usize,
    n: usize,
    backing: Backing,
}

impl SensingOperator {
    pub fn from_dense(mat: DenseMatrix) -> Self {
        SensingOperator {
            m: mat.m,
            n: mat.n,
            backing: Backing::Dense(mat),
        }
    }

    pub fn from_block(mat: BlockCirculantMatrix) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(mat.m);
        let ifft = planner.plan_fft_inverse(mat.m);
        let gen_ffts = mat
            .generators
            .iter()
            .map(|g| {
                let mut buf = g.clone();
                fft.process(&mut buf);
                buf
            })
            .collect();
        SensingOperator {
            m: mat.m,
            n: mat.n,
            backing: Backing::Block {
                mat,
                gen_ffts,
                fft,
                ifft,
            },
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn is_block(&self) -> bool {
        matches!(self.backing, Backing::Block { .. })
    }

    pub fn params(&self) -> Option<ConstructionParams> {
        match &self.backing {
            Backing::Block { mat, .. } => mat.params,
            Backing::Dense(_) => None,
        }
    }

    /// y = Phi x.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        match &self.backing {
            Backing::Dense(mat) => mat.mul_vec(x),
            Backing::Block {
                mat,
                gen_ffts,
                fft,
                ifft,
            } => {
                let m = self.m;
                let mut acc = vec![Complex64::ZERO; m];
                let mut buf = vec![Complex64::ZERO; m];
                let mut offset = 0usize;
                for (gf, &len) in gen_ffts.iter().zip(&mat.block_lens) {
                    let slice = &x[offset..offset + len];
                    offset += len;
                    if slice.iter().all(|&z| z == Complex64::ZERO) {
                        continue;
                    }
                    buf[..len].copy_from_slice(slice);
                    buf[len..].fill(Complex64::ZERO);
                    fft.process(&mut buf);
                    for ((a, &g), &v) in acc.iter_mut().zip(gf).zip(buf.iter()) {
                        *a += g * v;
                    }
                }
                ifft.process(&mut acc);
                let inv_m = 1.0 / m as f64;
                for a in &mut acc {
                    *a *= inv_m;
                }
                Ok(acc)
            }
        }
    }

    /// z = Phi^H y.
    pub fn adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: y.len(),
            });
        }
        match &self.backing {
            Backing::Dense(mat) => mat.adjoint_mul_vec(y),
            Backing::Block {
                mat,
                gen_ffts,
                fft,
                ifft,
            } => {
                let m = self.m;
                let mut yf = y.to_vec();
                fft.process(&mut yf);
                let mut z = Vec::with_capacity(self.n);
                let mut buf = vec![Complex64::ZERO; m];
                let inv_m = 1.0 / m as f64;
                for (gf, &len) in gen_ffts.iter().zip(&mat.block_lens) {
                    for ((b, &g), &v) in buf.iter_mut().zip(gf).zip(yf.iter()) {
                        *b = g.conj() * v;
                    }
                    ifft.process(&mut buf);
                    z.extend(buf[..len].iter().map(|&v| v * inv_m));
                }
                Ok(z)
            }
        }
    }

    /// Column j as an owned vector.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        assert!(j < self.n);
        match &self.backing {
            Backing::Dense(mat) => mat.col(j).to_vec(),
            Backing::Block { mat, .. } => {
                let mut offset = 0usize;
                for (gen, &len) in mat.generators.iter().zip(&mat.block_lens) {
                    if j < offset + len {
                        return shift_down(gen, j - offset);
                    }
                    offset += len;
                }
                unreachable!("block lengths sum to n")
            }
        }
    }

    /// Explicit matrix realizing the same map.
    pub fn to_dense(&self) -> DenseMatrix {
        match &self.backing {
            Backing::Dense(mat) => mat.clone(),
            Backing::Block { mat, .. } => mat.to_dense(),
        }
    }

    /// Power-iteration estimate of the largest singular value.
    pub fn spectral_norm_estimate(&self, iters: usize, seed: u64) -> f64 {
        assert!(iters >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<Complex64> = (0..self.n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        let mut sigma_sq = 0.0f64;
        for _ in 0..iters {
            let norm = vec_norm(&v);
            if norm == 0.0 {
                return 0.0;
            }
            for z in &mut v {
                *z /= norm;
            }
            let w = self.apply(&v).expect("shape fixed");
            v = self.adjoint(&w).expect("shape fixed");
            sigma_sq = vec_norm(&v);
        }
        sigma_sq.sqrt()
    }
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(&x, &y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matgen::{generate_deterministic, generate_gaussian};
    use nalgebra::DMatrix;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im)
            })
            .collect()
    }

    fn identity_op(n: usize) -> SensingOperator {
        let mut mat = DenseMatrix::zeros(n, n);
        for j in 0..n {
            mat.col_mut(j)[j] = Complex64::new(1.0, 0.0);
        }
        mat.normalized = true;
        SensingOperator::from_dense(mat)
    }

    #[test]
    fn apply_zero_and_basis_vector() {
        let op = SensingOperator::from_block(generate_deterministic(3, 2, 2, 20).unwrap());
        let zero = vec![Complex64::ZERO; 20];
        assert!(op.apply(&zero).unwrap().iter().all(|&z| z == Complex64::ZERO));
        assert!(op.adjoint(&vec![Complex64::ZERO; 8]).unwrap().iter().all(|&z| z == Complex64::ZERO));

        let mut e0 = vec![Complex64::ZERO; 20];
        e0[0] = Complex64::new(1.0, 0.0);
        let y = op.apply(&e0).unwrap();
        let col0 = op.column(0);
        for (a, b) in y.iter().zip(&col0) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn fast_apply_matches_dense_oracle() {
        let blk = generate_deterministic(5, 2, 2, 125).unwrap();
        let dense = blk.to_dense();
        let op = SensingOperator::from_block(blk);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = random_vec(125, &mut rng);
            let fast = op.apply(&x).unwrap();
            let slow = dense.mul_vec(&x).unwrap();
            let err = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-9 * vec_norm(&x));
        }
    }

    #[test]
    fn fast_adjoint_matches_dense_oracle() {
        let blk = generate_deterministic(3, 2, 2, 48).unwrap();
        let dense = blk.to_dense();
        let op = SensingOperator::from_block(blk);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let y = random_vec(8, &mut rng);
            let fast = op.adjoint(&y).unwrap();
            let slow = dense.adjoint_mul_vec(&y).unwrap();
            let err = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-9 * vec_norm(&y));
        }
    }

    #[test]
    fn adjoint_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ops = [
            SensingOperator::from_block(generate_deterministic(3, 2, 2, 48).unwrap()),
            SensingOperator::from_dense(generate_gaussian(8, 48, 3).unwrap()),
        ];
        for op in &ops {
            for _ in 0..50 {
                let x = random_vec(48, &mut rng);
                let y = random_vec(8, &mut rng);
                let lhs = inner(&op.apply(&x).unwrap(), &y);
                let rhs = inner(&x, &op.adjoint(&y).unwrap());
                assert!((lhs - rhs).norm() <= 1e-9 * (vec_norm(&x) * vec_norm(&y)));
            }
        }
    }

    #[test]
    fn linearity() {
        let op = SensingOperator::from_block(generate_deterministic(5, 2, 2, 100).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let x = random_vec(100, &mut rng);
            let y = random_vec(100, &mut rng);
            let a = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            let b = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            let combo: Vec<Complex64> = x.iter().zip(&y).map(|(&u, &v)| a * u + b * v).collect();
            let lhs = op.apply(&combo).unwrap();
            let fx = op.apply(&x).unwrap();
            let fy = op.apply(&y).unwrap();
            for (l, (u, v)) in lhs.iter().zip(fx.iter().zip(&fy)) {
                assert!((l - (a * u + b * v)).norm() <= 1e-10 * (1.0 + l.norm()));
            }
        }
    }

    #[test]
    fn to_dense_consistency() {
        let blk = generate_deterministic(3, 2, 2, 48).unwrap();
        let op = SensingOperator::from_block(blk.clone());
        let dense = op.to_dense();
        // column t of block j equals shift(gen_j, t)
        let mut j = 0usize;
        for (gen, &len) in blk.generators.iter().zip(&blk.block_lens) {
            for t in 0..len {
                let expect = shift_down(gen, t);
                for (a, b) in dense.col(j).iter().zip(&expect) {
                    assert_eq!(a, b);
                }
                j += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let x = random_vec(48, &mut rng);
        let via_dense = dense.mul_vec(&x).unwrap();
        let fast = op.apply(&x).unwrap();
        for (a, b) in via_dense.iter().zip(&fast) {
            assert!((a - b).norm() <= 1e-9);
        }
    }

    #[test]
    fn deterministic_column_sets_agree_with_naive() {
        let op = SensingOperator::from_block(generate_deterministic(5, 2, 2, 624).unwrap());
        let dense = op.to_dense();
        let naive = crate::matgen::generate_naive(5, 2, 2, 624).unwrap();
        let mut used = vec![false; 624];
        for i in 0..624 {
            let found = (0..624).find(|&j| {
                !used[j]
                    && dense
                        .col(i)
                        .iter()
                        .zip(naive.col(j))
                        .all(|(a, b)| (a - b).norm() <= 1e-9)
            });
            used[found.expect("column missing from naive set")] = true;
        }
    }

    #[test]
    fn spectral_norm_identity_and_rank_one() {
        let op = identity_op(6);
        assert!((op.spectral_norm_estimate(30, 1) - 1.0).abs() <= 1e-6);

        // rank-1 u u^T with ||u|| = 2 has largest singular value 4
        let u: Vec<f64> = vec![1.2, -0.8, 0.6, 1.0, 0.4, 0.1, 0.9, 0.57];
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: Vec<f64> = u.iter().map(|v| 2.0 * v / norm).collect();
        let mut mat = DenseMatrix::zeros(8, 8);
        for j in 0..8 {
            for i in 0..8 {
                mat.col_mut(j)[i] = Complex64::new(u[i] * u[j], 0.0);
            }
        }
        let op = SensingOperator::from_dense(mat);
        assert!((op.spectral_norm_estimate(15, 2) - 4.0).abs() <= 1e-6);
    }

    #[test]
    fn spectral_norm_matches_svd_oracle() {
        let mat = generate_gaussian(24, 125, 21).unwrap();
        let dm = DMatrix::from_fn(24, 125, |i, j| mat.entry(i, j));
        let svd_max = dm.svd(false, false).singular_values[0];
        let op = SensingOperator::from_dense(mat);
        let est = op.spectral_norm_estimate(300, 3);
        assert!((est - svd_max).abs() <= 1e-4, "est {est} svd {svd_max}");
    }

    #[test]
    fn fast_apply_beats_dense_at_large_n() {
        use std::time::Instant;
        let blk = generate_deterministic(5, 2, 3, 2400).unwrap();
        let dense = blk.to_dense();
        let op = SensingOperator::from_block(blk);
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let x = random_vec(2400, &mut rng);

        let mut fast_best = f64::INFINITY;
        let mut dense_best = f64::INFINITY;
        for _ in 0..20 {
            let t = Instant::now();
            let _ = op.apply(&x).unwrap();
            fast_best = fast_best.min(t.elapsed().as_secs_f64());
            let t = Instant::now();
            let _ = dense.mul_vec(&x).unwrap();
            dense_best = dense_best.min(t.elapsed().as_secs_f64());
        }
        assert!(
            fast_best < dense_best,
            "fast {fast_best:.2e}s vs dense {dense_best:.2e}s"
        );
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let op = identity_op(4);
        assert!(matches!(
            op.apply(&[Complex64::ZERO; 3]),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
        assert!(matches!(
            op.adjoint(&[Complex64::ZERO; 5]),
            Err(Error::DimensionMismatch { expected: 4, got: 5 })
        ));
    }
}
