//! Second-order moments and the regression objective.
//!
//! Everything here is phrased in terms of the moment matrices
//! V_xx = E[x x^T], V_xz = E[x z^T] and the trace of V_zz. A reduction
//! y = P x is scored by
//!
//! ```text
//!   J(P) = tr( V_zx P^T (P V_xx P^T)^-1 P V_xz )
//! ```
//!
//! which is the part of E||z||^2 explained by the best linear regression
//! from y to z. Larger J means smaller mean-squared regression error;
//! `normalized_loss` maps J onto [0, 1] with 0 = perfect regression.
//!
//! This module is the slow, trusted evaluation path. The swap engine's
//! accelerated updates are tested against it.

use crate::error::{Error, Result};
use crate::matrix::{cholesky, chol_solve_in_place, dot, spd_inverse, CrossMatrix, Mat, SymMatrix};

/// An ordered set of K distinct element indices (0-based, < n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() || indices.len() > n {
            return Err(Error::Config(format!(
                "index set size {} out of range for dimension {n}",
                indices.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(Error::Config(format!(
                    "index {i} out of range for dimension {n}"
                )));
            }
            if seen[i] {
                return Err(Error::Config(format!("duplicate index {i} in index set")));
            }
            seen[i] = true;
        }
        Ok(IndexSet { indices })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    /// 1-based, ascending — the convention for all user-facing output.
    pub fn to_one_based_sorted(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.indices.iter().map(|&i| i + 1).collect();
        v.sort_unstable();
        v
    }

    /// Parse 1-based indices (as read from a report) back to an IndexSet.
    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self> {
        let zero: Result<Vec<usize>> = indices
            .iter()
            .map(|&i| {
                if i == 0 {
                    Err(Error::Config("1-based index cannot be 0".into()))
                } else {
                    Ok(i - 1)
                }
            })
            .collect();
        IndexSet::new(zero?, n)
    }

    /// 0/1 selection encoder: row r has a single 1 at column indices[r].
    pub fn to_encoder(&self, n: usize) -> Mat {
        let mut p = Mat::zeros(self.indices.len(), n);
        for (r, &c) in self.indices.iter().enumerate() {
            p.set(r, c, 1.0);
        }
        p
    }
}

/// What produced a reduction model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Selection,
    Pca,
    RandomProjection,
    Variance,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Selection => "selection",
            ModelKind::Pca => "pca",
            ModelKind::RandomProjection => "random-projection",
            ModelKind::Variance => "variance",
        }
    }
}

/// A linear reduction y = P x together with the regression-optimal decoder
/// Q0 and the data mean. Selection, PCA, random projection and the
/// variance baseline all fit this shape, which keeps evaluation and
/// reconstruction code uniform.
#[derive(Clone, Debug)]
pub struct ReductionModel {
    pub encoder: Mat,
    pub decoder: Mat,
    pub mean: Vec<f64>,
    pub kind: ModelKind,
}

impl ReductionModel {
    pub fn new(
        encoder: Mat,
        decoder: Mat,
        mean: Vec<f64>,
        kind: ModelKind,
    ) -> Result<Self> {
        if decoder.cols() != encoder.rows() {
            return Err(Error::Dim(format!(
                "decoder is {}x{} but encoder produces {} components",
                decoder.rows(),
                decoder.cols(),
                encoder.rows()
            )));
        }
        if encoder.cols() != mean.len() {
            return Err(Error::Dim(format!(
                "encoder expects dimension {}, mean has {}",
                encoder.cols(),
                mean.len()
            )));
        }
        let model = ReductionModel {
            encoder,
            decoder,
            mean,
            kind,
        };
        if matches!(kind, ModelKind::Selection | ModelKind::Variance) {
            model.check_selection_encoder()?;
        }
        Ok(model)
    }

    /// Selection model over `sel`, with the optimal decoder for (vxx, vxz).
    pub fn from_selection(
        sel: &IndexSet,
        vxx: &SymMatrix,
        vxz: &CrossMatrix,
        mean: Vec<f64>,
        kind: ModelKind,
    ) -> Result<Self> {
        let encoder = sel.to_encoder(vxx.order());
        let decoder = optimal_decoder(vxx, vxz, &encoder)?;
        ReductionModel::new(encoder, decoder, mean, kind)
    }

    pub fn reduced_dim(&self) -> usize {
        self.encoder.rows()
    }

    /// Every row must contain exactly one 1 (rest 0) and no two rows may
    /// share a column — the defining shape of a selection matrix.
    pub fn check_selection_encoder(&self) -> Result<()> {
        let mut used = vec![false; self.encoder.cols()];
        for r in 0..self.encoder.rows() {
            let mut ones = 0usize;
            let mut col = 0usize;
            for (c, &v) in self.encoder.row(r).iter().enumerate() {
                if v == 1.0 {
                    ones += 1;
                    col = c;
                } else if v != 0.0 {
                    return Err(Error::Config(format!(
                        "selection encoder row {r} has non-binary entry {v}"
                    )));
                }
            }
            if ones != 1 {
                return Err(Error::Config(format!(
                    "selection encoder row {r} has {ones} ones (want exactly 1)"
                )));
            }
            if used[col] {
                return Err(Error::Config(format!(
                    "selection encoder reuses column {col}"
                )));
            }
            used[col] = true;
        }
        Ok(())
    }

    /// The selected indices, if this is a selection-shaped model.
    pub fn selected_indices(&self) -> Option<Vec<usize>> {
        if !matches!(self.kind, ModelKind::Selection | ModelKind::Variance) {
            return None;
        }
        let mut idx = Vec::with_capacity(self.encoder.rows());
        for r in 0..self.encoder.rows() {
            let c = self.encoder.row(r).iter().position(|&v| v == 1.0)?;
            idx.push(c);
        }
        Some(idx)
    }
}

/// Gram matrix P V_xx P^T of the reduced vector.
fn reduced_gram(vxx: &SymMatrix, p: &Mat) -> Mat {
    let n = vxx.order();
    assert_eq!(p.cols(), n, "encoder width must match moment order");
    let pv = p.matmul(&vxx.to_mat()); // K x N
    let k = p.rows();
    let mut gram = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = dot(pv.row(i), p.row(j));
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    gram
}

/// The regression objective J(P) for a general linear encoder.
pub fn objective(vxx: &SymMatrix, vxz: &CrossMatrix, p: &Mat) -> Result<f64> {
    if vxz.rows() != vxx.order() {
        return Err(Error::Dim(format!(
            "cross moments have {} rows, input moments order {}",
            vxz.rows(),
            vxx.order()
        )));
    }
    let gram = reduced_gram(vxx, p);
    let c = p.matmul(&vxz.to_mat()); // K x M = P V_xz
    let l = cholesky(&gram, "P V_xx P^T")?;
    let mut x = c.clone();
    chol_solve_in_place(&l, &mut x);
    Ok(dot(c.as_slice(), x.as_slice()))
}

/// J for an element selection, evaluated directly on the selected blocks
/// (A = V_xx[sel, sel], B = V_xz[sel, :]) without forming the encoder.
pub fn objective_selected(vxx: &SymMatrix, vxz: &CrossMatrix, sel: &IndexSet) -> Result<f64> {
    if vxz.rows() != vxx.order() {
        return Err(Error::Dim(format!(
            "cross moments have {} rows, input moments order {}",
            vxz.rows(),
            vxx.order()
        )));
    }
    let a = vxx.submatrix(sel.as_slice());
    let b = vxz.select_rows(sel.as_slice());
    let l = cholesky(&a, "selected-block A")?;
    let mut x = b.clone();
    chol_solve_in_place(&l, &mut x);
    Ok(dot(b.as_slice(), x.as_slice()))
}

/// The regression-optimal decoder Q0 = E[z y^T] E[y y^T]^-1.
pub fn optimal_decoder(vxx: &SymMatrix, vxz: &CrossMatrix, p: &Mat) -> Result<Mat> {
    let gram = reduced_gram(vxx, p);
    let c = p.matmul(&vxz.to_mat()); // K x M
    let l = cholesky(&gram, "P V_xx P^T")?;
    let mut x = c;
    chol_solve_in_place(&l, &mut x); // X = (P V_xx P^T)^-1 P V_xz, K x M
    Ok(x.transpose()) // M x K
}

/// Explicit inverse of the leading k x k block of a symmetric matrix.
/// The swap engine keeps this as its W cache because the accelerated
/// delta formula consumes W's columns directly.
pub fn spd_inverse_of_leading_block(vxx: &SymMatrix, k: usize) -> Result<Mat> {
    let mut a = Mat::zeros(k, k);
    for r in 0..k {
        a.row_mut(r).copy_from_slice(&vxx.row(r)[..k]);
    }
    spd_inverse(&a, "selected-block A")
}

/// Normalized loss 1 - J / tr(V_zz): 0 is perfect regression, 1 is none.
pub fn normalized_loss(j: f64, trace_vzz: f64) -> Result<f64> {
    if !(trace_vzz > 0.0) {
        return Err(Error::Config(format!(
            "trace of target moments must be positive, got {trace_vzz}"
        )));
    }
    Ok(1.0 - j / trace_vzz)
}

/// Tolerance and iteration cap for `largest_eigenvalue`.
const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITERS: usize = 10_000;

/// Largest eigenvalue of a symmetric matrix by power iteration with a
/// deterministic all-ones start vector. Converges on the Rayleigh quotient
/// to 1e-9 relative; for a PSD matrix this is the spectral radius.
pub fn largest_eigenvalue(m: &SymMatrix) -> Result<f64> {
    let n = m.order();
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0f64;
    for iter in 0..POWER_MAX_ITERS {
        let mut w: Vec<f64> = (0..n).map(|i| dot(m.row(i), &v)).collect();
        let rayleigh = dot(&v, &w);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            // v is in the null space; for the all-ones start on a PSD
            // matrix this only happens for the zero matrix.
            return Ok(0.0);
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        let converged = (rayleigh - lambda).abs() <= POWER_TOL * rayleigh.abs().max(1.0);
        lambda = rayleigh;
        v = w;
        if converged && iter > 0 {
            return Ok(lambda);
        }
    }
    Err(Error::PowerIteration {
        iterations: POWER_MAX_ITERS,
        last_estimate: lambda,
    })
}

/// Ridge regularization: V + eps_rel * lambda_max(V) * I. With the default
/// eps_rel = 1e-5 this is exactly the stabilization used before any block
/// of V is inverted. A zero matrix passes through unchanged.
pub fn regularize(vxx: &SymMatrix, eps_rel: f64) -> Result<SymMatrix> {
    let lam = largest_eigenvalue(vxx)?;
    let shift = eps_rel * lam;
    let n = vxx.order();
    let mut data = vxx.as_slice().to_vec();
    for i in 0..n {
        data[i * n + i] += shift;
    }
    Ok(SymMatrix::from_parts_unchecked(n, data))
}

pub const DEFAULT_REG_EPS: f64 = 1e-5;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn identity_pair(n: usize) -> (SymMatrix, CrossMatrix) {
        let v = SymMatrix::identity(n);
        let c = CrossMatrix::from_sym(&v);
        (v, c)
    }

    #[test]
    fn objective_identity_moments_counts_selected() {
        let (vxx, vxz) = identity_pair(4);
        let sel = IndexSet::new(vec![0, 2], 4).unwrap();
        let p = sel.to_encoder(4);
        let j = objective(&vxx, &vxz, &p).unwrap();
        assert!((j - 2.0).abs() < 1e-12);
    }

    #[test]
    fn objective_diagonal_moments_sums_selected_variances() {
        let vxx = SymMatrix::diagonal(&[2.0, 1.0]);
        let vxz = CrossMatrix::from_sym(&vxx);
        let p1 = IndexSet::new(vec![0], 2).unwrap().to_encoder(2);
        let p2 = IndexSet::new(vec![1], 2).unwrap().to_encoder(2);
        assert!((objective(&vxx, &vxz, &p1).unwrap() - 2.0).abs() < 1e-12);
        assert!((objective(&vxx, &vxz, &p2).unwrap() - 1.0).abs() < 1e-12);
    }

    /// Sample-space oracle: draw explicit samples, estimate moments from
    /// them, and check that J equals tr(Vzz) minus the mean-squared error
    /// of the best regression computed directly on the samples.
    #[test]
    fn objective_matches_direct_sample_regression() {
        let n = 8;
        let m = 8;
        let s = 600;
        let (xs, zs) = synth::linear_gaussian_samples(n, m, s, 42);

        // empirical moments (divisor 1/S, matching the estimator used
        // throughout)
        let (vxx, vxz, tr_vzz) = {
            let mut xx = vec![0.0; n * n];
            let mut xz = vec![0.0; n * m];
            let mut tr = 0.0;
            for si in 0..s {
                let x = &xs[si * n..(si + 1) * n];
                let z = &zs[si * m..(si + 1) * m];
                for a in 0..n {
                    for b in 0..n {
                        xx[a * n + b] += x[a] * x[b];
                    }
                    for c in 0..m {
                        xz[a * m + c] += x[a] * z[c];
                    }
                }
                tr += dot(z, z);
            }
            let inv = 1.0 / s as f64;
            for v in xx.iter_mut() {
                *v *= inv;
            }
            for v in xz.iter_mut() {
                *v *= inv;
            }
            for i in 0..n {
                for j in 0..i {
                    xx[j * n + i] = xx[i * n + j];
                }
            }
            (
                SymMatrix::new(n, xx).unwrap(),
                CrossMatrix::new(n, m, xz).unwrap(),
                tr * inv,
            )
        };

        let sel = IndexSet::new(vec![1, 3, 6], n).unwrap();
        let p = sel.to_encoder(n);
        let j = objective(&vxx, &vxz, &p).unwrap();

        // direct route: reduce every sample, least-squares on the samples,
        // then measure the residual explicitly
        let k = sel.len();
        let ys: Vec<f64> = (0..s)
            .flat_map(|si| {
                let x = &xs[si * n..(si + 1) * n];
                sel.as_slice().iter().map(move |&c| x[c])
            })
            .collect();
        let mut yy = Mat::zeros(k, k);
        let mut yz = Mat::zeros(k, m);
        for si in 0..s {
            let y = &ys[si * k..(si + 1) * k];
            let z = &zs[si * m..(si + 1) * m];
            for a in 0..k {
                for b in 0..k {
                    yy.set(a, b, yy.get(a, b) + y[a] * y[b]);
                }
                for c in 0..m {
                    yz.set(a, c, yz.get(a, c) + y[a] * z[c]);
                }
            }
        }
        let l = cholesky(&yy, "sample Gram").unwrap();
        let mut q = yz.clone();
        chol_solve_in_place(&l, &mut q); // q = (Y^T Y)^-1 Y^T Z, k x m
        let mut mse = 0.0;
        for si in 0..s {
            let y = &ys[si * k..(si + 1) * k];
            let z = &zs[si * m..(si + 1) * m];
            for c in 0..m {
                let pred: f64 = (0..k).map(|a| q.get(a, c) * y[a]).sum();
                let r = pred - z[c];
                mse += r * r;
            }
        }
        mse /= s as f64;

        let j_direct = tr_vzz - mse;
        assert!(
            (j - j_direct).abs() <= 1e-8 * j_direct.abs().max(1.0),
            "J = {j}, direct = {j_direct}"
        );
    }

    #[test]
    fn objective_selected_matches_encoder_route_exhaustively() {
        let (vxx, vxz, _) = synth::random_joint_moments(6, 4, 7);
        let mut subsets = Vec::new();
        for a in 0..6 {
            for b in (a + 1)..6 {
                subsets.push(vec![a, b]);
            }
        }
        assert_eq!(subsets.len(), 15);
        for idx in subsets {
            let sel = IndexSet::new(idx, 6).unwrap();
            let direct = objective_selected(&vxx, &vxz, &sel).unwrap();
            let via_encoder = objective(&vxx, &vxz, &sel.to_encoder(6)).unwrap();
            assert!(
                (direct - via_encoder).abs() <= 1e-10 * via_encoder.abs().max(1.0),
                "subset {:?}: {direct} vs {via_encoder}",
                sel.as_slice()
            );
        }
    }

    #[test]
    fn objective_selected_identity_and_diagonal() {
        let (vxx, vxz) = identity_pair(5);
        let sel = IndexSet::new(vec![4, 0, 2], 5).unwrap();
        assert!((objective_selected(&vxx, &vxz, &sel).unwrap() - 3.0).abs() < 1e-12);

        let vxx = SymMatrix::diagonal(&[2.0, 1.0]);
        let vxz = CrossMatrix::from_sym(&vxx);
        let s1 = IndexSet::new(vec![0], 2).unwrap();
        let s2 = IndexSet::new(vec![1], 2).unwrap();
        assert!((objective_selected(&vxx, &vxz, &s1).unwrap() - 2.0).abs() < 1e-12);
        assert!((objective_selected(&vxx, &vxz, &s2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decoder_full_selection_is_identity() {
        let (vxx, vxz, _) = synth::random_joint_moments_self(5, 3);
        let p = Mat::identity(5);
        let q = optimal_decoder(&vxx, &vxz, &p).unwrap();
        assert!(q.max_abs_diff(&Mat::identity(5)) < 1e-8);
    }

    #[test]
    fn decoder_diagonal_hand_case() {
        let vxx = SymMatrix::diagonal(&[2.0, 1.0]);
        let vxz = CrossMatrix::from_sym(&vxx);
        let p = IndexSet::new(vec![0], 2).unwrap().to_encoder(2);
        let q = optimal_decoder(&vxx, &vxz, &p).unwrap();
        assert_eq!((q.rows(), q.cols()), (2, 1));
        assert!((q.get(0, 0) - 1.0).abs() < 1e-12);
        assert!(q.get(1, 0).abs() < 1e-12);
    }

    #[test]
    fn decoder_satisfies_normal_equations() {
        let (vxx, vxz, _) = synth::random_joint_moments(8, 5, 3);
        let sel = IndexSet::new(vec![0, 2, 5, 7], 8).unwrap();
        let p = sel.to_encoder(8);
        let q = optimal_decoder(&vxx, &vxz, &p).unwrap();
        // Q0 (P V_xx P^T) must equal V_zx P^T
        let gram = {
            let pv = p.matmul(&vxx.to_mat());
            let mut g = Mat::zeros(4, 4);
            for i in 0..4 {
                for j in 0..4 {
                    g.set(i, j, dot(pv.row(i), p.row(j)));
                }
            }
            g
        };
        let lhs = q.matmul(&gram); // M x K
        let rhs = p
            .matmul(&Mat::from_vec(8, 5, vxz.as_slice().to_vec()).unwrap())
            .transpose(); // (P V_xz)^T = V_zx P^T
        let scale = rhs.max_abs().max(1.0);
        assert!(lhs.max_abs_diff(&rhs) <= 1e-8 * scale);
    }

    /// The decoder is a strict minimum of the quadratic loss: any unit-norm
    /// perturbation of Q0 increases the explicit moment-form loss.
    #[test]
    fn decoder_perturbation_never_improves() {
        let (vxx, vxz, tr_vzz) = synth::random_joint_moments(6, 4, 11);
        let sel = IndexSet::new(vec![1, 3, 4], 6).unwrap();
        let p = sel.to_encoder(6);
        let q0 = optimal_decoder(&vxx, &vxz, &p).unwrap();

        // loss(Q) = tr(Vzz) - 2 tr(Q P V_xz) + tr(Q P V_xx P^T Q^T)
        let loss = |q: &Mat| {
            let pvxz = p.matmul(&Mat::from_vec(6, 4, vxz.as_slice().to_vec()).unwrap());
            let qp = q.matmul(&pvxz); // M x M
            let mut cross = 0.0;
            for i in 0..qp.rows() {
                cross += qp.get(i, i);
            }
            let gram = {
                let pv = p.matmul(&vxx.to_mat());
                let mut g = Mat::zeros(3, 3);
                for i in 0..3 {
                    for j in 0..3 {
                        g.set(i, j, dot(pv.row(i), p.row(j)));
                    }
                }
                g
            };
            let qg = q.matmul(&gram); // M x K
            let quad = dot(qg.as_slice(), q.as_slice());
            tr_vzz - 2.0 * cross + quad
        };

        let base = loss(&q0);
        let mut rng_state = 0x9E3779B97F4A7C15u64;
        for _ in 0..20 {
            let mut delta = Mat::zeros(q0.rows(), q0.cols());
            let mut norm2 = 0.0;
            for r in 0..delta.rows() {
                for c in 0..delta.cols() {
                    rng_state = rng_state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    let v = ((rng_state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                    delta.set(r, c, v);
                    norm2 += v * v;
                }
            }
            let scale = 1e-3 / norm2.sqrt();
            let mut q = q0.clone();
            for r in 0..q.rows() {
                for c in 0..q.cols() {
                    q.set(r, c, q.get(r, c) + delta.get(r, c) * scale);
                }
            }
            assert!(
                loss(&q) >= base - 1e-12 * base.abs().max(1.0),
                "perturbed loss {} below optimum {base}",
                loss(&q)
            );
        }
    }

    #[test]
    fn normalized_loss_basics() {
        assert!((normalized_loss(2.0, 4.0).unwrap() - 0.5).abs() < 1e-15);
        let l = normalized_loss(100.0, 784.0).unwrap();
        assert!((l - (1.0 - 100.0 / 784.0)).abs() < 1e-15);
        assert!(normalized_loss(1.0, 0.0).is_err());
        assert!(normalized_loss(1.0, -3.0).is_err());
    }

    #[test]
    fn regularize_identity_and_zero() {
        let v = SymMatrix::identity(3);
        let r = regularize(&v, 1e-5).unwrap();
        for i in 0..3 {
            assert!((r.get(i, i) - (1.0 + 1e-5)).abs() < 1e-15);
        }
        let z = SymMatrix::zeros(4);
        let rz = regularize(&z, 1e-5).unwrap();
        assert_eq!(rz.as_slice(), z.as_slice());
    }

    #[test]
    fn regularize_shifts_smallest_eigenvalue() {
        let (vxx, _, _) = synth::random_joint_moments_self(10, 21);
        let eps = 1e-5;
        let r = regularize(&vxx, eps).unwrap();
        let lam_max = largest_eigenvalue(&vxx).unwrap();
        let eig_in = crate::baselines::eigh(&vxx).unwrap();
        let eig_out = crate::baselines::eigh(&r).unwrap();
        let min_in = *eig_in.eigenvalues.last().unwrap();
        let min_out = *eig_out.eigenvalues.last().unwrap();
        assert!(
            min_out >= min_in + eps * lam_max * (1.0 - 1e-6),
            "min eigenvalue {min_out} vs expected >= {}",
            min_in + eps * lam_max * (1.0 - 1e-6)
        );
    }

    #[test]
    fn largest_eigenvalue_examples() {
        let v = SymMatrix::diagonal(&[3.0, 1.0, 2.0]);
        assert!((largest_eigenvalue(&v).unwrap() - 3.0).abs() <= 1e-8);
        let i = SymMatrix::identity(7);
        assert!((largest_eigenvalue(&i).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn largest_eigenvalue_matches_jacobi() {
        let (vxx, _, _) = synth::random_joint_moments_self(20, 5);
        let by_power = largest_eigenvalue(&vxx).unwrap();
        let by_jacobi = crate::baselines::eigh(&vxx).unwrap().eigenvalues[0];
        assert!(
            (by_power - by_jacobi).abs() <= 1e-7 * by_jacobi.abs(),
            "power {by_power} vs jacobi {by_jacobi}"
        );
    }

    #[test]
    fn singular_gram_is_reported() {
        // duplicate columns make P V_xx P^T exactly singular
        let data = vec![1.0, 1.0, 1.0, 1.0];
        let vxx = SymMatrix::new(2, data).unwrap();
        let vxz = CrossMatrix::from_sym(&vxx);
        let p = Mat::identity(2);
        match objective(&vxx, &vxz, &p) {
            Err(Error::SingularGram { context }) => {
                assert!(context.contains("P V_xx P^T"), "context: {context}");
            }
            other => panic!("expected SingularGram, got {other:?}"),
        }
    }

    #[test]
    fn bounds_hold_on_random_joint_moments() {
        for seed in 0..10u64 {
            let (vxx, vxz, tr_vzz) = synth::random_joint_moments(9, 4, seed);
            let sel = IndexSet::new(vec![0, 3, 7], 9).unwrap();
            let j = objective_selected(&vxx, &vxz, &sel).unwrap();
            assert!(j >= -1e-10, "J = {j} negative");
            assert!(
                j <= tr_vzz * (1.0 + 1e-10),
                "J = {j} exceeds tr(Vzz) = {tr_vzz}"
            );
            let loss = normalized_loss(j, tr_vzz).unwrap();
            assert!((-1e-10..=1.0 + 1e-10).contains(&loss));
        }
    }

    #[test]
    fn monotone_in_subset_growth() {
        let (vxx, vxz, _) = synth::random_joint_moments(10, 3, 13);
        let mut j_prev = 0.0;
        for k in 1..=6 {
            let sel = IndexSet::new((0..k).collect(), 10).unwrap();
            let j = objective_selected(&vxx, &vxz, &sel).unwrap();
            assert!(
                j >= j_prev - 1e-10,
                "J dropped from {j_prev} to {j} at k = {k}"
            );
            j_prev = j;
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            /// J depends on the selected set, not the order it is listed in.
            #[test]
            fn order_invariance(seed in 0u64..1000, shuffle_seed in 0u64..1000) {
                let (vxx, vxz, _) = synth::random_joint_moments(8, 3, seed);
                let base = vec![0usize, 2, 5, 6];
                let sel = IndexSet::new(base.clone(), 8).unwrap();
                let j1 = objective_selected(&vxx, &vxz, &sel).unwrap();

                let mut shuffled = base;
                let mut s = shuffle_seed.wrapping_add(1);
                for i in (1..shuffled.len()).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let j = (s >> 33) as usize % (i + 1);
                    shuffled.swap(i, j);
                }
                let sel2 = IndexSet::new(shuffled, 8).unwrap();
                let j2 = objective_selected(&vxx, &vxz, &sel2).unwrap();
                prop_assert!((j1 - j2).abs() <= 1e-12 * j1.abs().max(1.0));
            }

            /// Selection-as-linear-map: the block route and the encoder
            /// route agree.
            #[test]
            fn selection_equals_encoder_route(seed in 0u64..1000) {
                let (vxx, vxz, _) = synth::random_joint_moments(7, 4, seed);
                let sel = IndexSet::new(vec![1, 4, 6], 7).unwrap();
                let a = objective_selected(&vxx, &vxz, &sel).unwrap();
                let b = objective(&vxx, &vxz, &sel.to_encoder(7)).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }
    }
}
