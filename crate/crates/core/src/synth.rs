//! Seeded synthetic problem instances. Used by the test suites as
//! oracle inputs and by the benchmark harness; all draws go through
//! ChaCha8 so instances are identical across platforms and runs.

use crate::matrix::{dot, CrossMatrix, Mat, SymMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// Jointly consistent moments for dimension n and target dimension m:
/// the blocks of a PSD Gram matrix of random factors, with a small ridge
/// on V_xx so its subblocks are safely positive definite. Guarantees
/// 0 <= J <= tr(V_zz) for every selection.
pub fn random_joint_moments(n: usize, m: usize, seed: u64) -> (SymMatrix, CrossMatrix, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = n + m;
    let factors = Mat::from_fn(d, d, |_, _| uniform(&mut rng));
    // joint = F F^T / d
    let mut joint = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let v = dot(factors.row(i), factors.row(j)) / d as f64;
            joint[i * d + j] = v;
            joint[j * d + i] = v;
        }
    }
    let mut xx = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            xx[i * n + j] = joint[i * d + j];
        }
    }
    let ridge = 1e-8 * (1.0 + (0..n).map(|i| xx[i * n + i]).sum::<f64>());
    for i in 0..n {
        xx[i * n + i] += ridge;
    }
    let mut xz = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            xz[i * m + j] = joint[i * d + (n + j)];
        }
    }
    let tr_vzz: f64 = (0..m).map(|j| joint[(n + j) * d + (n + j)]).sum();
    (
        SymMatrix::from_parts_unchecked(n, xx),
        CrossMatrix::new(n, m, xz).expect("consistent dims"),
        tr_vzz,
    )
}

/// Moments for the reconstruction setting z = x: the cross moments alias
/// the input moments and tr(V_zz) is the trace of V_xx.
pub fn random_joint_moments_self(n: usize, seed: u64) -> (SymMatrix, CrossMatrix, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = Mat::from_fn(n, n + 4, |_, _| uniform(&mut rng));
    let mut xx = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = dot(factors.row(i), factors.row(j)) / (n + 4) as f64;
            xx[i * n + j] = v;
            xx[j * n + i] = v;
        }
    }
    let ridge = 1e-8 * (1.0 + (0..n).map(|i| xx[i * n + i]).sum::<f64>());
    for i in 0..n {
        xx[i * n + i] += ridge;
    }
    let vxx = SymMatrix::from_parts_unchecked(n, xx);
    let tr = vxx.trace();
    let vxz = CrossMatrix::from_sym(&vxx);
    (vxx, vxz, tr)
}

/// Symmetric positive-definite matrix with a prescribed condition number:
/// random orthogonal basis, eigenvalues geometrically spaced from 1 down
/// to 1/cond.
pub fn random_pd_with_condition(n: usize, cond: f64, seed: u64) -> SymMatrix {
    assert!(cond >= 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_orthogonal(n, &mut rng);
    let eigs: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                cond.powf(-(i as f64) / (n - 1) as f64)
            }
        })
        .collect();
    // V = Q diag(eigs) Q^T, filled symmetrically
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut v = 0.0;
            for (l, &e) in eigs.iter().enumerate() {
                v += q.get(i, l) * e * q.get(j, l);
            }
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    SymMatrix::from_parts_unchecked(n, data)
}

/// Dense cross moments with uniform entries.
pub fn random_cross(n: usize, m: usize, seed: u64) -> CrossMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * m).map(|_| uniform(&mut rng)).collect();
    CrossMatrix::new(n, m, data).expect("consistent dims")
}

/// Orthogonal matrix from Gram-Schmidt over random uniform columns.
fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Mat {
    let mut q = Mat::zeros(n, n); // columns built one at a time
    for c in 0..n {
        let mut col: Vec<f64> = (0..n).map(|_| uniform(rng)).collect();
        loop {
            for prev in 0..c {
                let proj: f64 = (0..n).map(|r| q.get(r, prev) * col[r]).sum();
                for (r, item) in col.iter_mut().enumerate() {
                    *item -= proj * q.get(r, prev);
                }
            }
            let norm = dot(&col, &col).sqrt();
            if norm > 1e-8 {
                for v in col.iter_mut() {
                    *v /= norm;
                }
                break;
            }
            // degenerate draw; redraw the column
            for v in col.iter_mut() {
                *v = uniform(rng);
            }
        }
        for r in 0..n {
            q.set(r, c, col[r]);
        }
    }
    q
}

/// Samples from a seeded linear-Gaussian-ish model: x built by mixing
/// uniform noise, z = T x plus small noise. Returned row-major as
/// (S x n, S x m) flat buffers.
pub fn linear_gaussian_samples(n: usize, m: usize, s: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = Mat::from_fn(n, n, |_, _| uniform(&mut rng));
    let t = Mat::from_fn(m, n, |_, _| uniform(&mut rng));
    let mut xs = Vec::with_capacity(s * n);
    let mut zs = Vec::with_capacity(s * m);
    for _ in 0..s {
        let g: Vec<f64> = (0..n).map(|_| uniform(&mut rng)).collect();
        let x = mix.matvec(&g);
        let mut z = t.matvec(&x);
        for v in z.iter_mut() {
            *v += 0.05 * uniform(&mut rng);
        }
        xs.extend_from_slice(&x);
        zs.extend_from_slice(&z);
    }
    (xs, zs)
}
