//! Reference reduction methods to compare selections against: PCA,
//! largest-marginal-variance selection, sparse random projection, and
//! reconstruction support. Each is packaged as a [`ReductionModel`] so
//! evaluation and reconstruction treat all methods uniformly.

use crate::dataset::SampleMatrix;
use crate::error::{Error, Result};
use crate::matrix::{CrossMatrix, Mat, SymMatrix};
use crate::moments::{optimal_decoder, IndexSet, ModelKind, ReductionModel};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Eigen pairs of a symmetric matrix, eigenvalues descending, eigenvectors
/// as orthonormal columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Full symmetric eigendecomposition by cyclic Jacobi rotations
/// (Numerical Recipes scheme). Deterministic sweep order; sign fixed so
/// each eigenvector's first nonzero component is positive.
pub fn eigh(m: &SymMatrix) -> Result<EigenDecomposition> {
    let n = m.order();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: Mat::zeros(0, 0),
        });
    }
    let mut a = m.as_slice().to_vec();
    // eigenvector accumulator, kept transposed (rows are the vectors) so
    // rotations touch contiguous memory
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    let mut converged = false;
    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off_sum = 0.0;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                off_sum += a[p * n + q].abs();
            }
        }
        if off_sum == 0.0 {
            converged = true;
            break;
        }
        let tresh = if sweep < 3 {
            0.2 * off_sum / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                // after a few sweeps, zero out entries that no longer
                // perturb the diagonal at machine precision
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() <= tresh {
                    continue;
                }
                let mut h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[p * n + q] = 0.0;
                let rotate = |a: &mut [f64], i1: usize, i2: usize| {
                    let g = a[i1];
                    let hh = a[i2];
                    a[i1] = g - s * (hh + g * tau);
                    a[i2] = hh + s * (g - hh * tau);
                };
                for j in 0..p {
                    rotate(&mut a, j * n + p, j * n + q);
                }
                for j in (p + 1)..q {
                    rotate(&mut a, p * n + j, j * n + q);
                }
                for j in (q + 1)..n {
                    rotate(&mut a, p * n + j, q * n + j);
                }
                // rows p and q of the transposed accumulator
                let (row_p, row_q) = {
                    let (head, tail) = vt.split_at_mut(q * n);
                    (&mut head[p * n..p * n + n], &mut tail[..n])
                };
                for j in 0..n {
                    let g = row_p[j];
                    let hh = row_q[j];
                    row_p[j] = g - s * (hh + g * tau);
                    row_q[j] = hh + s * (g - hh * tau);
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    if !converged {
        return Err(Error::EigenNonConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    // sort descending; stable so ties keep the sweep order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[y].total_cmp(&d[x]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut eigenvectors = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let row = &mut vt[src * n..(src + 1) * n];
        // sign convention: first nonzero component positive
        if let Some(&lead) = row.iter().find(|v| **v != 0.0) {
            if lead < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
        }
        for j in 0..n {
            eigenvectors.set(j, col, row[j]);
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// PCA: encoder rows are the top-k eigenvectors of V_xx; decoder is the
/// regression-optimal Q0 (equals the encoder transposed when z = x, up
/// to tolerance).
pub fn pca_model(
    vxx: &SymMatrix,
    vxz: &CrossMatrix,
    k: usize,
    mean: Vec<f64>,
) -> Result<ReductionModel> {
    let n = vxx.order();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "PCA component count {k} out of range for dimension {n}"
        )));
    }
    let eig = eigh(vxx)?;
    let mut encoder = Mat::zeros(k, n);
    for r in 0..k {
        for c in 0..n {
            encoder.set(r, c, eig.eigenvectors.get(c, r));
        }
    }
    let decoder = optimal_decoder(vxx, vxz, &encoder)?;
    ReductionModel::new(encoder, decoder, mean, ModelKind::Pca)
}

/// Indices of the k largest diagonal entries, ties to the smaller index.
pub fn top_variance_indices(vxx: &SymMatrix, k: usize) -> Vec<usize> {
    let diag = vxx.diag();
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]).then(x.cmp(&y)));
    let mut top: Vec<usize> = order.into_iter().take(k).collect();
    top.sort_unstable();
    top
}

/// Selection of the k elements with the largest marginal variances.
pub fn variance_model(
    vxx: &SymMatrix,
    vxz: &CrossMatrix,
    k: usize,
    mean: Vec<f64>,
) -> Result<ReductionModel> {
    let n = vxx.order();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "variance selection size {k} out of range for dimension {n}"
        )));
    }
    let sel = IndexSet::new(top_variance_indices(vxx, k), n)?;
    ReductionModel::from_selection(&sel, vxx, vxz, mean, ModelKind::Variance)
}

/// Sparse random projection: entries +1 / 0 / -1 with probabilities
/// 1/6, 2/3, 1/6, scaled by sqrt(3 / k). Entries are drawn row-major
/// from a ChaCha8 stream, so a seed fixes the matrix. The decoder is the
/// regression-optimal Q0, same as every other model.
pub fn random_projection_model(
    n: usize,
    k: usize,
    seed: u64,
    vxx: &SymMatrix,
    vxz: &CrossMatrix,
    mean: Vec<f64>,
) -> Result<ReductionModel> {
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "projection size {k} out of range for dimension {n}"
        )));
    }
    let encoder = sparse_projection_matrix(k, n, seed);
    let decoder = optimal_decoder(vxx, vxz, &encoder)?;
    ReductionModel::new(encoder, decoder, mean, ModelKind::RandomProjection)
}

pub fn sparse_projection_matrix(k: usize, n: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (3.0 / k as f64).sqrt();
    Mat::from_fn(k, n, |_, _| match rng.random_range(0..6u32) {
        0 => scale,
        5 => -scale,
        _ => 0.0,
    })
}

/// Clip an intensity to the 8-bit image range.
#[inline]
pub fn clip_intensity(v: f64) -> f64 {
    v.clamp(0.0, 255.0)
}

/// Decode reduced vectors back to the input space: for each (centered)
/// sample x, compute Q0 (P x) + mean and clip intensities to [0, 255].
pub fn reconstruct_images(model: &ReductionModel, samples: &SampleMatrix) -> Result<SampleMatrix> {
    let n = samples.dim();
    if model.encoder.cols() != n {
        return Err(Error::Dim(format!(
            "model expects dimension {}, samples have {n}",
            model.encoder.cols()
        )));
    }
    let m = model.decoder.rows();
    if model.mean.len() != m {
        return Err(Error::Dim(format!(
            "decoder output dimension {m} does not match mean length {}; \
             reconstruction needs a target space equal to the input space",
            model.mean.len()
        )));
    }
    let mut out = Vec::with_capacity(samples.count() * m);
    for s in 0..samples.count() {
        let x = samples.row(s);
        let y = model.encoder.matvec(x);
        let z = model.decoder.matvec(&y);
        out.extend(
            z.iter()
                .zip(model.mean.iter())
                .map(|(zi, mi)| clip_intensity(zi + mi)),
        );
    }
    SampleMatrix::from_raw(samples.count(), m, out)
}

/// Mean squared error between two equally-shaped sample matrices,
/// averaged per image.
pub fn per_image_mse(a: &SampleMatrix, b: &SampleMatrix) -> Result<Vec<f64>> {
    if a.count() != b.count() || a.dim() != b.dim() {
        return Err(Error::Dim(format!(
            "cannot compare {}x{} with {}x{}",
            a.count(),
            a.dim(),
            b.count(),
            b.dim()
        )));
    }
    Ok((0..a.count())
        .map(|s| {
            let ra = a.row(s);
            let rb = b.row(s);
            ra.iter()
                .zip(rb.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                / a.dim() as f64
        })
        .collect())
}
