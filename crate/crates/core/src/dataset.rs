//! Data ingestion: IDX image/label files, centering, target construction
//! and moment estimation.
//!
//! Covariances use the population divisor 1/S. The divisor cancels both
//! in the normalized loss and in the argmax over selections, so it cannot
//! change which elements get picked.

use crate::error::{Error, Result};
use crate::matrix::{axpy, CrossMatrix, SymMatrix};

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// Samples as an S x N row-major matrix. `mean` is populated by
/// [`center`]; the stored rows are then the centered values.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    count: usize,
    dim: usize,
    values: Vec<f64>,
    mean: Option<Vec<f64>>,
    /// Image geometry when the samples came from an IDX image file.
    pub image_shape: Option<(usize, usize)>,
}

impl SampleMatrix {
    pub fn from_raw(count: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != count * dim {
            return Err(Error::Dim(format!(
                "{count}x{dim} sample matrix needs {} values, got {}",
                count * dim,
                values.len()
            )));
        }
        Ok(SampleMatrix {
            count,
            dim,
            values,
            mean: None,
            image_shape: None,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.dim..(s + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The column means removed by centering, if centering happened.
    pub fn mean(&self) -> Option<&[f64]> {
        self.mean.as_deref()
    }

    pub fn is_centered(&self) -> bool {
        self.mean.is_some()
    }
}

fn read_be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!(
                "expected 4 header bytes at offset {offset}, file ends at {}",
                bytes.len()
            ),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Parse an IDX image file (big-endian magic 0x00000803, then counts,
/// rows, cols, then one unsigned byte per pixel). Pixels are flattened
/// row-major; values stay in 0..=255.
pub fn parse_idx_images(bytes: &[u8]) -> Result<SampleMatrix> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad image magic 0x{magic:08x}, want 0x{IDX_IMAGE_MAGIC:08x}"),
        });
    }
    let count = read_be_u32(bytes, 4)? as usize;
    let rows = read_be_u32(bytes, 8)? as usize;
    let cols = read_be_u32(bytes, 12)? as usize;
    let dim = rows.checked_mul(cols).ok_or_else(|| Error::Parse {
        offset: 8,
        message: format!("image shape {rows}x{cols} overflows"),
    })?;
    let total = count.checked_mul(dim).ok_or_else(|| Error::Parse {
        offset: 4,
        message: format!("{count} images of {rows}x{cols} overflow"),
    })?;
    let expected = 16usize.checked_add(total).ok_or_else(|| Error::Parse {
        offset: 4,
        message: "payload size overflows".into(),
    })?;
    if bytes.len() < expected {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!(
                "truncated pixel payload: need {expected} bytes, file has {}",
                bytes.len()
            ),
        });
    }
    let values: Vec<f64> = bytes[16..expected].iter().map(|&b| b as f64).collect();
    let mut samples = SampleMatrix::from_raw(count, dim, values)?;
    samples.image_shape = Some((rows, cols));
    Ok(samples)
}

/// Parse an IDX label file (magic 0x00000801).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_be_u32(bytes, 0)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!("bad label magic 0x{magic:08x}, want 0x{IDX_LABEL_MAGIC:08x}"),
        });
    }
    let count = read_be_u32(bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!(
                "truncated label payload: need {expected} bytes, file has {}",
                bytes.len()
            ),
        });
    }
    Ok(bytes[8..expected].to_vec())
}

/// Samples are accumulated in blocks of this many rows; per-block partial
/// sums keep the 60k-sample reductions well conditioned.
const BLOCK: usize = 1024;

/// Subtract the column means. The result carries the removed mean and has
/// columns that sum to zero at machine precision.
pub fn center(samples: SampleMatrix) -> Result<SampleMatrix> {
    if samples.count == 0 {
        return Err(Error::Config("cannot center an empty sample matrix".into()));
    }
    let (count, dim) = (samples.count, samples.dim);
    let mut mean = vec![0.0f64; dim];
    let mut block_sum = vec![0.0f64; dim];
    for block in samples.values.chunks(BLOCK * dim) {
        block_sum.iter_mut().for_each(|v| *v = 0.0);
        for row in block.chunks_exact(dim) {
            axpy(&mut block_sum, 1.0, row);
        }
        axpy(&mut mean, 1.0, &block_sum);
    }
    let inv = 1.0 / count as f64;
    for v in mean.iter_mut() {
        *v *= inv;
    }
    let mut values = samples.values;
    for row in values.chunks_exact_mut(dim) {
        for (v, m) in row.iter_mut().zip(mean.iter()) {
            *v -= m;
        }
    }
    Ok(SampleMatrix {
        count,
        dim,
        values,
        mean: Some(mean),
        image_shape: samples.image_shape,
    })
}

/// What the regression target z is.
#[derive(Clone, Debug)]
pub enum TargetSpec {
    /// z = x; the objective becomes reconstruction error.
    SelfTarget,
    /// One-hot encoded class labels. Raw by default (the inputs are
    /// centered, the targets are not); `centered` opts in to centering
    /// the one-hot vectors as well.
    OneHot {
        labels: Vec<u8>,
        num_classes: usize,
        centered: bool,
    },
    /// An explicit S x M target matrix.
    External {
        samples: SampleMatrix,
        centered: bool,
    },
}

/// Estimated second-order moments: V_xx, V_xz and tr(V_zz).
pub struct Moments {
    pub vxx: SymMatrix,
    pub vxz: CrossMatrix,
    pub vzz_trace: f64,
}

/// Estimate (V_xx, V_xz, tr V_zz) from centered samples with the 1/S
/// divisor. For `SelfTarget` the cross moments alias V_xx and the trace
/// is read off its diagonal, with no recomputation.
pub fn estimate_moments(samples: &SampleMatrix, target: &TargetSpec) -> Result<Moments> {
    if samples.count == 0 {
        return Err(Error::Config("no samples to estimate moments from".into()));
    }
    if !samples.is_centered() {
        return Err(Error::Config(
            "moment estimation expects centered samples; call center() first".into(),
        ));
    }
    let vxx = gram_matrix(samples);
    match target {
        TargetSpec::SelfTarget => {
            let vzz_trace = vxx.trace();
            let vxz = CrossMatrix::from_sym(&vxx);
            Ok(Moments {
                vxx,
                vxz,
                vzz_trace,
            })
        }
        TargetSpec::OneHot {
            labels,
            num_classes,
            centered,
        } => {
            let (vxz, vzz_trace) =
                one_hot_cross(samples, labels, *num_classes, *centered)?;
            Ok(Moments {
                vxx,
                vxz,
                vzz_trace,
            })
        }
        TargetSpec::External {
            samples: targets,
            centered,
        } => {
            if targets.count() != samples.count() {
                return Err(Error::Dim(format!(
                    "{} input samples vs {} target samples",
                    samples.count(),
                    targets.count()
                )));
            }
            let centered_targets;
            let targets = if *centered && !targets.is_centered() {
                centered_targets = center(targets.clone())?;
                &centered_targets
            } else {
                targets
            };
            let (vxz, vzz_trace) = cross_moments(samples, targets);
            Ok(Moments {
                vxx,
                vxz,
                vzz_trace,
            })
        }
    }
}

/// (1/S) X^T X over sample blocks: each block accumulates into its own
/// buffer (upper triangle only), blocks fold into the total in a fixed
/// order, and the result is mirrored and scaled once at the end.
fn gram_matrix(samples: &SampleMatrix) -> SymMatrix {
    let (count, dim) = (samples.count, samples.dim);
    let mut total = vec![0.0f64; dim * dim];
    let mut block_acc = vec![0.0f64; dim * dim];
    for block in samples.values.chunks(BLOCK * dim) {
        block_acc.iter_mut().for_each(|v| *v = 0.0);
        for row in block.chunks_exact(dim) {
            for (a, &xa) in row.iter().enumerate() {
                if xa != 0.0 {
                    axpy(&mut block_acc[a * dim + a..(a + 1) * dim], xa, &row[a..]);
                }
            }
        }
        axpy(&mut total, 1.0, &block_acc);
    }
    let inv = 1.0 / count as f64;
    for a in 0..dim {
        for b in a..dim {
            let v = total[a * dim + b] * inv;
            total[a * dim + b] = v;
            total[b * dim + a] = v;
        }
    }
    SymMatrix::from_parts_unchecked(dim, total)
}

/// Cross moments against one-hot labels. Column c of V_xz is the mean of
/// x over samples of class c, scaled by 1/S; tr(V_zz) is 1 for raw
/// one-hot targets and sum_c p_c (1 - p_c) for centered ones.
fn one_hot_cross(
    samples: &SampleMatrix,
    labels: &[u8],
    num_classes: usize,
    centered: bool,
) -> Result<(CrossMatrix, f64)> {
    let (count, dim) = (samples.count, samples.dim);
    if labels.len() != count {
        return Err(Error::Dim(format!(
            "{count} samples but {} labels",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| (l as usize) >= num_classes) {
        return Err(Error::Config(format!(
            "label {bad} out of range for {num_classes} classes"
        )));
    }
    let mut xz = vec![0.0f64; dim * num_classes];
    let mut class_counts = vec![0usize; num_classes];
    for (s, &label) in labels.iter().enumerate() {
        let c = label as usize;
        class_counts[c] += 1;
        let row = samples.row(s);
        // column c of the accumulator
        for (a, &xa) in row.iter().enumerate() {
            xz[a * num_classes + c] += xa;
        }
    }
    let inv = 1.0 / count as f64;
    for v in xz.iter_mut() {
        *v *= inv;
    }
    // centering z subtracts the class-frequency vector; because x is
    // centered, E[x] freq^T vanishes and V_xz is unchanged. Only the
    // target trace moves.
    let vzz_trace = if centered {
        class_counts
            .iter()
            .map(|&c| {
                let p = c as f64 * inv;
                p * (1.0 - p)
            })
            .sum()
    } else {
        1.0
    };
    Ok((CrossMatrix::new(dim, num_classes, xz)?, vzz_trace))
}

/// (1/S) X^T Z and (1/S) sum ||z||^2 for an explicit target matrix.
fn cross_moments(samples: &SampleMatrix, targets: &SampleMatrix) -> (CrossMatrix, f64) {
    let (count, dim) = (samples.count, samples.dim);
    let m = targets.dim();
    let mut xz = vec![0.0f64; dim * m];
    let mut block_acc = vec![0.0f64; dim * m];
    let mut tr = 0.0f64;
    for (xblock, zblock) in samples
        .values
        .chunks(BLOCK * dim)
        .zip(targets.values.chunks(BLOCK * m))
    {
        block_acc.iter_mut().for_each(|v| *v = 0.0);
        for (xrow, zrow) in xblock.chunks_exact(dim).zip(zblock.chunks_exact(m)) {
            for (a, &xa) in xrow.iter().enumerate() {
                if xa != 0.0 {
                    axpy(&mut block_acc[a * m..(a + 1) * m], xa, zrow);
                }
            }
            tr += crate::matrix::dot(zrow, zrow);
        }
        axpy(&mut xz, 1.0, &block_acc);
    }
    let inv = 1.0 / count as f64;
    for v in xz.iter_mut() {
        *v *= inv;
    }
    (
        CrossMatrix::new(dim, m, xz).expect("consistent dims"),
        tr * inv,
    )
}
