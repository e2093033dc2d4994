//! Swap-based local search over element selections.
//!
//! The search keeps the currently selected elements in the first K
//! positions of a permutation sigma, with the moment matrices stored in
//! permuted order, so the selected blocks
//!
//! ```text
//!   A = Vxx[0..K, 0..K]      B = Vxz[0..K, :]
//! ```
//!
//! are leading blocks and J = tr(B^T A^-1 B). Swapping selected position
//! i with unselected position j changes A by the rank-2 update
//! A + e_i f^T + f e_i^T and B by e_i h^T, where
//!
//! ```text
//!   f[r] = Vxx[r][j] - Vxx[r][i]   (r != i)
//!   f[i] = (Vxx[j][j] - Vxx[i][i]) / 2
//!   h    = Vxz[j, :] - Vxz[i, :]
//! ```
//!
//! Writing F = (e_i f), X = [[0,1],[1,0]] and W = A^-1, the inverse of the
//! updated A is W + W F G^-1 F^T W with G = -(X + F^T W F), so the change
//! in the objective reduces to
//!
//! ```text
//!   dJ = tr(G^-1 S^T S) + 2 (t^T w_i + u^T G^-1 r_i)
//!        + (W[i][i] + r_i^T G^-1 r_i) h^T h
//! ```
//!
//! with R = W F, S = B^T R, t = B h, u = R^T t, w_i the i-th column of W
//! and r_i the i-th row of R. The only inversion per candidate is the
//! 2x2 G. `delta_j_naive` recomputes the objective from scratch instead
//! and serves as the oracle the fast path is checked against, and as the
//! timing baseline.

use crate::error::{Error, Result};
use crate::matrix::{dot, CrossMatrix, Mat, SymMatrix};
use crate::moments::{objective_selected, spd_inverse_of_leading_block, IndexSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// How the initial selection is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitSpec {
    /// Elements 1..K in their original order.
    Identity,
    /// A uniform random K-subset via seeded Fisher-Yates.
    Random { seed: u64 },
}

/// Which evaluation computes candidate deltas in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaMode {
    /// Rank-2-update formula (the accelerated path).
    Fast,
    /// Full objective recompute per candidate (oracle / timing baseline).
    Naive,
}

/// Search parameters.
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub init: InitSpec,
    /// A swap is accepted when dJ > eps_rel * max(1, J_current). Strictly
    /// positive so the search terminates in floating point.
    pub eps_rel: f64,
    /// Safety cap on the number of sweeps.
    pub max_sweeps: usize,
    /// Evaluate candidate swaps for each row in parallel. Results are
    /// bitwise identical either way; deltas are gathered first and the
    /// argmax applied after.
    pub parallel_candidates: bool,
    /// tr(V_zz), when known, so the trace can record normalized losses.
    pub trace_vzz: Option<f64>,
}

pub const DEFAULT_EPS_REL: f64 = 1e-9;

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            init: InitSpec::Identity,
            eps_rel: DEFAULT_EPS_REL,
            max_sweeps: 10_000,
            parallel_candidates: false,
            trace_vzz: None,
        }
    }
}

/// One fully evaluated candidate swap.
#[derive(Clone, Copy, Debug)]
pub struct SwapDelta {
    /// Selected position, 0 <= inner_pos < K.
    pub inner_pos: usize,
    /// Unselected position, K <= outer_pos < N.
    pub outer_pos: usize,
    pub delta: f64,
}

/// Per-sweep progress record.
#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub sweep: usize,
    pub accepted: usize,
    pub j: f64,
    pub normalized_loss: Option<f64>,
    pub seconds: f64,
}

/// The whole optimization history; J is non-decreasing across records and
/// the final record has accepted == 0.
#[derive(Clone, Debug, Default)]
pub struct ObjectiveTrace {
    pub records: Vec<SweepRecord>,
}

impl ObjectiveTrace {
    pub fn final_j(&self) -> Option<f64> {
        self.records.last().map(|r| r.j)
    }

    pub fn sweeps(&self) -> usize {
        self.records.len()
    }

    pub fn accepted_total(&self) -> usize {
        self.records.iter().map(|r| r.accepted).sum()
    }
}

/// Search state: the permutation, permuted moment copies, and the cached
/// inverse W = A^-1 of the selected block.
#[derive(Clone, Debug)]
pub struct SelectionState {
    n: usize,
    k: usize,
    /// perm[pos] = original element index at this position.
    perm: Vec<usize>,
    vxx: SymMatrix,
    vxz: CrossMatrix,
    w: Mat,
    w_valid: bool,
    j_current: f64,
}

/// Build a search state from regularized moments.
pub fn build_state(
    vxx: &SymMatrix,
    vxz: &CrossMatrix,
    k: usize,
    init: InitSpec,
) -> Result<SelectionState> {
    let n = vxx.order();
    if vxz.rows() != n {
        return Err(Error::Dim(format!(
            "cross moments have {} rows, input moments order {n}",
            vxz.rows()
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::Config(format!(
            "target dimension K = {k} must satisfy 1 <= K < N = {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    if let InitSpec::Random { seed } = init {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..k {
            let j = rng.random_range(i..n);
            perm.swap(i, j);
        }
    }
    let mut state = SelectionState {
        n,
        k,
        vxx: vxx.permuted(&perm),
        vxz: vxz.permuted_rows(&perm),
        perm,
        w: Mat::zeros(k, k),
        w_valid: false,
        j_current: 0.0,
    };
    state.refresh_inverse()?;
    state.recompute_objective()?;
    Ok(state)
}

impl SelectionState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn j_current(&self) -> f64 {
        self.j_current
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// The selected elements as original indices.
    pub fn selected(&self) -> IndexSet {
        IndexSet::new(self.perm[..self.k].to_vec(), self.n).expect("permutation is a bijection")
    }

    pub fn permuted_vxx(&self) -> &SymMatrix {
        &self.vxx
    }

    pub fn permuted_vxz(&self) -> &CrossMatrix {
        &self.vxz
    }

    /// Recompute W = A^-1 from the current leading block by positive-
    /// definite factorization.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        self.w = spd_inverse_of_leading_block(&self.vxx, self.k)?;
        self.w_valid = true;
        Ok(())
    }

    /// Recompute the cached objective by direct solve on the leading
    /// blocks (the slow trusted route, no use of W).
    pub fn recompute_objective(&mut self) -> Result<()> {
        let positions: Vec<usize> = (0..self.k).collect();
        let sel = IndexSet::new(positions, self.n).expect("leading positions are valid");
        self.j_current = objective_selected(&self.vxx, &self.vxz, &sel)?;
        Ok(())
    }

    /// Exchange selected position `inner` with unselected position `outer`,
    /// permuting the stored moment copies to match. Invalidates W.
    fn apply_swap(&mut self, inner: usize, outer: usize) {
        debug_assert!(inner < self.k && outer >= self.k && outer < self.n);
        self.perm.swap(inner, outer);
        self.vxx.swap_index(inner, outer);
        self.vxz.swap_rows(inner, outer);
        self.w_valid = false;
    }

    /// Max-abs residual of W * A - I; cheap invariant check for tests.
    pub fn inverse_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.k {
            for c in 0..self.k {
                let mut s = 0.0;
                for l in 0..self.k {
                    s += self.w.get(r, l) * self.vxx.get(l, c);
                }
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// The rank-2 update vectors (f, h) for swapping selected position `inner`
/// with unselected position `outer`.
pub fn swap_vectors(
    state: &SelectionState,
    inner: usize,
    outer: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_positions(state, inner, outer)?;
    let k = state.k;
    let row_i = state.vxx.row(inner);
    let row_j = state.vxx.row(outer);
    let mut f = vec![0.0; k];
    for r in 0..k {
        f[r] = row_j[r] - row_i[r];
    }
    f[inner] = 0.5 * (row_j[outer] - row_i[inner]);
    let zi = state.vxz.row(inner);
    let zj = state.vxz.row(outer);
    let h: Vec<f64> = zj.iter().zip(zi.iter()).map(|(a, b)| a - b).collect();
    Ok((f, h))
}

fn check_positions(state: &SelectionState, inner: usize, outer: usize) -> Result<()> {
    if inner >= state.k {
        return Err(Error::Config(format!(
            "inner position {inner} must be < K = {}",
            state.k
        )));
    }
    if outer < state.k || outer >= state.n {
        return Err(Error::Config(format!(
            "outer position {outer} must be in [K, N) = [{}, {})",
            state.k, state.n
        )));
    }
    Ok(())
}

/// Read-only quantities shared by every candidate of one inner position.
struct RowContext<'a> {
    inner: usize,
    w: &'a Mat,
    w_ii: f64,
    /// s1 = B^T w_i; first column of S for every candidate.
    s1: Vec<f64>,
    /// alpha = s1 . s1.
    s1_norm2: f64,
    /// Z = B B^T, so S^T S entries cost O(K^2) instead of O(KM).
    z: Mat,
    /// Z w_i.
    z_wi: Vec<f64>,
    /// tau = B . (row `inner` of Vxz); t = B h = B x_j - tau.
    tau: Vec<f64>,
    xx_row_i: &'a [f64],
    xx_ii: f64,
    xz_row_i: &'a [f64],
    s1_dot_xzi: f64,
}

impl<'a> RowContext<'a> {
    fn build(state: &'a SelectionState, inner: usize) -> Self {
        let k = state.k;
        let m = state.vxz.cols();
        let w_i = state.w.row(inner);
        let mut s1 = vec![0.0; m];
        for r in 0..k {
            crate::matrix::axpy(&mut s1, w_i[r], state.vxz.row(r));
        }
        let mut z = Mat::zeros(k, k);
        for r in 0..k {
            for c in 0..=r {
                let v = dot(state.vxz.row(r), state.vxz.row(c));
                z.set(r, c, v);
                z.set(c, r, v);
            }
        }
        let z_wi = z.matvec(w_i);
        let xz_row_i = state.vxz.row(inner);
        let tau: Vec<f64> = (0..k).map(|r| dot(state.vxz.row(r), xz_row_i)).collect();
        RowContext {
            inner,
            w: &state.w,
            w_ii: w_i[inner],
            s1_norm2: {
                let mut s = 0.0;
                for r in 0..k {
                    s += w_i[r] * z_wi[r];
                }
                s
            },
            z_wi,
            z,
            tau,
            xx_row_i: state.vxx.row(inner),
            xx_ii: state.vxx.get(inner, inner),
            s1_dot_xzi: dot(&s1, xz_row_i),
            s1,
            xz_row_i,
        }
    }
}

/// Reusable per-candidate buffers (all length K).
struct CandBuffers {
    f: Vec<f64>,
    wf: Vec<f64>,
    zwf: Vec<f64>,
    t: Vec<f64>,
}

impl CandBuffers {
    fn new(k: usize) -> Self {
        CandBuffers {
            f: vec![0.0; k],
            wf: vec![0.0; k],
            zwf: vec![0.0; k],
            t: vec![0.0; k],
        }
    }
}

/// Sum of squared differences, unrolled like `dot`.
#[inline]
fn diff_norm2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n4 = a.len() - a.len() % 4;
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a[..n4].chunks_exact(4).zip(b[..n4].chunks_exact(4)) {
        let d0 = ca[0] - cb[0];
        let d1 = ca[1] - cb[1];
        let d2 = ca[2] - cb[2];
        let d3 = ca[3] - cb[3];
        acc[0] += d0 * d0;
        acc[1] += d1 * d1;
        acc[2] += d2 * d2;
        acc[3] += d3 * d3;
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in n4..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Relative threshold under which the 2x2 G is treated as singular.
const DEGENERATE_DET_REL: f64 = 1e-14;

fn eval_candidate(
    state: &SelectionState,
    ctx: &RowContext<'_>,
    buf: &mut CandBuffers,
    outer: usize,
) -> Result<f64> {
    let k = state.k;
    let xx_row_j = state.vxx.row(outer);

    // f: the rank-2 update direction for A
    for r in 0..k {
        buf.f[r] = xx_row_j[r] - ctx.xx_row_i[r];
    }
    buf.f[ctx.inner] = 0.5 * (xx_row_j[outer] - ctx.xx_ii);

    // wf = W f
    for r in 0..k {
        buf.wf[r] = dot(ctx.w.row(r), &buf.f);
    }
    let a12 = buf.wf[ctx.inner];
    let a22 = dot(&buf.f, &buf.wf);

    // G = -(X + F^T W F), 2x2
    let g11 = -ctx.w_ii;
    let g12 = -(1.0 + a12);
    let g22 = -a22;
    let det = g11 * g22 - g12 * g12;
    let fro2 = g11 * g11 + 2.0 * g12 * g12 + g22 * g22;
    if !det.is_finite() || det.abs() < DEGENERATE_DET_REL * fro2 {
        return Err(Error::DegenerateSwap {
            inner: ctx.inner,
            outer,
        });
    }

    // tr(G^-1 S^T S) via Z = B B^T
    for r in 0..k {
        buf.zwf[r] = dot(ctx.z.row(r), &buf.wf);
    }
    let s1s2 = dot(&ctx.z_wi, &buf.wf);
    let s2s2 = dot(&buf.wf, &buf.zwf);
    let tr_g = (g22 * ctx.s1_norm2 - 2.0 * g12 * s1s2 + g11 * s2s2) / det;

    // t = B h, u = (s1.h, wf.t)
    let xz_row_j = state.vxz.row(outer);
    for r in 0..k {
        buf.t[r] = dot(state.vxz.row(r), xz_row_j) - ctx.tau[r];
    }
    let ht_s1 = dot(xz_row_j, &ctx.s1) - ctx.s1_dot_xzi;
    let u2 = dot(&buf.wf, &buf.t);
    let hh = diff_norm2(xz_row_j, ctx.xz_row_i);

    // r_i = i-th row of R = (W_ii, (Wf)_i)
    let r1 = ctx.w_ii;
    let r2 = a12;
    let gr1 = (g22 * r1 - g12 * r2) / det;
    let gr2 = (-g12 * r1 + g11 * r2) / det;
    let ugr = ht_s1 * gr1 + u2 * gr2;
    let rgr = r1 * gr1 + r2 * gr2;

    Ok(tr_g + 2.0 * (ht_s1 + ugr) + (ctx.w_ii + rgr) * hh)
}

/// Accelerated objective change for one candidate swap. Does not mutate
/// the state; requires the state's W cache to be valid.
pub fn delta_j_fast(state: &SelectionState, inner: usize, outer: usize) -> Result<f64> {
    check_positions(state, inner, outer)?;
    if !state.w_valid {
        return Err(Error::Config(
            "inverse cache is stale; call refresh_inverse() first".into(),
        ));
    }
    let ctx = RowContext::build(state, inner);
    let mut buf = CandBuffers::new(state.k);
    eval_candidate(state, &ctx, &mut buf, outer)
}

/// Objective of the selection made of `positions` of the permuted state.
fn objective_at_positions(state: &SelectionState, positions: Vec<usize>) -> Result<f64> {
    let sel = IndexSet::new(positions, state.n)?;
    objective_selected(&state.vxx, &state.vxz, &sel)
}

/// Oracle objective change: both objectives recomputed from the moment
/// blocks by direct solve, entirely independent of the W cache. A swap
/// that makes A singular is reported as -inf (never improving).
pub fn delta_j_naive(state: &SelectionState, inner: usize, outer: usize) -> Result<f64> {
    check_positions(state, inner, outer)?;
    let current: Vec<usize> = (0..state.k).collect();
    let j_cur = objective_at_positions(state, current)?;
    let swapped: Vec<usize> = (0..state.k)
        .map(|p| if p == inner { outer } else { p })
        .collect();
    match objective_at_positions(state, swapped) {
        Ok(j_new) => Ok(j_new - j_cur),
        Err(Error::SingularGram { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// One pass of the outer loop: for each selected position in order,
/// evaluate every candidate swap, take the best, and apply it when the
/// gain clears the threshold. Ties break to the smallest outer position.
/// Returns the number of accepted swaps.
pub fn sweep(state: &mut SelectionState, config: &SearchConfig) -> Result<usize> {
    sweep_with(state, config, DeltaMode::Fast)
}

pub fn sweep_with(
    state: &mut SelectionState,
    config: &SearchConfig,
    mode: DeltaMode,
) -> Result<usize> {
    if config.eps_rel <= 0.0 {
        return Err(Error::Config(format!(
            "improvement threshold must be positive, got {}",
            config.eps_rel
        )));
    }
    let k = state.k;
    let n = state.n;
    let mut accepted = 0usize;
    for inner in 0..k {
        // Alg. line: recompute A, B, W from the permuted moments each
        // outer step; the Woodbury form is only used inside the deltas.
        state.refresh_inverse()?;

        let deltas: Vec<Option<f64>> = match mode {
            DeltaMode::Fast => {
                let ctx = RowContext::build(state, inner);
                let immut: &SelectionState = state;
                if config.parallel_candidates {
                    (k..n)
                        .into_par_iter()
                        .map_init(
                            || CandBuffers::new(k),
                            |buf, outer| eval_candidate(immut, &ctx, buf, outer).ok(),
                        )
                        .collect()
                } else {
                    let mut buf = CandBuffers::new(k);
                    (k..n)
                        .map(|outer| eval_candidate(immut, &ctx, &mut buf, outer).ok())
                        .collect()
                }
            }
            DeltaMode::Naive => {
                let current: Vec<usize> = (0..k).collect();
                let j_cur = objective_at_positions(state, current)?;
                let immut: &SelectionState = state;
                let eval_one = |outer: usize| -> Option<f64> {
                    let swapped: Vec<usize> = (0..k)
                        .map(|p| if p == inner { outer } else { p })
                        .collect();
                    match objective_at_positions(immut, swapped) {
                        Ok(j_new) => Some(j_new - j_cur),
                        Err(_) => None,
                    }
                };
                if config.parallel_candidates {
                    (k..n).into_par_iter().map(eval_one).collect()
                } else {
                    (k..n).map(eval_one).collect()
                }
            }
        };

        // argmax after all deltas are gathered; strict > keeps the
        // smallest outer position on ties
        let mut best: Option<(usize, f64)> = None;
        for (offset, d) in deltas.iter().enumerate() {
            if let Some(d) = *d {
                if d.is_finite() && best.map_or(true, |(_, bd)| d > bd) {
                    best = Some((k + offset, d));
                }
            }
        }

        let threshold = config.eps_rel * state.j_current.abs().max(1.0);
        if let Some((outer, gain)) = best {
            if gain > threshold {
                state.apply_swap(inner, outer);
                state.j_current += gain;
                accepted += 1;
            }
        }
    }
    // leave the state fully consistent: fresh W and an exactly recomputed J
    state.refresh_inverse()?;
    state.recompute_objective()?;
    Ok(accepted)
}

/// Run sweeps until none accepts a swap. Returns the selected elements
/// (original indices) and the per-sweep trace.
pub fn optimize(
    vxx: &SymMatrix,
    vxz: &CrossMatrix,
    k: usize,
    config: &SearchConfig,
) -> Result<(IndexSet, ObjectiveTrace)> {
    let mut state = build_state(vxx, vxz, k, config.init)?;
    let mut trace = ObjectiveTrace::default();
    loop {
        let sweep_idx = trace.records.len() + 1;
        let start = Instant::now();
        let accepted = sweep(&mut state, config)?;
        let seconds = start.elapsed().as_secs_f64();
        let j = state.j_current;
        trace.records.push(SweepRecord {
            sweep: sweep_idx,
            accepted,
            j,
            normalized_loss: config.trace_vzz.map(|t| 1.0 - j / t),
            seconds,
        });
        if accepted == 0 {
            return Ok((state.selected(), trace));
        }
        if sweep_idx >= config.max_sweeps {
            return Err(Error::SweepLimit {
                sweeps: sweep_idx,
                j,
                selected: state.selected().to_one_based_sorted(),
            });
        }
    }
}

/// True iff no single swap improves J by more than the threshold.
/// Implemented with the direct objective only, so it is a fully
/// independent check on optimize().
pub fn verify_local_optimum(
    vxx: &SymMatrix,
    vxz: &CrossMatrix,
    sel: &IndexSet,
    eps_rel: f64,
) -> Result<bool> {
    let n = vxx.order();
    let j0 = objective_selected(vxx, vxz, sel)?;
    let threshold = eps_rel * j0.abs().max(1.0);
    let mut selected = vec![false; n];
    for &i in sel.as_slice() {
        selected[i] = true;
    }
    for pos in 0..sel.len() {
        for j in 0..n {
            if selected[j] {
                continue;
            }
            let mut idx = sel.as_slice().to_vec();
            idx[pos] = j;
            let cand = IndexSet::new(idx, n)?;
            match objective_selected(vxx, vxz, &cand) {
                Ok(jn) => {
                    if jn - j0 > threshold {
                        return Ok(false);
                    }
                }
                Err(Error::SingularGram { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(true)
}

/// Exact binomial coefficient, None on u128 overflow.
pub fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// log10 of the Stirling estimate of (n choose k), computed in log space:
/// sqrt(n / (2 pi k (n-k))) * n^n / (k^k (n-k)^(n-k)).
pub fn binomial_estimate(n: usize, k: usize) -> f64 {
    assert!(k > 0 && k < n, "binomial_estimate needs 0 < k < n");
    let nf = n as f64;
    let kf = k as f64;
    let rf = (n - k) as f64;
    let ln = 0.5 * (nf.ln() - (2.0 * std::f64::consts::PI * kf * rf).ln())
        + nf * nf.ln()
        - kf * kf.ln()
        - rf * rf.ln();
    ln / std::f64::consts::LN_10
}

/// Globally optimal selection by enumeration. Refuses when the number of
/// subsets exceeds `limit` (quoting the Stirling estimate); ties break to
/// the lexicographically first subset.
pub fn exhaustive_search(
    vxx: &SymMatrix,
    vxz: &CrossMatrix,
    k: usize,
    limit: u64,
) -> Result<(IndexSet, f64)> {
    let n = vxx.order();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "subset size {k} out of range for dimension {n}"
        )));
    }
    let count = binomial_exact(n as u64, k as u64);
    let over = match count {
        Some(c) => c > limit as u128,
        None => true,
    };
    if over {
        return Err(Error::SearchSpaceTooLarge {
            n,
            k,
            log10_count: if k < n {
                binomial_estimate(n, k)
            } else {
                0.0
            },
            limit,
        });
    }

    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let sel = IndexSet::new(idx.clone(), n)?;
        match objective_selected(vxx, vxz, &sel) {
            Ok(j) => {
                // strict > keeps the lexicographically first maximizer
                if best.as_ref().map_or(true, |(_, bj)| j > *bj) {
                    best = Some((idx.clone(), j));
                }
            }
            Err(Error::SingularGram { .. }) => {}
            Err(e) => return Err(e),
        }

        // advance to the next combination in lexicographic order
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] != pos + n - k {
                idx[pos] += 1;
                for p in (pos + 1)..k {
                    idx[p] = idx[p - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                let (bi, bj) = best.ok_or_else(|| Error::SingularGram {
                    context: "every subset produced a singular selected block".into(),
                })?;
                return Ok((IndexSet::new(bi, n)?, bj));
            }
        }
    }
}
