//! Register-tile micro-kernels.
//!
//! Both kernels compute an `mr x nr` tile of `A * B` as a sequence of rank-1
//! updates over packed panels; they differ only in how the tile is written
//! back. The default kernel scatters it into a canonical row-major window, the
//! propagating kernel writes the whole tile to one contiguous `nr x mr` slot
//! (rows fastest), which is the propagated layout's micro-tile.
//!
//! Accumulation order is fixed: depth outermost, and with `accumulate` the
//! tile starts from the destination's current value. Both kernels therefore
//! produce bit-identical values, and splitting the depth range over several
//! accumulating calls gives the same bits as a single call.

use crate::error::{Error, Result};
use crate::matrix::MatrixViewMut;

/// An `mr x nr` accumulator tile, stored column-major (`tile[c * mr + r]`).
#[derive(Debug, Clone, PartialEq)]
pub struct MicroTileAccumulator {
    mr: usize,
    nr: usize,
    tile: Vec<f32>,
}

impl MicroTileAccumulator {
    pub fn new(mr: usize, nr: usize) -> Self {
        MicroTileAccumulator { mr, nr, tile: vec![0.0; mr * nr] }
    }

    pub fn mr(&self) -> usize {
        self.mr
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.tile[c * self.mr + r]
    }

    pub fn clear(&mut self) {
        self.tile.fill(0.0);
    }

    /// Loads the tile from a canonical window; positions outside the window are zero.
    pub fn load_canonical(&mut self, src: &MatrixViewMut<'_>) {
        let mr = self.mr;
        self.tile.fill(0.0);
        for r in 0..src.rows() {
            for c in 0..src.cols() {
                self.tile[c * mr + r] = src.get(r, c);
            }
        }
    }

    pub fn load_contiguous(&mut self, src: &[f32]) {
        self.tile.copy_from_slice(&src[..self.mr * self.nr]);
    }

    /// Stores the part of the tile covered by `dst`. Returns elements written.
    pub fn store_canonical(&self, dst: &mut MatrixViewMut<'_>) -> usize {
        let mr = self.mr;
        let (rows, cols) = dst.dims();
        for r in 0..rows {
            let row = dst.row_mut(r);
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.tile[c * mr + r];
            }
        }
        rows * cols
    }

    /// Stores the full tile into a contiguous `nr x mr` slot. Returns elements written.
    pub fn store_contiguous(&self, dst: &mut [f32]) -> usize {
        let n = self.mr * self.nr;
        dst[..n].copy_from_slice(&self.tile);
        n
    }

    /// Rank-1 updates over a contiguous `depth x mr` multiplier panel.
    pub fn update(&mut self, sa_panel: &[f32], sb_panel: &[f32], depth: usize) {
        self.update_runs(sa_panel, &[(0, depth)], sb_panel);
    }

    /// Rank-1 updates where the multiplier panel is split into runs.
    ///
    /// Each `(offset, cols)` run holds `cols` consecutive depth steps of the
    /// panel (`cols * mr` elements starting at `offset` in `a`); together the
    /// runs cover the depth range covered by `b`, in order.
    pub(crate) fn update_runs(&mut self, a: &[f32], runs: &[(usize, usize)], b: &[f32]) {
        macro_rules! dispatch {
            ($(($m:literal, $n:literal)),*) => {
                match (self.mr, self.nr) {
                    $(($m, $n) => simd::update::<$m, $n>(&mut self.tile, a, runs, b),)*
                    _ => update_generic(&mut self.tile, self.mr, self.nr, a, runs, b),
                }
            };
        }
        dispatch!((16, 4), (16, 8), (8, 8), (8, 4), (4, 4), (4, 8), (32, 4), (32, 2));
    }
}

/// Wider-vector builds of [`update_fixed`], selected at run time.
///
/// Products and sums stay separate IEEE operations (no fused multiply-add),
/// so every build produces the same bits as the portable one.
#[cfg(target_arch = "x86_64")]
mod simd {
    use super::update_fixed;

    #[target_feature(enable = "avx512f")]
    unsafe fn avx512<const MR: usize, const NR: usize>(tile: &mut [f32], a: &[f32], runs: &[(usize, usize)], b: &[f32]) {
        update_fixed::<MR, NR>(tile, a, runs, b)
    }

    #[target_feature(enable = "avx2")]
    unsafe fn avx2<const MR: usize, const NR: usize>(tile: &mut [f32], a: &[f32], runs: &[(usize, usize)], b: &[f32]) {
        update_fixed::<MR, NR>(tile, a, runs, b)
    }

    #[inline]
    pub(super) fn update<const MR: usize, const NR: usize>(tile: &mut [f32], a: &[f32], runs: &[(usize, usize)], b: &[f32]) {
        if is_x86_feature_detected!("avx512f") {
            // SAFETY: the feature was detected on this CPU.
            unsafe { avx512::<MR, NR>(tile, a, runs, b) }
        } else if is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected on this CPU.
            unsafe { avx2::<MR, NR>(tile, a, runs, b) }
        } else {
            update_fixed::<MR, NR>(tile, a, runs, b)
        }
    }
}

#[cfg(not(target_arch = "x86_64"))]
mod simd {
    pub(super) use super::update_fixed as update;
}

/// Columns `c0..c0 + NR` of a tile whose multiplicand rows are `BS` wide.
#[inline(always)]
fn update_cols<const MR: usize, const NR: usize, const BS: usize>(
    tile: &mut [f32],
    a: &[f32],
    runs: &[(usize, usize)],
    b: &[f32],
    c0: usize,
) {
    let tile = &mut tile[c0 * MR..(c0 + NR) * MR];
    let mut acc = [[0f32; MR]; NR];
    for (c, col) in acc.iter_mut().enumerate() {
        col.copy_from_slice(&tile[c * MR..(c + 1) * MR]);
    }
    let mut l = 0;
    for &(off, n) in runs {
        let a_run = &a[off..off + n * MR];
        let b_run = &b[l * BS..(l + n) * BS];
        for (a_col, b_row) in a_run.chunks_exact(MR).zip(b_run.chunks_exact(BS)) {
            let a_col: &[f32; MR] = a_col.try_into().unwrap();
            let b_row: &[f32; NR] = b_row[c0..c0 + NR].try_into().unwrap();
            for c in 0..NR {
                let bv = b_row[c];
                for r in 0..MR {
                    acc[c][r] += a_col[r] * bv;
                }
            }
        }
        l += n;
    }
    for (c, col) in acc.iter().enumerate() {
        tile[c * MR..(c + 1) * MR].copy_from_slice(col);
    }
}

/// Fixed-size tile update. Tiles with more than 64 accumulators are done in
/// 4-column strips to keep the accumulators in registers; every element still
/// sees the same sequence of operations.
#[inline(always)]
fn update_fixed<const MR: usize, const NR: usize>(tile: &mut [f32], a: &[f32], runs: &[(usize, usize)], b: &[f32]) {
    if MR * NR > 64 && NR % 4 == 0 {
        for c0 in (0..NR).step_by(4) {
            update_cols::<MR, 4, NR>(tile, a, runs, b, c0);
        }
    } else {
        update_cols::<MR, NR, NR>(tile, a, runs, b, 0);
    }
}

fn update_generic(tile: &mut [f32], mr: usize, nr: usize, a: &[f32], runs: &[(usize, usize)], b: &[f32]) {
    let mut l = 0;
    for &(off, n) in runs {
        let a_run = &a[off..off + n * mr];
        let b_run = &b[l * nr..(l + n) * nr];
        for (a_col, b_row) in a_run.chunks_exact(mr).zip(b_run.chunks_exact(nr)) {
            for (c, &bv) in b_row.iter().enumerate() {
                let acc = &mut tile[c * mr..(c + 1) * mr];
                for (t, &av) in acc.iter_mut().zip(a_col) {
                    *t += av * bv;
                }
            }
        }
        l += n;
    }
}

fn check_panels(sa_panel: &[f32], sb_panel: &[f32], kc: usize, mr: usize, nr: usize) -> Result<()> {
    if mr == 0 || nr == 0 {
        return Err(Error::InvalidParams("mr and nr must be >= 1".into()));
    }
    if sa_panel.len() < kc * mr || sb_panel.len() < kc * nr {
        return Err(Error::DimensionMismatch(format!(
            "panels of {} and {} elements are too short for depth {kc} with a {mr}x{nr} tile",
            sa_panel.len(),
            sb_panel.len()
        )));
    }
    Ok(())
}

/// Computes one tile and stores it into a canonical window of at most `mr x nr`.
///
/// Window rows and columns beyond the tile's live region are simply absent
/// from `dst`; they are never written. With `accumulate` the product is added
/// to `dst`, otherwise it overwrites it.
pub fn microkernel_default(
    sa_panel: &[f32],
    sb_panel: &[f32],
    kc: usize,
    (mr, nr): (usize, usize),
    dst: &mut MatrixViewMut<'_>,
    accumulate: bool,
) -> Result<()> {
    check_panels(sa_panel, sb_panel, kc, mr, nr)?;
    if dst.rows() > mr || dst.cols() > nr {
        return Err(Error::DimensionMismatch(format!(
            "destination window {}x{} exceeds the {mr}x{nr} tile",
            dst.rows(),
            dst.cols()
        )));
    }
    let mut acc = MicroTileAccumulator::new(mr, nr);
    if accumulate {
        acc.load_canonical(dst);
    }
    acc.update(sa_panel, sb_panel, kc);
    acc.store_canonical(dst);
    Ok(())
}

/// Computes one tile and stores it into a contiguous `nr x mr` micro-tile slot.
pub fn microkernel_propagate(
    sa_panel: &[f32],
    sb_panel: &[f32],
    kc: usize,
    (mr, nr): (usize, usize),
    dst: &mut [f32],
    accumulate: bool,
) -> Result<()> {
    check_panels(sa_panel, sb_panel, kc, mr, nr)?;
    if dst.len() != mr * nr {
        return Err(Error::DimensionMismatch(format!(
            "micro-tile slot holds {} elements, expected {}",
            dst.len(),
            mr * nr
        )));
    }
    let mut acc = MicroTileAccumulator::new(mr, nr);
    if accumulate {
        acc.load_contiguous(dst);
    }
    acc.update(sa_panel, sb_panel, kc);
    acc.store_contiguous(dst);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `sa(l, r)` and `sb(l, c)` for panels in packed order.
    fn naive_tile(sa: &[f32], sb: &[f32], kc: usize, mr: usize, nr: usize) -> Vec<f64> {
        let mut out = vec![0.0; mr * nr];
        for r in 0..mr {
            for c in 0..nr {
                out[r * nr + c] = (0..kc).map(|l| sa[l * mr + r] as f64 * sb[l * nr + c] as f64).sum();
            }
        }
        out
    }

    #[test]
    fn single_rank_one_update_is_outer_product() {
        let (mr, nr) = (4, 3);
        let sa: Vec<f32> = (1..=mr).map(|x| x as f32).collect();
        let sb: Vec<f32> = (1..=nr).map(|x| x as f32).collect();
        let mut c = Matrix::zeros(mr, nr);
        microkernel_default(&sa, &sb, 1, (mr, nr), &mut c.view_mut(), false).unwrap();
        for r in 0..mr {
            for j in 0..nr {
                assert_eq!(c.get(r, j), ((r + 1) * (j + 1)) as f32);
            }
        }
    }

    #[test]
    fn identity_multiplier_panel_copies_multiplicand() {
        let (mr, nr, kc) = (4, 4, 4);
        let mut sa = vec![0.0; kc * mr];
        for l in 0..kc {
            sa[l * mr + l] = 1.0;
        }
        let sb: Vec<f32> = (0..kc * nr).map(|x| x as f32 * 0.5 - 3.0).collect();
        let mut c = Matrix::zeros(mr, nr);
        microkernel_default(&sa, &sb, kc, (mr, nr), &mut c.view_mut(), false).unwrap();
        for r in 0..mr {
            for j in 0..nr {
                assert_eq!(c.get(r, j), sb[r * nr + j]);
            }
        }
    }

    #[test]
    fn random_panels_match_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mr, nr, kc) = (4, 4, 7);
        let sa: Vec<f32> = (0..kc * mr).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sb: Vec<f32> = (0..kc * nr).map(|_| rng.random_range(-1.0..1.0)).collect();
        let want = naive_tile(&sa, &sb, kc, mr, nr);
        let mut c = Matrix::zeros(mr, nr);
        microkernel_default(&sa, &sb, kc, (mr, nr), &mut c.view_mut(), false).unwrap();
        for r in 0..mr {
            for j in 0..nr {
                let w = want[r * nr + j];
                assert!((c.get(r, j) as f64 - w).abs() <= 1e-5 * w.abs().max(1.0));
            }
        }
    }

    #[test]
    fn clipped_window_leaves_surroundings_untouched() {
        let (mr, nr, kc) = (4, 4, 2);
        let sa = vec![1.0; kc * mr];
        let sb = vec![1.0; kc * nr];
        let mut c = Matrix::from_fn(5, 5, |_, _| -1.0);
        {
            let mut v = c.view_mut();
            let mut w = v.submatrix_mut(0, 0, 3, 2).unwrap();
            microkernel_default(&sa, &sb, kc, (mr, nr), &mut w, false).unwrap();
        }
        for i in 0..5 {
            for j in 0..5 {
                let want = if i < 3 && j < 2 { 2.0 } else { -1.0 };
                assert_eq!(c.get(i, j), want);
            }
        }
    }

    #[test]
    fn propagate_matches_default_and_zero_panels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(mr, nr) in &[(16, 4), (3, 5), (8, 8)] {
            let kc = 9;
            let sa: Vec<f32> = (0..kc * mr).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sb: Vec<f32> = (0..kc * nr).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut c = Matrix::zeros(mr, nr);
            microkernel_default(&sa, &sb, kc, (mr, nr), &mut c.view_mut(), false).unwrap();
            let mut slot = vec![0.0; mr * nr];
            microkernel_propagate(&sa, &sb, kc, (mr, nr), &mut slot, false).unwrap();
            for r in 0..mr {
                for j in 0..nr {
                    assert_eq!(slot[j * mr + r].to_bits(), c.get(r, j).to_bits());
                }
            }
        }
        let mut slot = vec![5.0; 16];
        microkernel_propagate(&[0.0; 12], &[0.0; 12], 3, (4, 4), &mut slot, false).unwrap();
        assert!(slot.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn depth_split_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mr, nr, k1, k2) = (16, 4, 5, 8);
        let sa: Vec<f32> = (0..(k1 + k2) * mr).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sb: Vec<f32> = (0..(k1 + k2) * nr).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut whole = vec![0.0; mr * nr];
        microkernel_propagate(&sa, &sb, k1 + k2, (mr, nr), &mut whole, false).unwrap();
        let mut split = vec![0.0; mr * nr];
        microkernel_propagate(&sa[..k1 * mr], &sb[..k1 * nr], k1, (mr, nr), &mut split, false).unwrap();
        microkernel_propagate(&sa[k1 * mr..], &sb[k1 * nr..], k2, (mr, nr), &mut split, true).unwrap();
        assert_eq!(whole, split);
    }

    #[test]
    fn run_split_matches_contiguous() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mr, nr, kc) = (8, 4, 10);
        let sa: Vec<f32> = (0..kc * mr).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sb: Vec<f32> = (0..kc * nr).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut a = MicroTileAccumulator::new(mr, nr);
        a.update(&sa, &sb, kc);
        // Same panel, scattered into three runs with gaps in between.
        let mut scattered = vec![f32::NAN; kc * mr + 40];
        let runs = [(0usize, 4usize), (4 * mr + 20, 4), (8 * mr + 40, 2)];
        let mut l = 0;
        for &(off, n) in &runs {
            scattered[off..off + n * mr].copy_from_slice(&sa[l * mr..(l + n) * mr]);
            l += n;
        }
        let mut b = MicroTileAccumulator::new(mr, nr);
        b.update_runs(&scattered, &runs, &sb);
        assert_eq!(a, b);
    }

    #[test]
    fn short_panels_are_rejected() {
        let mut slot = vec![0.0; 16];
        assert!(microkernel_propagate(&[0.0; 7], &[0.0; 8], 2, (4, 4), &mut slot, false).is_err());
        assert!(microkernel_propagate(&[0.0; 8], &[0.0; 8], 2, (4, 4), &mut slot[..8], false).is_err());
    }

    #[test]
    fn fixed_sizes_match_generic_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (mr, nr) in [(16, 4), (16, 8), (8, 8), (8, 4), (4, 4), (4, 8), (32, 4), (32, 2)] {
            let kc = 37;
            let a: Vec<f32> = (0..kc * mr).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f32> = (0..kc * nr).map(|_| rng.random_range(-1.0..1.0)).collect();
            let init: Vec<f32> = (0..mr * nr).map(|_| rng.random_range(-1.0..1.0)).collect();
            let runs = [(0, 5), (5 * mr, 30), (35 * mr, 2)];
            let mut acc = MicroTileAccumulator::new(mr, nr);
            acc.load_contiguous(&init);
            acc.update_runs(&a, &runs, &b);
            let mut generic = init.clone();
            update_generic(&mut generic, mr, nr, &a, &runs, &b);
            let mut out = vec![0.0; mr * nr];
            acc.store_contiguous(&mut out);
            assert!(out.iter().zip(&generic).all(|(x, y)| x.to_bits() == y.to_bits()), "{mr}x{nr}");
        }
    }
}
