//! The propagated packed layout.
//!
//! A propagated matrix is stored in the order the blocked kernel produces its
//! output tiles: outermost the `nc`-wide column blocks, then the `mc`-tall row
//! blocks, then the `nr`-wide column groups, then the `mr`-tall row panels, and
//! innermost one contiguous `nr x mr` micro-tile. Inside a micro-tile the `mr`
//! rows of a column are adjacent (row index fastest), which is exactly the
//! order the micro-kernel reads a packed multiplier panel. A consumer kernel
//! can therefore read the matrix as its multiplier without repacking.
//!
//! Rows are padded up to a multiple of `mr` and columns up to a multiple of
//! `nr`. The last row and column blocks are shortened rather than padded to a
//! full `mc`/`nc`, so the padded storage is `round_up(rows, mr) *
//! round_up(cols, nr)` elements. Padding positions are always zero.

use crate::error::{mismatch, Error, Result};
use crate::matrix::Matrix;
use crate::params::TileParams;

#[inline]
pub(crate) fn round_up(x: usize, m: usize) -> usize {
    x.div_ceil(m) * m
}

/// Geometry of a propagated matrix: logical and padded dimensions plus the
/// block structure induced by its tile parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropagatedLayout {
    rows: usize,
    cols: usize,
    params: TileParams,
    pad_rows: usize,
    pad_cols: usize,
}

/// One `(column block, row block)` region of a propagated matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockInfo {
    pub col_block: usize,
    pub row_block: usize,
    /// First logical row / column covered by the block.
    pub row0: usize,
    pub col0: usize,
    /// Padded height and width.
    pub height: usize,
    pub width: usize,
    /// Offset of the block in dense (identity-order, zero-stride) storage.
    pub dense_offset: usize,
}

impl BlockInfo {
    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl PropagatedLayout {
    pub fn new(rows: usize, cols: usize, params: TileParams) -> Result<Self> {
        params.validate()?;
        Ok(PropagatedLayout {
            rows,
            cols,
            params,
            pad_rows: round_up(rows, params.mr),
            pad_cols: round_up(cols, params.nr),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn params(&self) -> TileParams {
        self.params
    }

    pub fn pad_rows(&self) -> usize {
        self.pad_rows
    }

    pub fn pad_cols(&self) -> usize {
        self.pad_cols
    }

    /// Number of stored elements including padding.
    pub fn len(&self) -> usize {
        self.pad_rows * self.pad_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_blocks(&self) -> usize {
        self.pad_rows.div_ceil(self.params.mc)
    }

    pub fn col_blocks(&self) -> usize {
        self.pad_cols.div_ceil(self.params.nc)
    }

    pub fn block_count(&self) -> usize {
        self.row_blocks() * self.col_blocks()
    }

    /// Padded height of row block `ib`.
    #[inline]
    pub fn block_height(&self, ib: usize) -> usize {
        self.params.mc.min(self.pad_rows - ib * self.params.mc)
    }

    /// Padded width of column block `jb`.
    #[inline]
    pub fn block_width(&self, jb: usize) -> usize {
        self.params.nc.min(self.pad_cols - jb * self.params.nc)
    }

    #[inline]
    fn dense_block_offset(&self, jb: usize, ib: usize) -> usize {
        jb * self.params.nc * self.pad_rows + ib * self.params.mc * self.block_width(jb)
    }

    /// Index of block `(jb, ib)` in storage order.
    pub fn block_index(&self, jb: usize, ib: usize) -> usize {
        jb * self.row_blocks() + ib
    }

    pub fn block(&self, jb: usize, ib: usize) -> BlockInfo {
        BlockInfo {
            col_block: jb,
            row_block: ib,
            row0: ib * self.params.mc,
            col0: jb * self.params.nc,
            height: self.block_height(ib),
            width: self.block_width(jb),
            dense_offset: self.dense_block_offset(jb, ib),
        }
    }

    /// All blocks in storage order.
    pub fn blocks(&self) -> impl Iterator<Item = BlockInfo> + '_ {
        let rb = self.row_blocks();
        (0..self.col_blocks()).flat_map(move |jb| (0..rb).map(move |ib| self.block(jb, ib)))
    }

    /// Offset of `(i, j)` relative to the start of its block.
    #[inline]
    pub fn offset_in_block(&self, i: usize, j: usize) -> usize {
        let TileParams { mc, nc, mr, nr, .. } = self.params;
        let ib = i / mc;
        let (ii, jj) = (i % mc, j % nc);
        let height = self.block_height(ib);
        (jj / nr) * height * nr + (ii / mr) * nr * mr + (jj % nr) * mr + ii % mr
    }

    /// Dense storage offset of padded index `(i, j)`. Unchecked in release builds.
    #[inline]
    pub fn offset_unchecked(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.pad_rows && j < self.pad_cols);
        let TileParams { mc, nc, .. } = self.params;
        self.dense_block_offset(j / nc, i / mc) + self.offset_in_block(i, j)
    }

    /// Dense storage offset of padded index `(i, j)`.
    pub fn offset(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.pad_rows || j >= self.pad_cols {
            return Err(Error::IndexOutOfRange { row: i, col: j, rows: self.pad_rows, cols: self.pad_cols });
        }
        Ok(self.offset_unchecked(i, j))
    }

    /// Offsets of the `mr`-element runs holding column `j` of row panel
    /// starting at row `i0`, for every logical column, in column order.
    ///
    /// Each run is contiguous: the `mr` rows of one column inside a micro-tile.
    pub fn panel_runs(&self, i0: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        debug_assert_eq!(i0 % self.params.mr, 0);
        let TileParams { mc, nc, mr, nr, .. } = self.params;
        let ib = i0 / mc;
        let height = self.block_height(ib);
        let panel = (i0 % mc) / mr;
        (0..self.col_blocks()).flat_map(move |jb| {
            let base = self.dense_block_offset(jb, ib) + panel * nr * mr;
            let col0 = jb * nc;
            let width = (self.cols - col0).min(nc);
            (0..width).map(move |jj| (col0 + jj, base + (jj / nr) * height * nr + (jj % nr) * mr))
        })
    }
}

/// Storage offset of `(i, j)` in the propagated layout of a `dims` matrix.
pub fn propagated_offset(i: usize, j: usize, dims: (usize, usize), params: &TileParams) -> Result<usize> {
    PropagatedLayout::new(dims.0, dims.1, *params)?.offset(i, j)
}

/// A matrix stored in the propagated layout.
///
/// `S` is the storage: `Vec<f32>` for owned matrices, `&[f32]` / `&mut [f32]`
/// for borrowed ones such as one head's column block of a larger projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedMatrix<S = Vec<f32>> {
    layout: PropagatedLayout,
    data: S,
}

pub type PropagatedView<'a> = PropagatedMatrix<&'a [f32]>;
pub type PropagatedViewMut<'a> = PropagatedMatrix<&'a mut [f32]>;

impl PropagatedMatrix<Vec<f32>> {
    pub fn zeros(rows: usize, cols: usize, params: TileParams) -> Result<Self> {
        let layout = PropagatedLayout::new(rows, cols, params)?;
        Ok(PropagatedMatrix { layout, data: vec![0.0; layout.len()] })
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

impl<S: AsRef<[f32]>> PropagatedMatrix<S> {
    pub fn from_parts(layout: PropagatedLayout, data: S) -> Result<Self> {
        if data.as_ref().len() != layout.len() {
            return Err(mismatch(format!(
                "propagated {}x{} matrix needs {} elements, got {}",
                layout.rows(),
                layout.cols(),
                layout.len(),
                data.as_ref().len()
            )));
        }
        Ok(PropagatedMatrix { layout, data })
    }

    pub fn layout(&self) -> &PropagatedLayout {
        &self.layout
    }

    pub fn rows(&self) -> usize {
        self.layout.rows
    }

    pub fn cols(&self) -> usize {
        self.layout.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        self.layout.dims()
    }

    pub fn params(&self) -> TileParams {
        self.layout.params
    }

    pub fn pad_rows(&self) -> usize {
        self.layout.pad_rows
    }

    pub fn pad_cols(&self) -> usize {
        self.layout.pad_cols
    }

    pub fn data(&self) -> &[f32] {
        self.data.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data.as_ref()[self.layout.offset_unchecked(i, j)]
    }

    pub fn view(&self) -> PropagatedView<'_> {
        PropagatedMatrix { layout: self.layout, data: self.data.as_ref() }
    }

    /// Column block `jb` as a standalone propagated matrix (zero-copy).
    ///
    /// The outermost level of the layout is the column block, so a block of
    /// width `nc` is itself a valid propagated `rows x nc` matrix with the same
    /// parameters.
    pub fn col_block(&self, jb: usize) -> Result<PropagatedView<'_>> {
        if jb >= self.layout.col_blocks() {
            return Err(Error::InvalidArgument(format!(
                "column block {jb} out of range ({} blocks)",
                self.layout.col_blocks()
            )));
        }
        let nc = self.layout.params.nc;
        let col0 = jb * nc;
        let cols = (self.layout.cols - col0).min(nc);
        let sub = PropagatedLayout::new(self.layout.rows, cols, self.layout.params)?;
        let start = col0 * self.layout.pad_rows;
        Ok(PropagatedMatrix { layout: sub, data: &self.data.as_ref()[start..start + sub.len()] })
    }

    /// Copies the logical region into a canonical matrix.
    pub fn to_canonical(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows(), self.cols());
        let data = self.data.as_ref();
        let mr = self.layout.params.mr;
        for i0 in (0..self.layout.rows).step_by(mr) {
            let live = mr.min(self.layout.rows - i0);
            for (j, off) in self.layout.panel_runs(i0) {
                for r in 0..live {
                    out.set(i0 + r, j, data[off + r]);
                }
            }
        }
        out
    }

    /// True when every padding position holds zero.
    pub fn padding_is_zero(&self) -> bool {
        let data = self.data.as_ref();
        let mut logical = vec![false; data.len()];
        for i in 0..self.layout.rows {
            for j in 0..self.layout.cols {
                logical[self.layout.offset_unchecked(i, j)] = true;
            }
        }
        data.iter().zip(&logical).all(|(&v, &l)| l || v == 0.0)
    }
}

impl<S: AsRef<[f32]> + AsMut<[f32]>> PropagatedMatrix<S> {
    pub fn data_mut(&mut self) -> &mut [f32] {
        self.data.as_mut()
    }

    pub fn set(&mut self, i: usize, j: usize, v: f32) {
        let off = self.layout.offset_unchecked(i, j);
        self.data.as_mut()[off] = v;
    }

    pub fn view_mut(&mut self) -> PropagatedViewMut<'_> {
        PropagatedMatrix { layout: self.layout, data: self.data.as_mut() }
    }
}

/// Placement of output blocks relative to dense storage order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BlockOrder {
    #[default]
    Identity,
    /// `slots[b]` is the storage slot of the block with storage-order index `b`.
    Permutation(Vec<usize>),
}

/// Where a propagating kernel writes its output blocks.
///
/// Blocks are laid down slot by slot starting at `offset`; after each block
/// `inter_block_stride` elements are skipped. `block_order` decides which
/// block goes to which slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StoreSpec {
    pub block_order: BlockOrder,
    pub inter_block_stride: usize,
    pub offset: usize,
}

impl StoreSpec {
    /// Identity order, no gaps, starting at element 0.
    pub fn dense() -> Self {
        StoreSpec::default()
    }

    pub fn at_offset(offset: usize) -> Self {
        StoreSpec { offset, ..StoreSpec::default() }
    }

    pub fn is_dense(&self) -> bool {
        self.block_order == BlockOrder::Identity && self.inter_block_stride == 0 && self.offset == 0
    }

    pub fn validate(&self, layout: &PropagatedLayout) -> Result<()> {
        if let BlockOrder::Permutation(slots) = &self.block_order {
            let n = layout.block_count();
            if slots.len() != n {
                return Err(Error::Layout(format!("block order has {} entries for {n} blocks", slots.len())));
            }
            let mut seen = vec![false; n];
            for &s in slots {
                if s >= n || std::mem::replace(&mut seen[s], true) {
                    return Err(Error::Layout("block order is not a permutation".into()));
                }
            }
        }
        Ok(())
    }

    /// Destination offset of every block, indexed by storage-order block index.
    pub fn block_offsets(&self, layout: &PropagatedLayout) -> Result<Vec<usize>> {
        self.validate(layout)?;
        let blocks: Vec<BlockInfo> = layout.blocks().collect();
        match &self.block_order {
            BlockOrder::Identity => {
                let mut next = self.offset;
                Ok(blocks
                    .iter()
                    .map(|b| {
                        let at = next;
                        next += b.len() + self.inter_block_stride;
                        at
                    })
                    .collect())
            }
            BlockOrder::Permutation(slots) => {
                let mut by_slot = vec![0; blocks.len()];
                for (b, &s) in slots.iter().enumerate() {
                    by_slot[s] = b;
                }
                let mut offsets = vec![0; blocks.len()];
                let mut next = self.offset;
                for &b in &by_slot {
                    offsets[b] = next;
                    next += blocks[b].len() + self.inter_block_stride;
                }
                Ok(offsets)
            }
        }
    }

    /// Smallest destination buffer that can hold the stored blocks.
    pub fn required_len(&self, layout: &PropagatedLayout) -> Result<usize> {
        let offsets = self.block_offsets(layout)?;
        Ok(layout.blocks().zip(offsets).map(|(b, o)| o + b.len()).max().unwrap_or(self.offset))
    }

    /// Reads blocks stored under this spec back into a dense propagated matrix.
    pub fn gather(&self, layout: &PropagatedLayout, src: &[f32]) -> Result<PropagatedMatrix> {
        let offsets = self.block_offsets(layout)?;
        if src.len() < self.required_len(layout)? {
            return Err(mismatch("source buffer too short for store spec"));
        }
        let mut out = vec![0.0; layout.len()];
        for (b, off) in layout.blocks().zip(offsets) {
            out[b.dense_offset..b.dense_offset + b.len()].copy_from_slice(&src[off..off + b.len()]);
        }
        PropagatedMatrix::from_parts(*layout, out)
    }

    /// Writes a dense propagated matrix into `dst` under this spec.
    pub fn scatter<S: AsRef<[f32]>>(&self, src: &PropagatedMatrix<S>, dst: &mut [f32]) -> Result<()> {
        let layout = *src.layout();
        let offsets = self.block_offsets(&layout)?;
        if dst.len() < self.required_len(&layout)? {
            return Err(mismatch("destination buffer too short for store spec"));
        }
        for (b, off) in layout.blocks().zip(offsets) {
            dst[off..off + b.len()].copy_from_slice(&src.data()[b.dense_offset..b.dense_offset + b.len()]);
        }
        Ok(())
    }
}

pub(crate) fn check_same_dims(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        return Err(mismatch(format!("{what}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1)));
    }
    Ok(())
}

impl<'a> From<&'a PropagatedMatrix> for PropagatedView<'a> {
    fn from(m: &'a PropagatedMatrix) -> Self {
        m.view()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(mc: usize, nc: usize, kc: usize, mr: usize, nr: usize) -> TileParams {
        TileParams::new(mc, nc, kc, mr, nr).unwrap()
    }

    #[test]
    fn first_element_is_zero() {
        assert_eq!(propagated_offset(0, 0, (5, 7), &p(4, 4, 4, 2, 2)).unwrap(), 0);
    }

    #[test]
    fn four_by_four_enumeration() {
        // Brute force: collect every offset, then check permutation and tile contiguity.
        let params = p(4, 4, 4, 2, 2);
        let mut seen = vec![false; 16];
        for i in 0..4 {
            for j in 0..4 {
                let o = propagated_offset(i, j, (4, 4), &params).unwrap();
                assert!(!seen[o]);
                seen[o] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        let tile: Vec<usize> =
            [(0, 0), (1, 0), (0, 1), (1, 1)].iter().map(|&(i, j)| propagated_offset(i, j, (4, 4), &params).unwrap()).collect();
        // Rows fastest within a column of the micro-tile.
        assert_eq!(tile, vec![0, 1, 2, 3]);
        // Next row panel of the same column group follows, then the next group.
        assert_eq!(propagated_offset(2, 0, (4, 4), &params).unwrap(), 4);
        assert_eq!(propagated_offset(0, 2, (4, 4), &params).unwrap(), 8);
    }

    #[test]
    fn six_by_six_with_padding() {
        let params = p(4, 4, 4, 4, 4);
        let layout = PropagatedLayout::new(6, 6, params).unwrap();
        assert_eq!((layout.pad_rows(), layout.pad_cols()), (8, 8));
        let mut logical = std::collections::HashSet::new();
        for i in 0..6 {
            for j in 0..6 {
                assert!(logical.insert(layout.offset(i, j).unwrap()));
            }
        }
        let mut padding = std::collections::HashSet::new();
        for i in 0..8 {
            for j in 0..8 {
                if i >= 6 || j >= 6 {
                    let o = layout.offset(i, j).unwrap();
                    assert!(!logical.contains(&o));
                    assert!(padding.insert(o));
                }
            }
        }
        assert_eq!(logical.len() + padding.len(), 64);
    }

    #[test]
    fn out_of_range_index() {
        let err = propagated_offset(8, 0, (6, 6), &p(4, 4, 4, 4, 4)).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { .. }));
        assert!(propagated_offset(7, 7, (6, 6), &p(4, 4, 4, 4, 4)).is_ok());
    }

    #[test]
    fn panel_runs_match_offsets() {
        let params = p(6, 8, 4, 3, 2);
        let layout = PropagatedLayout::new(13, 19, params).unwrap();
        for i0 in (0..13).step_by(3) {
            let runs: Vec<_> = layout.panel_runs(i0).collect();
            assert_eq!(runs.len(), 19);
            for (j, off) in runs {
                for r in 0..3 {
                    assert_eq!(layout.offset(i0 + r, j).unwrap(), off + r);
                }
            }
        }
    }

    #[test]
    fn col_block_is_standalone_propagated_matrix() {
        let params = p(4, 4, 4, 2, 2);
        let mut m = PropagatedMatrix::zeros(5, 12, params).unwrap();
        for i in 0..5 {
            for j in 0..12 {
                m.set(i, j, (i * 100 + j) as f32);
            }
        }
        let blk = m.col_block(1).unwrap();
        assert_eq!(blk.dims(), (5, 4));
        for i in 0..5 {
            for j in 0..4 {
                assert_eq!(blk.get(i, j), (i * 100 + 4 + j) as f32);
            }
        }
        assert!(m.col_block(3).is_err());
    }

    #[test]
    fn store_spec_permutation_must_be_bijective() {
        let layout = PropagatedLayout::new(8, 8, p(4, 4, 4, 2, 2)).unwrap();
        assert_eq!(layout.block_count(), 4);
        let bad = StoreSpec { block_order: BlockOrder::Permutation(vec![0, 1, 1, 2]), ..StoreSpec::dense() };
        assert!(bad.validate(&layout).is_err());
        let short = StoreSpec { block_order: BlockOrder::Permutation(vec![0, 1]), ..StoreSpec::dense() };
        assert!(short.validate(&layout).is_err());
        let ok = StoreSpec { block_order: BlockOrder::Permutation(vec![3, 1, 0, 2]), ..StoreSpec::dense() };
        assert_eq!(ok.block_offsets(&layout).unwrap(), vec![48, 16, 0, 32]);
    }

    #[test]
    fn store_spec_stride_and_offset() {
        let layout = PropagatedLayout::new(6, 4, p(4, 4, 4, 2, 2)).unwrap();
        // Blocks: 4x4 then 2x4.
        let spec = StoreSpec { inter_block_stride: 3, offset: 5, ..StoreSpec::dense() };
        assert_eq!(spec.block_offsets(&layout).unwrap(), vec![5, 24]);
        assert_eq!(spec.required_len(&layout).unwrap(), 32);
    }
}
