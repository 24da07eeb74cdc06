//! Packing of canonical operands into micro-kernel panel order, and conversion
//! between canonical and propagated storage.

use crate::counters::PackCounters;
use crate::error::{Error, Result};
use crate::layout::{check_same_dims, round_up, PropagatedLayout, PropagatedMatrix};
use crate::matrix::{Matrix, MatrixView, MatrixViewMut};
use crate::params::TileParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelKind {
    /// `mc x kc` block of the multiplier, stored as `mr`-row panels.
    MultiplierSA,
    /// `kc x nr` panel of the multiplicand.
    MultiplicandSB,
}

/// A packed operand block.
///
/// Multiplier blocks hold `ceil(rows / mr)` panels of `cols x mr` elements with
/// the `mr` rows of each column adjacent. Multiplicand panels hold `rows x nr`
/// elements with the `nr` columns of each row adjacent.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedPanelBuffer {
    pub kind: PanelKind,
    /// Requested (unpadded) block dimensions: `(mc, kc)` or `(kc, nr)`.
    pub block_dims: (usize, usize),
    /// Interleave width: `mr` for multiplier blocks, `nr` for multiplicand panels.
    pub interleave: usize,
    /// Position of the block's top-left element in the source matrix.
    pub origin: (usize, usize),
    pub data: Vec<f32>,
}

impl PackedPanelBuffer {
    /// Rebuilds the (padded) block in canonical order.
    pub fn unpack(&self) -> Matrix {
        let (rows, cols) = self.block_dims;
        let w = self.interleave;
        match self.kind {
            PanelKind::MultiplierSA => {
                let pad_rows = round_up(rows, w);
                Matrix::from_fn(pad_rows, cols, |i, l| self.data[(i / w) * cols * w + l * w + i % w])
            }
            PanelKind::MultiplicandSB => Matrix::from_fn(rows, w, |l, c| self.data[l * w + c]),
        }
    }
}

/// Packs rows `r0..r0+rows` and columns `c0..c0+cols` of `src` into `buf` as
/// `mr`-row panels, scaling by `alpha`. Rows past the end of `src` are zero.
/// Returns the number of elements written.
pub(crate) fn pack_multiplier_into(
    buf: &mut [f32],
    src: &MatrixView<'_>,
    (r0, c0): (usize, usize),
    (rows, cols): (usize, usize),
    mr: usize,
    alpha: f32,
) -> usize {
    let pad_rows = round_up(rows, mr);
    let buf = &mut buf[..pad_rows * cols];
    let src_rows = src.rows().saturating_sub(r0).min(rows);
    let src_cols = src.cols().saturating_sub(c0).min(cols);
    for (p, panel) in buf.chunks_exact_mut(cols * mr).enumerate() {
        let pr0 = p * mr;
        let live = src_rows.saturating_sub(pr0).min(mr);
        if live < mr || src_cols < cols {
            panel.fill(0.0);
        }
        for r in 0..live {
            let row = &src.row(r0 + pr0 + r)[c0..c0 + src_cols];
            if alpha == 1.0 {
                for (l, &v) in row.iter().enumerate() {
                    panel[l * mr + r] = v;
                }
            } else {
                for (l, &v) in row.iter().enumerate() {
                    panel[l * mr + r] = alpha * v;
                }
            }
        }
    }
    pad_rows * cols
}

/// Packs a `rows x nr` multiplicand panel starting at `(r0, c0)` into `buf`,
/// zero-filling columns past the end of `src`. Returns elements written.
pub(crate) fn pack_multiplicand_into(
    buf: &mut [f32],
    src: &MatrixView<'_>,
    (r0, c0): (usize, usize),
    rows: usize,
    nr: usize,
) -> usize {
    let buf = &mut buf[..rows * nr];
    let live_cols = src.cols().saturating_sub(c0).min(nr);
    let live_rows = src.rows().saturating_sub(r0).min(rows);
    if live_cols < nr || live_rows < rows {
        buf.fill(0.0);
    }
    for l in 0..live_rows {
        let row = &src.row(r0 + l)[c0..c0 + live_cols];
        buf[l * nr..l * nr + live_cols].copy_from_slice(row);
    }
    rows * nr
}

fn check_origin(src: &MatrixView<'_>, origin: (usize, usize)) -> Result<()> {
    if origin.0 >= src.rows() || origin.1 >= src.cols() {
        return Err(Error::InvalidArgument(format!(
            "block origin {origin:?} lies outside the {}x{} source",
            src.rows(),
            src.cols()
        )));
    }
    Ok(())
}

/// Packs one `mc x kc` multiplier block (Goto's `sa` buffer).
pub fn pack_multiplier(
    src: &MatrixView<'_>,
    block_origin: (usize, usize),
    block_dims: (usize, usize),
    params: &TileParams,
    counters: &mut PackCounters,
) -> Result<PackedPanelBuffer> {
    params.validate()?;
    check_origin(src, block_origin)?;
    let mut data = vec![0.0; round_up(block_dims.0, params.mr) * block_dims.1];
    let n = pack_multiplier_into(&mut data, src, block_origin, block_dims, params.mr, 1.0);
    counters.multiplier_pack_elems += n as u64;
    Ok(PackedPanelBuffer {
        kind: PanelKind::MultiplierSA,
        block_dims,
        interleave: params.mr,
        origin: block_origin,
        data,
    })
}

/// Packs one `kc x nr` multiplicand panel (Goto's `sb` buffer).
pub fn pack_multiplicand(
    src: &MatrixView<'_>,
    panel_origin: (usize, usize),
    panel_dims: (usize, usize),
    params: &TileParams,
    counters: &mut PackCounters,
) -> Result<PackedPanelBuffer> {
    params.validate()?;
    check_origin(src, panel_origin)?;
    let (rows, nr) = panel_dims;
    if nr != params.nr {
        return Err(Error::InvalidArgument(format!("panel width {nr} differs from nr={}", params.nr)));
    }
    let mut data = vec![0.0; rows * nr];
    let n = pack_multiplicand_into(&mut data, src, panel_origin, rows, nr);
    counters.multiplicand_pack_elems += n as u64;
    Ok(PackedPanelBuffer {
        kind: PanelKind::MultiplicandSB,
        block_dims: panel_dims,
        interleave: nr,
        origin: panel_origin,
        data,
    })
}

/// Converts a canonical matrix to the propagated layout.
pub fn pack_to_propagated(src: &MatrixView<'_>, params: &TileParams) -> Result<PropagatedMatrix> {
    pack_to_propagated_counted(src, params, &mut PackCounters::new())
}

/// [`pack_to_propagated`], recording the packed elements as multiplier packing.
pub fn pack_to_propagated_counted(
    src: &MatrixView<'_>,
    params: &TileParams,
    counters: &mut PackCounters,
) -> Result<PropagatedMatrix> {
    let layout = PropagatedLayout::new(src.rows(), src.cols(), *params)?;
    let mut data = vec![0.0; layout.len()];
    let mr = params.mr;
    for i0 in (0..src.rows()).step_by(mr) {
        let live = mr.min(src.rows() - i0);
        for (j, off) in layout.panel_runs(i0) {
            for r in 0..live {
                data[off + r] = src.get(i0 + r, j);
            }
        }
    }
    counters.multiplier_pack_elems += layout.len() as u64;
    PropagatedMatrix::from_parts(layout, data)
}

/// Copies the logical region of a propagated matrix into `dst`. Padding is dropped.
pub fn unpack_propagated<S: AsRef<[f32]>>(src: &PropagatedMatrix<S>, dst: &mut MatrixViewMut<'_>) -> Result<()> {
    unpack_propagated_counted(src, dst, &mut PackCounters::new())
}

pub fn unpack_propagated_counted<S: AsRef<[f32]>>(
    src: &PropagatedMatrix<S>,
    dst: &mut MatrixViewMut<'_>,
    counters: &mut PackCounters,
) -> Result<()> {
    check_same_dims(src.dims(), dst.dims(), "unpack destination")?;
    let layout = src.layout();
    let data = src.data();
    let mr = layout.params().mr;
    for i0 in (0..layout.rows()).step_by(mr) {
        let live = mr.min(layout.rows() - i0);
        for (j, off) in layout.panel_runs(i0) {
            for r in 0..live {
                dst.set(i0 + r, j, data[off + r]);
            }
        }
    }
    counters.unpack_elems += (layout.rows() * layout.cols()) as u64;
    Ok(())
}
