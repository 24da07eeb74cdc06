//! Row-wise and elementwise operators on propagated and canonical matrices.
//!
//! In the propagated layout the `mr` rows of a panel are interleaved: column
//! `j` of rows `i0..i0 + mr` is one contiguous run. The propagated variants
//! walk those runs, so every pass updates `mr` rows at once, and they never
//! write padding.

use crate::error::{mismatch, Error, Result};
use crate::layout::PropagatedMatrix;
use crate::matrix::{MatrixView, MatrixViewMut};

/// Default RoPE frequency base.
pub const ROPE_THETA: f32 = 10000.0;
/// Default RMSNorm epsilon.
pub const RMS_EPS: f32 = 1e-5;

/// Additive mask applied to scores before the softmax exponentials.
#[derive(Debug, Clone, Copy)]
pub enum Mask<'a> {
    /// Row `i` sees columns `0..=i + offset`.
    Causal { offset: usize },
    /// Added elementwise; `-inf` removes a position.
    Additive(MatrixView<'a>),
}

impl Mask<'_> {
    /// Causal mask for square score matrices.
    pub fn causal() -> Self {
        Mask::Causal { offset: 0 }
    }

    #[inline]
    fn bias(&self, i: usize, j: usize) -> f32 {
        match self {
            Mask::Causal { offset } => {
                if j > i + offset {
                    f32::NEG_INFINITY
                } else {
                    0.0
                }
            }
            Mask::Additive(m) => m.get(i, j),
        }
    }

    fn check(&self, dims: (usize, usize)) -> Result<()> {
        match self {
            Mask::Causal { .. } => Ok(()),
            Mask::Additive(m) if m.dims() == dims => Ok(()),
            Mask::Additive(m) => Err(mismatch(format!(
                "mask is {}x{}, scores are {}x{}",
                m.rows(),
                m.cols(),
                dims.0,
                dims.1
            ))),
        }
    }
}

/// Visits each `mr`-row panel as `(i0, live rows, [(column, run offset)])`.
fn for_each_panel<S: AsRef<[f32]> + AsMut<[f32]>>(
    x: &mut PropagatedMatrix<S>,
    mut f: impl FnMut(&mut [f32], usize, usize, &[(usize, usize)]),
) {
    let layout = *x.layout();
    let mr = layout.params().mr;
    let data = x.data_mut();
    let mut runs = Vec::with_capacity(layout.cols());
    for i0 in (0..layout.rows()).step_by(mr) {
        runs.clear();
        runs.extend(layout.panel_runs(i0));
        f(data, i0, mr.min(layout.rows() - i0), &runs);
    }
}

/// Multiplies every element by `s`. Padding stays zero.
pub fn scale_inplace<S: AsRef<[f32]> + AsMut<[f32]>>(x: &mut PropagatedMatrix<S>, s: f32) {
    x.data_mut().iter_mut().for_each(|v| *v *= s);
}

pub fn scale_canonical(x: &mut MatrixViewMut<'_>, s: f32) {
    for i in 0..x.rows() {
        x.row_mut(i).iter_mut().for_each(|v| *v *= s);
    }
}

/// Max-stabilised softmax of each logical row.
///
/// A row whose every position is masked out becomes all zeros.
pub fn softmax_rows<S: AsRef<[f32]> + AsMut<[f32]>>(x: &mut PropagatedMatrix<S>, mask: Option<&Mask<'_>>) -> Result<()> {
    if let Some(m) = mask {
        m.check(x.dims())?;
    }
    let mr = x.params().mr;
    let mut max = vec![0.0f32; mr];
    let mut sum = vec![0.0f32; mr];
    for_each_panel(x, |data, i0, live, runs| {
        max[..live].fill(f32::NEG_INFINITY);
        sum[..live].fill(0.0);
        if let Some(m) = mask {
            for &(j, off) in runs {
                for r in 0..live {
                    data[off + r] += m.bias(i0 + r, j);
                }
            }
        }
        for &(_, off) in runs {
            for r in 0..live {
                max[r] = max[r].max(data[off + r]);
            }
        }
        for &(_, off) in runs {
            for r in 0..live {
                let e = if max[r] == f32::NEG_INFINITY { 0.0 } else { (data[off + r] - max[r]).exp() };
                data[off + r] = e;
                sum[r] += e;
            }
        }
        for &(_, off) in runs {
            for r in 0..live {
                if sum[r] > 0.0 {
                    data[off + r] /= sum[r];
                }
            }
        }
    });
    Ok(())
}

/// Scalar row-by-row softmax, same arithmetic as [`softmax_rows`].
pub fn softmax_rows_canonical(x: &mut MatrixViewMut<'_>, mask: Option<&Mask<'_>>) -> Result<()> {
    if let Some(m) = mask {
        m.check(x.dims())?;
    }
    for i in 0..x.rows() {
        let row = x.row_mut(i);
        if let Some(m) = mask {
            row.iter_mut().enumerate().for_each(|(j, v)| *v += m.bias(i, j));
        }
        let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0f32;
        for v in row.iter_mut() {
            *v = if max == f32::NEG_INFINITY { 0.0 } else { (*v - max).exp() };
            sum += *v;
        }
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
    }
    Ok(())
}

fn check_rope(dims: (usize, usize), head_dim: usize, positions: &[usize]) -> Result<()> {
    if head_dim == 0 || head_dim % 2 != 0 {
        return Err(Error::InvalidArgument(format!("head dimension {head_dim} must be even and nonzero")));
    }
    if dims.1 % head_dim != 0 {
        return Err(mismatch(format!("{} columns is not a whole number of {head_dim}-wide heads", dims.1)));
    }
    if positions.len() != dims.0 {
        return Err(mismatch(format!("{} positions for {} rows", positions.len(), dims.0)));
    }
    Ok(())
}

/// `(cos, sin)` of the rotation of pair `d` at position `p`.
#[inline]
fn rope_angle(p: usize, d: usize, head_dim: usize, theta_base: f32) -> (f32, f32) {
    let freq = (theta_base as f64).powf(-2.0 * d as f64 / head_dim as f64);
    let a = p as f64 * freq;
    (a.cos() as f32, a.sin() as f32)
}

#[inline]
fn rotate(x0: f32, x1: f32, (c, s): (f32, f32)) -> (f32, f32) {
    (x0 * c - x1 * s, x0 * s + x1 * c)
}

/// Rotary position embedding: within every head, pair `(2d, 2d + 1)` of a row
/// at position `p` is rotated by `p * theta_base^(-2d / head_dim)`.
pub fn rope_inplace<S: AsRef<[f32]> + AsMut<[f32]>>(
    x: &mut PropagatedMatrix<S>,
    head_dim: usize,
    positions: &[usize],
    theta_base: f32,
) -> Result<()> {
    check_rope(x.dims(), head_dim, positions)?;
    let mr = x.params().mr;
    let half = head_dim / 2;
    let mut table = vec![(1.0f32, 0.0f32); mr * half];
    for_each_panel(x, |data, i0, live, runs| {
        for r in 0..live {
            for d in 0..half {
                table[r * half + d] = rope_angle(positions[i0 + r], d, head_dim, theta_base);
            }
        }
        for pair in runs.chunks_exact(2) {
            let (j, off0) = pair[0];
            let off1 = pair[1].1;
            let d = (j % head_dim) / 2;
            for r in 0..live {
                let (y0, y1) = rotate(data[off0 + r], data[off1 + r], table[r * half + d]);
                data[off0 + r] = y0;
                data[off1 + r] = y1;
            }
        }
    });
    Ok(())
}

/// Scalar reference for [`rope_inplace`] on a canonical matrix.
pub fn rope_canonical(x: &mut MatrixViewMut<'_>, head_dim: usize, positions: &[usize], theta_base: f32) -> Result<()> {
    check_rope(x.dims(), head_dim, positions)?;
    for i in 0..x.rows() {
        let row = x.row_mut(i);
        for j in (0..row.len()).step_by(2) {
            let d = (j % head_dim) / 2;
            let (y0, y1) = rotate(row[j], row[j + 1], rope_angle(positions[i], d, head_dim, theta_base));
            row[j] = y0;
            row[j + 1] = y1;
        }
    }
    Ok(())
}

fn check_gain(cols: usize, gain: &[f32]) -> Result<()> {
    if gain.len() != cols {
        return Err(mismatch(format!("gain has {} entries for {cols} columns", gain.len())));
    }
    Ok(())
}

/// `x_r * gain / sqrt(mean(x_r^2) + eps)` for every row `r`.
pub fn rmsnorm_rows<S: AsRef<[f32]> + AsMut<[f32]>>(x: &mut PropagatedMatrix<S>, gain: &[f32], eps: f32) -> Result<()> {
    check_gain(x.cols(), gain)?;
    let mr = x.params().mr;
    let cols = x.cols() as f64;
    let mut ss = vec![0.0f64; mr];
    let mut inv = vec![0.0f32; mr];
    for_each_panel(x, |data, _, live, runs| {
        ss[..live].fill(0.0);
        for &(_, off) in runs {
            for r in 0..live {
                let v = data[off + r] as f64;
                ss[r] += v * v;
            }
        }
        for r in 0..live {
            inv[r] = (1.0 / (ss[r] / cols + eps as f64).sqrt()) as f32;
        }
        for &(j, off) in runs {
            for r in 0..live {
                data[off + r] = data[off + r] * inv[r] * gain[j];
            }
        }
    });
    Ok(())
}

/// Scalar reference for [`rmsnorm_rows`] on a canonical matrix.
pub fn rmsnorm_rows_canonical(x: &mut MatrixViewMut<'_>, gain: &[f32], eps: f32) -> Result<()> {
    check_gain(x.cols(), gain)?;
    let cols = x.cols() as f64;
    for i in 0..x.rows() {
        let row = x.row_mut(i);
        let ss: f64 = row.iter().map(|&v| v as f64 * v as f64).sum();
        let inv = (1.0 / (ss / cols + eps as f64).sqrt()) as f32;
        for (v, &g) in row.iter_mut().zip(gain) {
            *v = *v * inv * g;
        }
    }
    Ok(())
}
