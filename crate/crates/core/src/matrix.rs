//! Canonical row-major matrices with an explicit leading dimension.
//!
//! Element `(i, j)` lives at `i * leading_dim + j`. Views are cheap to copy and
//! sub-views share the parent's buffer, so a row or column window of a larger
//! matrix can be handed to a kernel without copying.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{mismatch, Error, Result};

fn required_len(rows: usize, cols: usize, ld: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * ld + cols
    }
}

fn check_shape(rows: usize, cols: usize, ld: usize, len: usize) -> Result<()> {
    if ld < cols {
        return Err(Error::InvalidArgument(format!(
            "leading dimension {ld} is smaller than column count {cols}"
        )));
    }
    let need = required_len(rows, cols, ld);
    if len < need {
        return Err(Error::InvalidArgument(format!(
            "buffer of {len} elements cannot hold a {rows}x{cols} matrix with leading dimension {ld} (needs {need})"
        )));
    }
    Ok(())
}

fn check_window(rows: usize, cols: usize, r0: usize, c0: usize, nr: usize, nc: usize) -> Result<()> {
    if r0 + nr > rows || c0 + nc > cols {
        return Err(Error::InvalidArgument(format!(
            "window at ({r0}, {c0}) of size {nr}x{nc} exceeds {rows}x{cols} matrix"
        )));
    }
    Ok(())
}

/// Immutable window over a row-major buffer.
#[derive(Debug, Clone, Copy)]
pub struct MatrixView<'a> {
    rows: usize,
    cols: usize,
    leading_dim: usize,
    data: &'a [f32],
}

impl<'a> MatrixView<'a> {
    pub fn new(data: &'a [f32], rows: usize, cols: usize, leading_dim: usize) -> Result<Self> {
        check_shape(rows, cols, leading_dim, data.len())?;
        Ok(MatrixView {
            rows,
            cols,
            leading_dim,
            data: &data[..required_len(rows, cols, leading_dim)],
        })
    }

    /// Densely packed `rows x cols` view.
    pub fn from_slice(data: &'a [f32], rows: usize, cols: usize) -> Result<Self> {
        Self::new(data, rows, cols, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn leading_dim(&self) -> usize {
        self.leading_dim
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// The backing storage, starting at element `(0, 0)`.
    pub fn data(&self) -> &'a [f32] {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.leading_dim + j]
    }

    /// Row `i` restricted to the view's columns.
    #[inline]
    pub fn row(&self, i: usize) -> &'a [f32] {
        let start = i * self.leading_dim;
        &self.data[start..start + self.cols]
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<MatrixView<'a>> {
        check_window(self.rows, self.cols, r0, c0, rows, cols)?;
        if rows == 0 || cols == 0 {
            return Ok(MatrixView { rows, cols, leading_dim: self.leading_dim, data: &[] });
        }
        let start = r0 * self.leading_dim + c0;
        Ok(MatrixView {
            rows,
            cols,
            leading_dim: self.leading_dim,
            data: &self.data[start..start + required_len(rows, cols, self.leading_dim)],
        })
    }

    pub fn rows_window(&self, r0: usize, rows: usize) -> Result<MatrixView<'a>> {
        self.submatrix(r0, 0, rows, self.cols)
    }

    pub fn cols_window(&self, c0: usize, cols: usize) -> Result<MatrixView<'a>> {
        self.submatrix(0, c0, self.rows, cols)
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, &v) in self.row(i).iter().enumerate() {
                out.data[j * self.rows + i] = v;
            }
        }
        out
    }
}

/// Mutable window over a row-major buffer.
#[derive(Debug)]
pub struct MatrixViewMut<'a> {
    rows: usize,
    cols: usize,
    leading_dim: usize,
    data: &'a mut [f32],
}

impl<'a> MatrixViewMut<'a> {
    pub fn new(data: &'a mut [f32], rows: usize, cols: usize, leading_dim: usize) -> Result<Self> {
        check_shape(rows, cols, leading_dim, data.len())?;
        let len = required_len(rows, cols, leading_dim);
        Ok(MatrixViewMut { rows, cols, leading_dim, data: &mut data[..len] })
    }

    pub fn from_slice(data: &'a mut [f32], rows: usize, cols: usize) -> Result<Self> {
        Self::new(data, rows, cols, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn leading_dim(&self) -> usize {
        self.leading_dim
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_view(&self) -> MatrixView<'_> {
        MatrixView { rows: self.rows, cols: self.cols, leading_dim: self.leading_dim, data: self.data }
    }

    /// Reborrow with a shorter lifetime.
    pub fn reborrow(&mut self) -> MatrixViewMut<'_> {
        MatrixViewMut { rows: self.rows, cols: self.cols, leading_dim: self.leading_dim, data: self.data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.leading_dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f32) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.leading_dim + j] = v;
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        let start = i * self.leading_dim;
        &mut self.data[start..start + self.cols]
    }

    pub fn submatrix_mut(&mut self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<MatrixViewMut<'_>> {
        check_window(self.rows, self.cols, r0, c0, rows, cols)?;
        if rows == 0 || cols == 0 {
            return Ok(MatrixViewMut { rows, cols, leading_dim: self.leading_dim, data: &mut [] });
        }
        let start = r0 * self.leading_dim + c0;
        let len = required_len(rows, cols, self.leading_dim);
        Ok(MatrixViewMut { rows, cols, leading_dim: self.leading_dim, data: &mut self.data[start..start + len] })
    }

    /// Like [`submatrix_mut`](Self::submatrix_mut) but consumes the view, keeping its lifetime.
    pub fn into_submatrix(self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<MatrixViewMut<'a>> {
        check_window(self.rows, self.cols, r0, c0, rows, cols)?;
        if rows == 0 || cols == 0 {
            return Ok(MatrixViewMut { rows, cols, leading_dim: self.leading_dim, data: &mut [] });
        }
        let start = r0 * self.leading_dim + c0;
        let len = required_len(rows, cols, self.leading_dim);
        Ok(MatrixViewMut { rows, cols, leading_dim: self.leading_dim, data: &mut self.data[start..start + len] })
    }

    pub fn fill(&mut self, v: f32) {
        for i in 0..self.rows {
            self.row_mut(i).fill(v);
        }
    }

    pub fn copy_from(&mut self, src: &MatrixView<'_>) -> Result<()> {
        if src.dims() != self.dims() {
            return Err(mismatch(format!(
                "cannot copy {}x{} into {}x{}",
                src.rows(),
                src.cols(),
                self.rows,
                self.cols
            )));
        }
        for i in 0..self.rows {
            self.row_mut(i).copy_from_slice(src.row(i));
        }
        Ok(())
    }
}

/// Owned dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(mismatch(format!(
                "{} elements supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Uniform entries in `[-1, 1)` drawn from ChaCha8 seeded with `seed`.
    pub fn random(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(rows, cols, &mut rng)
    }

    pub fn random_with(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        Self::from_fn(rows, cols, |_, _| rng.random_range(-1.0f32..1.0))
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f32) {
        self.data[i * self.cols + j] = v;
    }

    pub fn view(&self) -> MatrixView<'_> {
        MatrixView { rows: self.rows, cols: self.cols, leading_dim: self.cols, data: &self.data }
    }

    pub fn view_mut(&mut self) -> MatrixViewMut<'_> {
        MatrixViewMut { rows: self.rows, cols: self.cols, leading_dim: self.cols, data: &mut self.data }
    }

    pub fn transpose(&self) -> Matrix {
        self.view().transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iota(rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| (i * cols + j) as f32)
    }

    #[test]
    fn offsets_follow_leading_dim() {
        let buf: Vec<f32> = (0..20).map(|x| x as f32).collect();
        let v = MatrixView::new(&buf, 3, 4, 6).unwrap();
        assert_eq!(v.get(0, 0), 0.0);
        assert_eq!(v.get(1, 0), 6.0);
        assert_eq!(v.get(2, 3), 15.0);
        assert_eq!(v.row(1), &[6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn rejects_short_leading_dim_and_buffer() {
        let buf = vec![0.0; 12];
        assert!(MatrixView::new(&buf, 3, 4, 3).is_err());
        assert!(MatrixView::new(&buf, 3, 4, 5).is_err());
        // (3 - 1) * 4 + 4 = 12 fits exactly.
        assert!(MatrixView::new(&buf, 3, 4, 4).is_ok());
    }

    #[test]
    fn nested_subviews_compose() {
        let m = iota(9, 11);
        let v = m.view();
        for (r0, c0, r1, c1) in [(1, 2, 2, 3), (0, 0, 3, 4), (3, 5, 0, 1)] {
            let outer = v.submatrix(r0, c0, 6, 6).unwrap();
            let inner = outer.submatrix(r1, c1, 3, 2).unwrap();
            let direct = v.submatrix(r0 + r1, c0 + c1, 3, 2).unwrap();
            assert_eq!(inner.to_matrix(), direct.to_matrix());
            assert_eq!(inner.leading_dim(), 11);
        }
    }

    #[test]
    fn window_out_of_bounds_is_error() {
        let m = iota(4, 4);
        assert!(m.view().submatrix(2, 2, 3, 1).is_err());
        assert!(m.view().cols_window(3, 2).is_err());
    }

    #[test]
    fn transpose_round_trip() {
        let m = iota(3, 5);
        let t = m.transpose();
        assert_eq!(t.dims(), (5, 3));
        assert_eq!(t.get(4, 2), m.get(2, 4));
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn mutable_window_writes_through() {
        let mut m = Matrix::zeros(4, 5);
        {
            let mut v = m.view_mut();
            let mut w = v.submatrix_mut(1, 2, 2, 2).unwrap();
            w.fill(3.0);
        }
        assert_eq!(m.get(1, 2), 3.0);
        assert_eq!(m.get(2, 3), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.get(3, 3), 0.0);
    }
}
