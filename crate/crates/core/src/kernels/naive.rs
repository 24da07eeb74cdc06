use crate::error::Result;
use crate::kernels::GemmProblem;
use crate::matrix::{MatrixView, MatrixViewMut};

/// Reference `C = alpha * A * B + beta * C`: every output element is a dot
/// product accumulated in `f64` over `l = 0..k` in order, rounded once.
pub fn gemm_naive(
    problem: &GemmProblem,
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    c: &mut MatrixViewMut<'_>,
) -> Result<()> {
    problem.check(a.dims(), b.dims(), c.dims())?;
    let (alpha, beta) = (problem.alpha as f64, problem.beta as f64);
    let mut acc = vec![0.0f64; problem.n];
    for i in 0..problem.m {
        acc.fill(0.0);
        for (l, &av) in a.row(i).iter().enumerate() {
            let av = av as f64;
            for (s, &bv) in acc.iter_mut().zip(b.row(l)) {
                *s += av * bv as f64;
            }
        }
        let c_row = c.row_mut(i);
        for (cv, &s) in c_row.iter_mut().zip(&acc) {
            let prev = if beta == 0.0 { 0.0 } else { beta * *cv as f64 };
            *cv = (prev + alpha * s) as f32;
        }
    }
    Ok(())
}
