//! Chains of dependent GEMMs, `O = F_S(... F_2(F_1(X W_1) W_2) ... W_S)`.

use crate::counters::PackCounters;
use crate::error::{mismatch, Error, Result};
use crate::kernels::{gemm_naive, GemmExecutor, GemmProblem};
use crate::matrix::{Matrix, MatrixView};
use crate::params::TileParams;

/// Elementwise function applied to a stage's output.
///
/// Every variant maps zero to zero, so applying it to a whole propagated
/// buffer leaves the padding intact.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Activation {
    #[default]
    None,
    Relu,
    Scale(f32),
}

impl Activation {
    #[inline]
    pub fn apply(&self, x: f32) -> f32 {
        match *self {
            Activation::None => x,
            Activation::Relu => x.max(0.0),
            Activation::Scale(s) => x * s,
        }
    }

    pub fn apply_slice(&self, xs: &mut [f32]) {
        match *self {
            Activation::None => {}
            Activation::Relu => xs.iter_mut().for_each(|x| *x = x.max(0.0)),
            Activation::Scale(s) => xs.iter_mut().for_each(|x| *x *= s),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ChainStage<'a> {
    pub weight: MatrixView<'a>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct ChainSpec<'a> {
    pub input: MatrixView<'a>,
    pub stages: Vec<ChainStage<'a>>,
}

impl<'a> ChainSpec<'a> {
    pub fn new(input: MatrixView<'a>) -> Self {
        ChainSpec { input, stages: Vec::new() }
    }

    pub fn stage(mut self, weight: MatrixView<'a>, activation: Activation) -> Self {
        self.stages.push(ChainStage { weight, activation });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidArgument("chain has no stages".into()));
        }
        let mut cols = self.input.cols();
        for (s, stage) in self.stages.iter().enumerate() {
            if stage.weight.rows() != cols {
                return Err(mismatch(format!(
                    "stage {s} weight is {}x{} but its input has {cols} columns",
                    stage.weight.rows(),
                    stage.weight.cols()
                )));
            }
            cols = stage.weight.cols();
        }
        Ok(())
    }

    pub fn output_dims(&self) -> (usize, usize) {
        (self.input.rows(), self.stages.last().map_or(self.input.cols(), |s| s.weight.cols()))
    }

    /// Multiply-add flops over all stages.
    pub fn flops(&self) -> f64 {
        let m = self.input.rows() as f64;
        self.stages.iter().map(|s| 2.0 * m * s.weight.rows() as f64 * s.weight.cols() as f64).sum()
    }
}

impl GemmExecutor {
    /// Runs the chain with layout propagation: the first stage starts it, the
    /// middle stages keep it and the last stage restores canonical layout.
    /// Activations run directly on the propagated intermediates. A single
    /// stage degenerates to one blocked GEMM.
    pub fn chain_gemm(&mut self, spec: &ChainSpec<'_>, counters: &mut PackCounters) -> Result<Matrix> {
        spec.validate()?;
        let (m, n) = spec.output_dims();
        let mut out = Matrix::zeros(m, n);
        let stages = &spec.stages;
        if stages.len() == 1 {
            let w = &stages[0].weight;
            let problem = GemmProblem::new(m, w.cols(), w.rows());
            self.gemm_default(&problem, &spec.input, w, &mut out.view_mut(), counters)?;
            stages[0].activation.apply_slice(out.data_mut());
            return Ok(out);
        }
        let mut cur = self.gemm_ini(&spec.input, &stages[0].weight, counters)?;
        stages[0].activation.apply_slice(cur.data_mut());
        for stage in &stages[1..stages.len() - 1] {
            cur = self.gemm_mid(&cur, &stage.weight, counters)?;
            stage.activation.apply_slice(cur.data_mut());
        }
        let last = stages.last().unwrap();
        self.gemm_end(&cur, &last.weight, &mut out.view_mut(), counters)?;
        last.activation.apply_slice(out.data_mut());
        Ok(out)
    }

    /// Runs the chain as independent canonical GEMMs, packing every operand
    /// and unpacking every result.
    pub fn chain_default(&mut self, spec: &ChainSpec<'_>, counters: &mut PackCounters) -> Result<Matrix> {
        spec.validate()?;
        let m = spec.input.rows();
        let mut cur: Option<Matrix> = None;
        for stage in &spec.stages {
            let input = cur.as_ref().map_or(spec.input, |c| c.view());
            let w = &stage.weight;
            let mut next = Matrix::zeros(m, w.cols());
            self.gemm_default(&GemmProblem::new(m, w.cols(), w.rows()), &input, w, &mut next.view_mut(), counters)?;
            stage.activation.apply_slice(next.data_mut());
            cur = Some(next);
        }
        Ok(cur.unwrap())
    }
}

/// Layout-propagating chain, see [`GemmExecutor::chain_gemm`].
pub fn chain_gemm(spec: &ChainSpec<'_>, params: &TileParams, counters: &mut PackCounters) -> Result<Matrix> {
    GemmExecutor::new(*params)?.chain_gemm(spec, counters)
}

/// Canonical chain of blocked GEMMs, see [`GemmExecutor::chain_default`].
pub fn chain_default(spec: &ChainSpec<'_>, params: &TileParams, counters: &mut PackCounters) -> Result<Matrix> {
    GemmExecutor::new(*params)?.chain_default(spec, counters)
}

/// Chain evaluated with [`gemm_naive`] at every stage; intermediates are rounded to `f32`.
pub fn chain_naive(spec: &ChainSpec<'_>) -> Result<Matrix> {
    spec.validate()?;
    let m = spec.input.rows();
    let mut cur: Option<Matrix> = None;
    for stage in &spec.stages {
        let input = cur.as_ref().map_or(spec.input, |c| c.view());
        let w = &stage.weight;
        let mut next = Matrix::zeros(m, w.cols());
        gemm_naive(&GemmProblem::new(m, w.cols(), w.rows()), &input, w, &mut next.view_mut())?;
        stage.activation.apply_slice(next.data_mut());
        cur = Some(next);
    }
    Ok(cur.unwrap())
}
