//! GEMM entry points.
//!
//! * [`gemm_naive`]: triple loop with `f64` accumulation, the correctness oracle.
//! * [`gemm_default`]: Goto-style blocked GEMM writing a canonical result.
//! * [`gemm_ini`]: same loop nest, but the output is left in the propagated layout.
//! * [`gemm_mid`]: reads a propagated multiplier without packing it and writes
//!   a propagated result, so it can be chained indefinitely.
//! * [`gemm_end`]: reads a propagated multiplier and writes a canonical result.
//!
//! All blocked kernels share one driver, so for the same operands and tile
//! parameters they perform the same floating-point operations in the same
//! order and agree bit for bit.

mod chain;
mod naive;

pub use chain::{chain_default, chain_gemm, chain_naive, Activation, ChainSpec, ChainStage};
pub use naive::gemm_naive;

use crate::counters::PackCounters;
use crate::error::{mismatch, Error, Result};
use crate::layout::{round_up, PropagatedLayout, PropagatedMatrix, PropagatedView, StoreSpec};
use crate::matrix::{MatrixView, MatrixViewMut};
use crate::microkernel::MicroTileAccumulator;
use crate::packing::{pack_multiplicand_into, pack_multiplier_into, pack_to_propagated_counted, unpack_propagated_counted};
use crate::params::{compatible, TileParams};

/// Dimensions and scaling of `C = alpha * A * B + beta * C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GemmProblem {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub alpha: f32,
    pub beta: f32,
}

impl GemmProblem {
    /// `C = A * B`.
    pub fn new(m: usize, n: usize, k: usize) -> Self {
        GemmProblem { m, n, k, alpha: 1.0, beta: 0.0 }
    }

    pub fn with_scaling(self, alpha: f32, beta: f32) -> Self {
        GemmProblem { alpha, beta, ..self }
    }

    /// Floating-point operations of the product (`2 m n k`).
    pub fn flops(&self) -> f64 {
        2.0 * self.m as f64 * self.n as f64 * self.k as f64
    }

    pub(crate) fn check(&self, a: (usize, usize), b: (usize, usize), c: (usize, usize)) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return Err(Error::InvalidArgument(format!("empty problem {}x{}x{}", self.m, self.n, self.k)));
        }
        if a != (self.m, self.k) || b != (self.k, self.n) || c != (self.m, self.n) {
            return Err(mismatch(format!(
                "problem {}x{}x{} does not match A {}x{}, B {}x{}, C {}x{}",
                self.m, self.n, self.k, a.0, a.1, b.0, b.1, c.0, c.1
            )));
        }
        Ok(())
    }
}

fn check_product(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a.0 == 0 || a.1 == 0 || b.1 == 0 {
        return Err(Error::InvalidArgument(format!("empty operand {}x{} * {}x{}", a.0, a.1, b.0, b.1)));
    }
    if a.1 != b.0 {
        return Err(mismatch(format!("cannot multiply {}x{} by {}x{}", a.0, a.1, b.0, b.1)));
    }
    Ok(())
}

/// Reusable packing buffers and accumulator.
#[derive(Debug, Clone)]
struct Workspace {
    sa: Vec<f32>,
    sb: Vec<f32>,
    acc: MicroTileAccumulator,
    runs: Vec<(usize, usize)>,
}

impl Workspace {
    fn new(p: &TileParams) -> Self {
        Workspace {
            sa: vec![0.0; p.mc * p.kc],
            sb: vec![0.0; p.kc * p.nc],
            acc: MicroTileAccumulator::new(p.mr, p.nr),
            runs: Vec::with_capacity(p.kc / p.nr + 2),
        }
    }
}

enum Multiplier<'a> {
    Canonical { a: MatrixView<'a>, alpha: f32 },
    Propagated(PropagatedView<'a>),
}

enum Output<'o, 'a> {
    Canonical { c: &'o mut MatrixViewMut<'a>, beta: f32 },
    Propagated { buf: &'o mut [f32], layout: PropagatedLayout, block_offsets: Vec<usize> },
}

/// Runs `mr`-panel `i0` of a propagated matrix over columns `l0..l0 + depth`,
/// as `(offset, cols)` pairs relative to the panel's first micro-tile row.
fn propagated_runs(layout: &PropagatedLayout, i0: usize, l0: usize, depth: usize, runs: &mut Vec<(usize, usize)>) {
    let nr = layout.params().nr;
    runs.clear();
    let end = l0 + depth;
    let mut c = l0;
    while c < end {
        let n = (nr - c % nr).min(end - c);
        runs.push((layout.offset_unchecked(i0, c), n));
        c += n;
    }
}

/// Blocked GEMM loop nest shared by all kernels:
///
/// ```text
/// for j in 0..N step nc
///   for l in 0..K step kc
///     for i in 0..M step mc
///       pack sa (canonical multiplier only)
///       for jj in j..j+nc step nr
///         pack sb on the first i block
///         micro-kernel over the mr panels of sa
/// ```
///
/// With a propagated multiplier there is nothing to pack for `sa`, so the
/// `sb` panels of the `(j, l)` pass are all packed before the `i` loop.
fn drive(
    ws: &mut Workspace,
    params: &TileParams,
    mult: Multiplier<'_>,
    b: &MatrixView<'_>,
    mut out: Output<'_, '_>,
    counters: &mut PackCounters,
) {
    let TileParams { mc, nc, kc, mr, nr } = *params;
    let (m, k) = match &mult {
        Multiplier::Canonical { a, .. } => a.dims(),
        Multiplier::Propagated(a) => a.dims(),
    };
    let n = b.cols();
    let Workspace { sa, sb, acc, runs } = ws;

    for (jb, j) in (0..n).step_by(nc).enumerate() {
        let nc_eff = nc.min(n - j);
        let col_panels = nc_eff.div_ceil(nr);
        for l in (0..k).step_by(kc) {
            let kc_eff = kc.min(k - l);
            let first_pass = l == 0;
            let accumulate = match &mut out {
                Output::Canonical { c, beta } => {
                    if first_pass && *beta != 0.0 && *beta != 1.0 {
                        let mut cols = c.submatrix_mut(0, j, m, nc_eff).unwrap();
                        for i in 0..m {
                            cols.row_mut(i).iter_mut().for_each(|v| *v *= *beta);
                        }
                    }
                    !first_pass || *beta != 0.0
                }
                Output::Propagated { .. } => !first_pass,
            };

            if let Multiplier::Propagated(_) = mult {
                for q in 0..col_panels {
                    let panel = &mut sb[q * kc_eff * nr..(q + 1) * kc_eff * nr];
                    let w = pack_multiplicand_into(panel, b, (l, j + q * nr), kc_eff, nr);
                    counters.multiplicand_pack_elems += w as u64;
                }
            }

            for (ib, i) in (0..m).step_by(mc).enumerate() {
                let h = mc.min(m - i);
                let row_panels = h.div_ceil(mr);
                let a_block: &[f32] = match &mult {
                    Multiplier::Canonical { a, alpha } => {
                        let w = pack_multiplier_into(sa, a, (i, l), (h, kc_eff), mr, *alpha);
                        counters.multiplier_pack_elems += w as u64;
                        runs.clear();
                        runs.push((0, kc_eff));
                        &sa[..]
                    }
                    Multiplier::Propagated(a) => {
                        propagated_runs(a.layout(), i, l, kc_eff, runs);
                        a.data()
                    }
                };
                // Distance between consecutive mr panels of the current block.
                let panel_stride = match mult {
                    Multiplier::Canonical { .. } => kc_eff * mr,
                    Multiplier::Propagated(_) => nr * mr,
                };

                for q in 0..col_panels {
                    if ib == 0 {
                        if let Multiplier::Canonical { .. } = mult {
                            let panel = &mut sb[q * kc_eff * nr..(q + 1) * kc_eff * nr];
                            let w = pack_multiplicand_into(panel, b, (l, j + q * nr), kc_eff, nr);
                            counters.multiplicand_pack_elems += w as u64;
                        }
                    }
                    let b_panel = &sb[q * kc_eff * nr..(q + 1) * kc_eff * nr];
                    for p in 0..row_panels {
                        let a_panel = &a_block[p * panel_stride..];
                        match &mut out {
                            Output::Canonical { c, .. } => {
                                let r0 = i + p * mr;
                                let c0 = j + q * nr;
                                let mut win =
                                    c.submatrix_mut(r0, c0, mr.min(m - r0), nr.min(j + nc_eff - c0)).unwrap();
                                if accumulate {
                                    acc.load_canonical(&win);
                                } else {
                                    acc.clear();
                                }
                                acc.update_runs(a_panel, runs, b_panel);
                                counters.unpack_elems += acc.store_canonical(&mut win) as u64;
                            }
                            Output::Propagated { buf, layout, block_offsets } => {
                                let height = round_up(h, mr);
                                let at = block_offsets[layout.block_index(jb, ib)] + q * height * nr + p * nr * mr;
                                let slot = &mut buf[at..at + mr * nr];
                                if accumulate {
                                    acc.load_contiguous(slot);
                                } else {
                                    acc.clear();
                                }
                                acc.update_runs(a_panel, runs, b_panel);
                                counters.propagated_store_elems += acc.store_contiguous(slot) as u64;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Blocked GEMM executor holding tile parameters and reusable packing buffers.
#[derive(Debug, Clone)]
pub struct GemmExecutor {
    params: TileParams,
    ws: Workspace,
}

impl GemmExecutor {
    pub fn new(params: TileParams) -> Result<Self> {
        params.validate()?;
        Ok(GemmExecutor { params, ws: Workspace::new(&params) })
    }

    pub fn params(&self) -> &TileParams {
        &self.params
    }

    /// `C = alpha * A * B + beta * C`, canonical in and out.
    pub fn gemm_default(
        &mut self,
        problem: &GemmProblem,
        a: &MatrixView<'_>,
        b: &MatrixView<'_>,
        c: &mut MatrixViewMut<'_>,
        counters: &mut PackCounters,
    ) -> Result<()> {
        problem.check(a.dims(), b.dims(), c.dims())?;
        counters.default_calls += 1;
        let mult = Multiplier::Canonical { a: *a, alpha: problem.alpha };
        drive(&mut self.ws, &self.params, mult, b, Output::Canonical { c, beta: problem.beta }, counters);
        Ok(())
    }

    /// `A * B` into a new dense propagated matrix.
    pub fn gemm_ini(
        &mut self,
        a: &MatrixView<'_>,
        b: &MatrixView<'_>,
        counters: &mut PackCounters,
    ) -> Result<PropagatedMatrix> {
        check_product(a.dims(), b.dims())?;
        let mut out = PropagatedMatrix::zeros(a.rows(), b.cols(), self.params)?;
        self.gemm_ini_into(a, b, &StoreSpec::dense(), out.data_mut(), counters)?;
        Ok(out)
    }

    /// `A * B` in the propagated layout, blocks placed in `dst` according to `store`.
    pub fn gemm_ini_into(
        &mut self,
        a: &MatrixView<'_>,
        b: &MatrixView<'_>,
        store: &StoreSpec,
        dst: &mut [f32],
        counters: &mut PackCounters,
    ) -> Result<()> {
        check_product(a.dims(), b.dims())?;
        let out = self.propagated_output(a.rows(), b.cols(), store, dst)?;
        counters.ini_calls += 1;
        drive(&mut self.ws, &self.params, Multiplier::Canonical { a: *a, alpha: 1.0 }, b, out, counters);
        Ok(())
    }

    /// `A * B` for a pre-packed `A`, result in a new dense propagated matrix.
    pub fn gemm_mid<S: AsRef<[f32]>>(
        &mut self,
        a: &PropagatedMatrix<S>,
        b: &MatrixView<'_>,
        counters: &mut PackCounters,
    ) -> Result<PropagatedMatrix> {
        check_product(a.dims(), b.dims())?;
        let mut out = PropagatedMatrix::zeros(a.rows(), b.cols(), self.params)?;
        self.gemm_mid_into(a, b, &StoreSpec::dense(), out.data_mut(), counters)?;
        Ok(out)
    }

    /// `A * B` for a pre-packed `A`, blocks placed in `dst` according to `store`.
    ///
    /// The multiplier is read in place; no multiplier packing happens unless
    /// its tile parameters differ from the executor's, in which case it is
    /// unpacked and repacked and `layout_fallbacks` is incremented.
    pub fn gemm_mid_into<S: AsRef<[f32]>>(
        &mut self,
        a: &PropagatedMatrix<S>,
        b: &MatrixView<'_>,
        store: &StoreSpec,
        dst: &mut [f32],
        counters: &mut PackCounters,
    ) -> Result<()> {
        check_product(a.dims(), b.dims())?;
        let out = self.propagated_output(a.rows(), b.cols(), store, dst)?;
        counters.mid_calls += 1;
        let params = self.params;
        let repacked = repack_if_needed(a, &params, counters)?;
        let a_view = repacked.as_ref().map(|r| r.view()).unwrap_or_else(|| a.view());
        drive(&mut self.ws, &params, Multiplier::Propagated(a_view), b, out, counters);
        Ok(())
    }

    /// `C = A * B` for a pre-packed `A`, canonical result.
    pub fn gemm_end<S: AsRef<[f32]>>(
        &mut self,
        a: &PropagatedMatrix<S>,
        b: &MatrixView<'_>,
        c: &mut MatrixViewMut<'_>,
        counters: &mut PackCounters,
    ) -> Result<()> {
        check_product(a.dims(), b.dims())?;
        if c.dims() != (a.rows(), b.cols()) {
            return Err(mismatch(format!(
                "output is {}x{}, product is {}x{}",
                c.rows(),
                c.cols(),
                a.rows(),
                b.cols()
            )));
        }
        counters.end_calls += 1;
        let params = self.params;
        let repacked = repack_if_needed(a, &params, counters)?;
        let a_view = repacked.as_ref().map(|r| r.view()).unwrap_or_else(|| a.view());
        drive(&mut self.ws, &params, Multiplier::Propagated(a_view), b, Output::Canonical { c, beta: 0.0 }, counters);
        Ok(())
    }

    fn propagated_output<'o>(
        &self,
        rows: usize,
        cols: usize,
        store: &StoreSpec,
        dst: &'o mut [f32],
    ) -> Result<Output<'o, 'static>> {
        let layout = PropagatedLayout::new(rows, cols, self.params)?;
        let block_offsets = store.block_offsets(&layout)?;
        let need = store.required_len(&layout)?;
        if dst.len() < need {
            return Err(mismatch(format!("destination holds {} elements, store needs {need}", dst.len())));
        }
        Ok(Output::Propagated { buf: dst, layout, block_offsets })
    }
}

fn repack_if_needed<S: AsRef<[f32]>>(
    a: &PropagatedMatrix<S>,
    params: &TileParams,
    counters: &mut PackCounters,
) -> Result<Option<PropagatedMatrix>> {
    if compatible(&a.params(), params, a.dims()) {
        return Ok(None);
    }
    counters.layout_fallbacks += 1;
    let mut canonical = crate::matrix::Matrix::zeros(a.rows(), a.cols());
    unpack_propagated_counted(a, &mut canonical.view_mut(), counters)?;
    Ok(Some(pack_to_propagated_counted(&canonical.view(), params, counters)?))
}

/// Blocked `C = alpha * A * B + beta * C` with canonical operands.
pub fn gemm_default(
    problem: &GemmProblem,
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    c: &mut MatrixViewMut<'_>,
    params: &TileParams,
    counters: &mut PackCounters,
) -> Result<()> {
    GemmExecutor::new(*params)?.gemm_default(problem, a, b, c, counters)
}

/// Starts layout propagation: `A * B` written in the propagated layout.
pub fn gemm_ini(
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    params: &TileParams,
    counters: &mut PackCounters,
) -> Result<PropagatedMatrix> {
    GemmExecutor::new(*params)?.gemm_ini(a, b, counters)
}

pub fn gemm_ini_into(
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    params: &TileParams,
    store: &StoreSpec,
    dst: &mut [f32],
    counters: &mut PackCounters,
) -> Result<()> {
    GemmExecutor::new(*params)?.gemm_ini_into(a, b, store, dst, counters)
}

/// Continues layout propagation: pre-packed `A` times canonical `B`, propagated result.
pub fn gemm_mid<S: AsRef<[f32]>>(
    a: &PropagatedMatrix<S>,
    b: &MatrixView<'_>,
    params: &TileParams,
    counters: &mut PackCounters,
) -> Result<PropagatedMatrix> {
    GemmExecutor::new(*params)?.gemm_mid(a, b, counters)
}

pub fn gemm_mid_into<S: AsRef<[f32]>>(
    a: &PropagatedMatrix<S>,
    b: &MatrixView<'_>,
    params: &TileParams,
    store: &StoreSpec,
    dst: &mut [f32],
    counters: &mut PackCounters,
) -> Result<()> {
    GemmExecutor::new(*params)?.gemm_mid_into(a, b, store, dst, counters)
}

/// Ends layout propagation: pre-packed `A` times canonical `B`, canonical result.
pub fn gemm_end<S: AsRef<[f32]>>(
    a: &PropagatedMatrix<S>,
    b: &MatrixView<'_>,
    c: &mut MatrixViewMut<'_>,
    params: &TileParams,
    counters: &mut PackCounters,
) -> Result<()> {
    GemmExecutor::new(*params)?.gemm_end(a, b, c, counters)
}
