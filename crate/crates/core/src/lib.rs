//! Blocked single-precision GEMM whose packed panel layout can be carried from
//! one multiplication to the next.
//!
//! A Goto-style GEMM packs its multiplier into `mr`-row panels before every
//! block of work and writes the result back in row-major order. When the
//! result feeds another GEMM as its multiplier, that round trip is wasted: the
//! initial kernel ([`gemm_ini`]) stores its output directly in the panel order
//! the next multiplication reads ([`PropagatedLayout`]), intermediate kernels
//! ([`gemm_mid`]) consume and produce that order, and the ending kernel
//! ([`gemm_end`]) returns to row-major.
//!
//! ```
//! use layout_gemm::{gemm_end, gemm_ini, Matrix, PackCounters, TileParams};
//!
//! let params = TileParams::new(8, 8, 8, 4, 4).unwrap();
//! let x = Matrix::random(10, 12, 1);
//! let w1 = Matrix::random(12, 6, 2);
//! let w2 = Matrix::random(6, 5, 3);
//! let mut counters = PackCounters::new();
//! let h = gemm_ini(&x.view(), &w1.view(), &params, &mut counters).unwrap();
//! let mut out = Matrix::zeros(10, 5);
//! gemm_end(&h, &w2.view(), &mut out.view_mut(), &params, &mut counters).unwrap();
//! assert_eq!(counters.end_calls, 1);
//! ```

pub mod attention;
pub mod compare;
pub mod counters;
pub mod error;
pub mod kernels;
pub mod layout;
pub mod layout_ops;
pub mod matrix;
pub mod microkernel;
pub mod packing;
pub mod params;
pub mod tensor_io;

pub use counters::PackCounters;
pub use error::{Error, Result};
pub use kernels::{
    chain_default, chain_gemm, chain_naive, gemm_default, gemm_end, gemm_ini, gemm_ini_into, gemm_mid,
    gemm_mid_into, gemm_naive, Activation, ChainSpec, ChainStage, GemmExecutor, GemmProblem,
};
pub use layout::{
    propagated_offset, BlockInfo, BlockOrder, PropagatedLayout, PropagatedMatrix, PropagatedView, PropagatedViewMut,
    StoreSpec,
};
pub use matrix::{Matrix, MatrixView, MatrixViewMut};
pub use microkernel::{microkernel_default, microkernel_propagate, MicroTileAccumulator};
pub use packing::{pack_multiplicand, pack_multiplier, pack_to_propagated, unpack_propagated, PackedPanelBuffer, PanelKind};
pub use params::{compatible, TileParams};
