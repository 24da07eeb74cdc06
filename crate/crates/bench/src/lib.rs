//! Verification and benchmark driver for `layout-gemm`, used by the `lgemm` binary.

pub mod config;
pub mod experiments;
pub mod record;
pub mod sizes;
pub mod timing;
pub mod verify;
