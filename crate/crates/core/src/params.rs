use std::fmt;

use crate::error::{Error, Result};

/// Cache (`mc`, `nc`, `kc`) and register (`mr`, `nr`) blocking parameters.
///
/// `mc x kc` blocks of the multiplier and `kc x nr` panels of the multiplicand
/// are packed; the micro-kernel produces one `mr x nr` output tile per call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TileParams {
    pub mc: usize,
    pub nc: usize,
    pub kc: usize,
    pub mr: usize,
    pub nr: usize,
}

impl TileParams {
    /// Blocking used on the AVX-512 Xeon evaluation machine.
    pub const XEON_AVX512: TileParams = TileParams { mc: 448, nc: 16384, kc: 448, mr: 16, nr: 4 };

    /// Host defaults, tuned for the default kernel on a single AVX-512 core
    /// with 2 MiB of L2.
    pub const DESK: TileParams = TileParams { mc: 64, nc: 512, kc: 512, mr: 16, nr: 8 };

    pub fn new(mc: usize, nc: usize, kc: usize, mr: usize, nr: usize) -> Result<Self> {
        let p = TileParams { mc, nc, kc, mr, nr };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let TileParams { mc, nc, kc, mr, nr } = *self;
        if mc == 0 || nc == 0 || kc == 0 || mr == 0 || nr == 0 {
            return Err(Error::InvalidParams(format!("all tile parameters must be >= 1, got {self}")));
        }
        if mc % mr != 0 {
            return Err(Error::InvalidParams(format!("mc={mc} is not a multiple of mr={mr}")));
        }
        if nc % nr != 0 {
            return Err(Error::InvalidParams(format!("nc={nc} is not a multiple of nr={nr}")));
        }
        Ok(())
    }
}

impl Default for TileParams {
    fn default() -> Self {
        TileParams::DESK
    }
}

impl fmt::Display for TileParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mc={} nc={} kc={} mr={} nr={}", self.mc, self.nc, self.kc, self.mr, self.nr)
    }
}

/// Whether a propagated matrix written with `producer` blocking can be read as
/// the pre-packed multiplier of a kernel configured with `consumer`.
///
/// Only identical parameter sets are accepted.
pub fn compatible(producer: &TileParams, consumer: &TileParams, dims: (usize, usize)) -> bool {
    let _ = dims;
    producer == consumer
}
