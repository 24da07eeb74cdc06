use std::ops::{AddAssign, Sub};

/// Instrumentation of the data movement performed by packing and stores.
///
/// Element counts, not bytes: every element is an `f32`, see
/// [`bytes_moved`](PackCounters::bytes_moved).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PackCounters {
    /// Elements written into multiplier (`sa`) buffers, zero padding included.
    pub multiplier_pack_elems: u64,
    /// Elements written into multiplicand (`sb`) panels, zero padding included.
    pub multiplicand_pack_elems: u64,
    /// Elements stored in canonical order by the default micro-kernel, or
    /// copied out of a propagated matrix into a canonical one.
    pub unpack_elems: u64,
    /// Elements stored contiguously by the propagating micro-kernel.
    pub propagated_store_elems: u64,
    /// Times an intermediate or ending kernel had to repack an incompatible input.
    pub layout_fallbacks: u64,
    pub default_calls: u64,
    pub ini_calls: u64,
    pub mid_calls: u64,
    pub end_calls: u64,
}

impl PackCounters {
    pub fn new() -> Self {
        Self::default()
    }

    /// Elements moved by packing and unpacking (the traffic layout propagation removes).
    pub fn pack_unpack_elems(&self) -> u64 {
        self.multiplier_pack_elems + self.multiplicand_pack_elems + self.unpack_elems
    }

    pub fn bytes_moved(&self) -> u64 {
        self.pack_unpack_elems() * std::mem::size_of::<f32>() as u64
    }
}

impl AddAssign for PackCounters {
    fn add_assign(&mut self, o: Self) {
        self.multiplier_pack_elems += o.multiplier_pack_elems;
        self.multiplicand_pack_elems += o.multiplicand_pack_elems;
        self.unpack_elems += o.unpack_elems;
        self.propagated_store_elems += o.propagated_store_elems;
        self.layout_fallbacks += o.layout_fallbacks;
        self.default_calls += o.default_calls;
        self.ini_calls += o.ini_calls;
        self.mid_calls += o.mid_calls;
        self.end_calls += o.end_calls;
    }
}

impl Sub for PackCounters {
    type Output = PackCounters;

    /// Difference between a later and an earlier snapshot.
    fn sub(self, o: Self) -> Self {
        PackCounters {
            multiplier_pack_elems: self.multiplier_pack_elems - o.multiplier_pack_elems,
            multiplicand_pack_elems: self.multiplicand_pack_elems - o.multiplicand_pack_elems,
            unpack_elems: self.unpack_elems - o.unpack_elems,
            propagated_store_elems: self.propagated_store_elems - o.propagated_store_elems,
            layout_fallbacks: self.layout_fallbacks - o.layout_fallbacks,
            default_calls: self.default_calls - o.default_calls,
            ini_calls: self.ini_calls - o.ini_calls,
            mid_calls: self.mid_calls - o.mid_calls,
            end_calls: self.end_calls - o.end_calls,
        }
    }
}
