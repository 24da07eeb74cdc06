//! Wall-clock timing with warmup.

use std::time::Instant;

/// Per-repetition durations in nanoseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub samples_ns: Vec<u64>,
}

impl Timing {
    pub fn median_ns(&self) -> u64 {
        let mut s = self.samples_ns.clone();
        s.sort_unstable();
        let n = s.len();
        if n % 2 == 1 {
            s[n / 2]
        } else {
            (s[n / 2 - 1] + s[n / 2]) / 2
        }
    }

    pub fn mean_ns(&self) -> u64 {
        (self.samples_ns.iter().map(|&v| v as u128).sum::<u128>() / self.samples_ns.len() as u128) as u64
    }

    pub fn min_ns(&self) -> u64 {
        *self.samples_ns.iter().min().unwrap()
    }
}

/// Runs `f` `warmup` times untimed, then `reps` times timed on a monotonic clock.
pub fn time_reps(warmup: usize, reps: usize, mut f: impl FnMut()) -> Timing {
    assert!(reps >= 1, "reps must be at least 1");
    for _ in 0..warmup {
        f();
    }
    let samples_ns = (0..reps)
        .map(|_| {
            let t = Instant::now();
            f();
            (t.elapsed().as_nanos() as u64).max(1)
        })
        .collect();
    Timing { samples_ns }
}

/// `flops / median` in GFLOP/s.
pub fn gflops(flops: f64, median_ns: u64) -> f64 {
    flops / median_ns as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics() {
        let t = Timing { samples_ns: vec![5, 1, 3, 100] };
        assert_eq!((t.median_ns(), t.mean_ns(), t.min_ns()), (4, 27, 1));
        let odd = Timing { samples_ns: vec![9, 2, 4] };
        assert_eq!(odd.median_ns(), 4);
    }

    #[test]
    fn counts_warmup_and_reps() {
        let mut calls = 0;
        let t = time_reps(2, 5, || calls += 1);
        assert_eq!(calls, 7);
        assert_eq!(t.samples_ns.len(), 5);
        assert!(t.samples_ns.iter().all(|&v| v >= 1));
    }

    #[test]
    fn gflops_is_flops_per_nanosecond() {
        assert_eq!(gflops(2.0 * 64.0 * 64.0 * 64.0, 524_288), 1.0);
    }
}
