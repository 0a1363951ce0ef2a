//! Compensated summation with a deterministic chunked reduction.
//!
//! Every statistic in this crate must be bit-identical across runs and worker
//! counts, so floating-point accumulation happens either sequentially or in
//! fixed-size chunks that are reduced in index order.

/// Kahan (compensated) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = KahanSum::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

/// Chunk size for the deterministic reduction of per-curve statistics.
pub const REDUCTION_CHUNK: usize = 1024;

/// Sums `values` by compensated summation over fixed-size chunks, then
/// compensated summation of the chunk totals in index order. The result does
/// not depend on how the chunk sums were scheduled.
pub fn chunked_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values.chunks(REDUCTION_CHUNK).map(|c| kahan_sum(c.iter().copied())).collect();
    kahan_sum(partials)
}
