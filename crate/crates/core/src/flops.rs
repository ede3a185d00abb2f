//! Flop accounting.
//!
//! Kernels take a `&Flops` and add the number of floating-point operations they
//! perform, counting a fused multiply-add as two. A dense `m x n` by `n x r`
//! product therefore adds exactly `2mnr`.

use core::cell::Cell;

#[derive(Debug, Default)]
pub struct Flops(Cell<u64>);

impl Flops {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&self, n: usize) {
        self.0.set(self.0.get() + n as u64);
    }

    pub fn get(&self) -> u64 {
        self.0.get()
    }

    pub fn reset(&self) {
        self.0.set(0);
    }
}
