use alloc::vec;
use alloc::vec::Vec;

use crate::phasor::Complex;

/// Boxcar average over the last `n` samples. Empty slots count as zero until
/// the window has filled once.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingAverage<T> {
    buf: Vec<T>,
    pos: usize,
    sum: T,
    full: bool,
}

pub trait Summable: Copy + Default + core::ops::Add<Output = Self> + core::ops::Sub<Output = Self> {
    fn div_n(self, n: usize) -> Self;
}

impl Summable for f64 {
    fn div_n(self, n: usize) -> Self {
        self / n as f64
    }
}

impl Summable for Complex {
    fn div_n(self, n: usize) -> Self {
        self / n as f64
    }
}

impl<T: Summable> MovingAverage<T> {
    pub fn new(n: usize) -> Self {
        let n = n.max(1);
        MovingAverage { buf: vec![T::default(); n], pos: 0, sum: T::default(), full: false }
    }

    /// Window pre-filled with `value`.
    pub fn filled(n: usize, value: T) -> Self {
        let mut m = Self::new(n);
        m.buf.iter_mut().for_each(|b| *b = value);
        m.resum();
        m.full = true;
        m
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The window has been filled at least once.
    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn push(&mut self, x: T) -> T {
        self.sum = self.sum - self.buf[self.pos] + x;
        self.buf[self.pos] = x;
        self.pos += 1;
        if self.pos == self.buf.len() {
            self.pos = 0;
            self.full = true;
            // Re-sum once per window so rounding cannot accumulate.
            self.resum();
        }
        self.mean()
    }

    pub fn mean(&self) -> T {
        self.sum.div_n(self.buf.len())
    }

    fn resum(&mut self) {
        self.sum = self.buf.iter().fold(T::default(), |a, &b| a + b);
    }
}
