//! Compensated accumulation. Quadrature sums run over up to ~10^7 terms and
//! the secular equation over N^d grid samples; Neumaier summation keeps the
//! rounding error at a few ulps independent of the term count, and the fixed
//! accumulation order keeps results bit-reproducible.

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
