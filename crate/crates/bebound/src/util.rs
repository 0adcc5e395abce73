//! Small numeric helpers shared across modules.

use num_complex::Complex64;

/// Neumaier-compensated accumulator. Keeps absolute rounding error of a sum
/// near one ulp of the result instead of one ulp per addend, which the exact
/// moment/probability sums rely on to hit their 1e-13..1e-14 contracts.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of f64 terms.
pub fn csum(iter: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in iter {
        acc.add(x);
    }
    acc.value()
}

/// Compensated complex accumulator (independent real/imaginary channels).
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// i^(-k) for integer k >= 0, exact (components are 0.0 / ±1.0).
pub fn i_pow_neg(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// i^k for integer k >= 0, exact (components are 0.0 / ±1.0).
pub fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        // naive summation absorbs every 1e-16 into 1.0 and returns 0;
        // the compensated channel keeps them to ~ulp(1e-12) accuracy
        let mut acc = CompensatedSum::new();
        let mut naive = 0.0;
        acc.add(1.0);
        naive += 1.0;
        for _ in 0..10_000 {
            acc.add(1e-16);
            naive += 1e-16;
        }
        acc.add(-1.0);
        naive += -1.0;
        assert_eq!(naive, 0.0);
        assert!((acc.value() - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn i_powers_cycle() {
        let i = Complex64::new(0.0, 1.0);
        for k in 0u32..8 {
            let neg = (0..k).fold(Complex64::new(1.0, 0.0), |acc, _| acc / i);
            assert!((i_pow_neg(k) - neg).norm() < 1e-15, "k={k}");
            let pos = (0..k).fold(Complex64::new(1.0, 0.0), |acc, _| acc * i);
            assert!((i_pow(k) - pos).norm() < 1e-15, "k={k}");
            // the two are complex conjugates and multiply to one
            assert_eq!(i_pow(k) * i_pow_neg(k), Complex64::new(1.0, 0.0));
        }
    }
}
