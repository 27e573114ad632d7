/// Euler–Mascheroni constant.
pub const fn euler_gamma() -> f64 {
    0.577_215_664_901_532_9
}

/// `e^{-x} - 1 + x`, accurate for small `x`.
pub fn em1px(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // alternating series x^2/2 - x^3/6 + x^4/24 - x^5/120
        let x2 = x * x;
        x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0)
    } else {
        (-x).exp_m1() + x
    }
}

/// `e^{-x} - 1`, accurate for small `x`.
pub fn em1(x: f64) -> f64 {
    (-x).exp_m1()
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Gamma function on the whole real line (poles excluded).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
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

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn em1px_matches_direct_formula_away_from_zero() {
        for &x in &[0.5, 3.0, 40.0] {
            let direct = (-x as f64).exp() - 1.0 + x;
            assert!((em1px(x) - direct).abs() <= 1e-14 * direct);
        }
    }

    #[test]
    fn em1px_small_argument_is_relative_accurate() {
        let x = 1e-6;
        let rel = (em1px(x) / (x * x / 2.0) - 1.0).abs();
        assert!(rel < 1e-6);
        // continuity across the switch point
        let a = em1px(0.999_999e-3);
        let b = em1px(1.000_001e-3);
        assert!((a - b).abs() / b < 1e-5);
    }

    #[test]
    fn kahan_recovers_cancellation() {
        let s: KahanSum = [1e16, 1.0, -1e16, 1.0].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
