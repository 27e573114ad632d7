//! Entrance-law tails `ν_t((ε, ∞])` (experimental for non-quadratic mechanisms).

use std::sync::OnceLock;

use super::FlowEvaluator;
use crate::error::{Error, Result};
use crate::numerics::special::KahanSum;

/// Stehfest order.
pub const STEHFEST_N: usize = 14;

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn factorial(n: i128) -> i128 {
    (1..=n).product::<i128>().max(1)
}

/// Stehfest weights `V_1..V_N`, summed exactly as rationals before rounding.
pub fn stehfest_weights() -> &'static [f64; STEHFEST_N] {
    static W: OnceLock<[f64; STEHFEST_N]> = OnceLock::new();
    W.get_or_init(|| {
        let n = STEHFEST_N as i128;
        let half = n / 2;
        let mut out = [0.0; STEHFEST_N];
        for k in 1..=n {
            let (mut num, mut den) = (0i128, 1i128);
            for j in ((k + 1) / 2)..=k.min(half) {
                let tn = j.pow(half as u32) * factorial(2 * j);
                let td = factorial(half - j)
                    * factorial(j)
                    * factorial(j - 1)
                    * factorial(k - j)
                    * factorial(2 * j - k);
                let g = gcd(tn, td);
                let (tn, td) = (tn / g, td / g);
                num = num * td + tn * den;
                den *= td;
                let g = gcd(num, den);
                num /= g;
                den /= g;
            }
            let sign = if (k + half) % 2 == 0 { 1.0 } else { -1.0 };
            out[(k - 1) as usize] = sign * (num as f64) / (den as f64);
        }
        out
    })
}

/// Inverts a Laplace transform `F` at `x > 0`.
pub fn gaver_stehfest<F: FnMut(f64) -> Result<f64>>(mut f: F, x: f64) -> Result<f64> {
    let ln2 = std::f64::consts::LN_2;
    let a = ln2 / x;
    let mut acc = KahanSum::default();
    for (k, v) in stehfest_weights().iter().enumerate() {
        acc.add(v * f((k + 1) as f64 * a)?);
    }
    Ok(a * acc.value())
}

pub(super) fn entrance_tail(ev: &FlowEvaluator, t: f64, eps: f64) -> Result<f64> {
    if !(t > 0.0 && eps > 0.0) {
        return Err(Error::Precondition(format!(
            "entrance_tail needs t > 0 and eps > 0, got t={t}, eps={eps}"
        )));
    }
    if ev.report().finite_variation() {
        return Err(Error::Unsupported(
            "entrance laws of finite-variation mechanisms are not needed and not provided".into(),
        ));
    }
    let m = ev.mechanism();
    if m.levy().is_empty() {
        // u(t,λ) = λa/(1+bλ): ν_t(dr) = (a/b²) e^{-r/b} dr
        let (alpha, beta) = (m.alpha(), m.beta());
        let a = (-alpha * t).exp();
        let b = if alpha == 0.0 {
            beta * t
        } else {
            beta * (-(-alpha * t).exp_m1()) / alpha
        };
        return Ok(a / b * (-eps / b).exp());
    }
    // ∫ e^{-λε} ν_t((ε,∞]) dε = u(t,λ)/λ since the drift of u(t,·) vanishes
    gaver_stehfest(|l| Ok(ev.u(t, l)? / l), eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::catalog;

    #[test]
    fn weights_sum_to_zero() {
        // Σ V_k = 0 for the Stehfest weights (transform of a constant inverts to that constant)
        let s: f64 = stehfest_weights().iter().sum();
        assert!(s.abs() < 1e-6, "{s}");
    }

    #[test]
    fn inverts_exponential() {
        // F(s) = 1/(s+1) is the transform of e^{-x}
        let v = gaver_stehfest(|s| Ok(1.0 / (s + 1.0)), 1.0).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-5, "{v}");
        let w = gaver_stehfest(|s| Ok(1.0 / (s * s)), 2.5).unwrap();
        assert!((w - 2.5).abs() < 1e-6, "{w}");
    }

    #[test]
    fn feller_closed_form_tail() {
        let ev = FlowEvaluator::new(catalog::feller()).unwrap();
        assert!((ev.entrance_tail(1.0, 1.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((ev.entrance_tail(2.0, 1e-12).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn finite_variation_unsupported() {
        let ev = FlowEvaluator::new(catalog::fv_compound_poisson()).unwrap();
        assert!(matches!(ev.entrance_tail(1.0, 0.1), Err(Error::Unsupported(_))));
    }
}
