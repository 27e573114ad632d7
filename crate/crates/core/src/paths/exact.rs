//! Exact transition samplers for the mechanisms whose flow is explicit.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::jumps::poisson;
use crate::mechanism::{BranchingMechanism, LevyComponent};
use crate::numerics::euler_gamma;

/// `u(t, λ) = aλ/(1 + bλ)` for `Ψ(λ) = αλ + βλ²`.
pub fn quadratic_coefficients(alpha: f64, beta: f64, t: f64) -> (f64, f64) {
    let a = (-alpha * t).exp();
    let b = if alpha == 0.0 {
        beta * t
    } else {
        beta * (-(-alpha * t).exp_m1()) / alpha
    };
    (a, b)
}

/// One draw of `Z_t` given `Z_0 = z` for `Ψ(λ) = αλ + βλ²`: a Poisson number of
/// exponential clusters. Returns the total and the cluster count.
pub fn quadratic_step<R: Rng + ?Sized>(
    z: f64,
    t: f64,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> (f64, u64) {
    if z <= 0.0 {
        return (0.0, 0);
    }
    let (a, b) = quadratic_coefficients(alpha, beta, t);
    let n = poisson(z * a / b, rng);
    if n == 0 {
        return (0.0, 0);
    }
    let g = Gamma::new(n as f64, b).expect("positive shape and scale");
    (g.sample(rng), n)
}

/// The individual cluster masses of a quadratic transition.
pub fn quadratic_clusters<R: Rng + ?Sized>(
    z: f64,
    t: f64,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> Vec<f64> {
    if z <= 0.0 {
        return Vec::new();
    }
    let (a, b) = quadratic_coefficients(alpha, beta, t);
    let n = poisson(z * a / b, rng);
    (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            e * b
        })
        .collect()
}

/// Exact draw for `Ψ(λ) = βλ²`: Poisson(z/(βt)) exponentials of mean βt.
pub fn feller_step<R: Rng + ?Sized>(z: f64, t: f64, beta: f64, rng: &mut R) -> f64 {
    quadratic_step(z, t, 0.0, beta, rng).0
}

/// `v(s) = lim_{λ→∞} u(s, λ)` for the quadratic mechanism.
pub fn quadratic_v(alpha: f64, beta: f64, s: f64) -> f64 {
    if alpha == 0.0 {
        1.0 / (beta * s)
    } else {
        alpha / (beta * (alpha * s).exp_m1())
    }
}

/// Extinction time within `(0, h]` given `Z_0 = z` and `Z_h = 0`, from
/// `P(ζ ≤ s | ζ ≤ h) = e^{-z v(s)} / e^{-z v(h)}`.
pub fn quadratic_extinction_bridge<R: Rng + ?Sized>(
    z: f64,
    h: f64,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let target = quadratic_v(alpha, beta, h) - u.ln() / z;
    let s = if alpha == 0.0 {
        1.0 / (beta * target)
    } else {
        (alpha / (beta * target)).ln_1p() / alpha
    };
    s.clamp(0.0, h)
}

/// `log S` for a positive ρ-stable `S` with `E e^{-λS} = e^{-λ^ρ}` (Kanter), arranged so
/// the `1/ρ` terms cancel analytically for small ρ.
pub fn log_positive_stable<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> f64 {
    let pi = std::f64::consts::PI;
    let u = loop {
        let u = rng.random::<f64>() * pi;
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let ru = rho * u;
    // sin((1-ρ)U)/sin U = cos(ρU) - cot(U) sin(ρU)
    let half = (0.5 * ru).sin();
    let ratio_m1 = -2.0 * half * half - ru.sin() * u.cos() / u.sin();
    let c = (1.0 - rho) / rho;
    ru.sin().ln() - u.sin().ln() + c * ratio_m1.ln_1p() - c * e.ln()
}

/// Parameters of `Ψ(λ) = cλ log λ + aλ` when the mechanism has that shape.
pub fn neveu_parameters(mech: &BranchingMechanism) -> Option<(f64, f64)> {
    if mech.beta() != 0.0 || mech.levy().len() != 1 {
        return None;
    }
    match mech.levy()[0] {
        LevyComponent::Power {
            coefficient,
            exponent,
            lower,
            upper,
        } if exponent == 2.0 && lower == 0.0 && upper.is_infinite() => {
            Some((coefficient, mech.alpha() + coefficient * (euler_gamma() - 1.0)))
        }
        _ => None,
    }
}

/// `log Z_t` given `log Z_0` for `Ψ(λ) = cλ log λ + aλ`: `Z_t = K S_ρ` with `ρ = e^{-ct}`.
pub fn neveu_log_step<R: Rng + ?Sized>(log_z: f64, t: f64, c: f64, a: f64, rng: &mut R) -> f64 {
    let rho = (-c * t).exp();
    let k = (log_z + (a / c) * (-c * t).exp_m1()) / rho;
    k + log_positive_stable(rho, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::catalog;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn feller_step_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert_eq!(feller_step(0.0, 1.0, 1.0, &mut rng), 0.0);
        let draws: Vec<f64> = (0..100_000).map(|_| feller_step(2.0, 1.0, 1.0, &mut rng)).collect();
        let (m, se) = mean_se(&draws);
        assert!((m - 2.0).abs() < 3.0 * se, "{m} ± {se}");
        let zeros = (0..100_000)
            .filter(|_| feller_step(1.0, 1.0, 1.0, &mut rng) == 0.0)
            .count() as f64
            / 1e5;
        let p = (-1f64).exp();
        assert!((zeros - p).abs() < 3.0 * (p * (1.0 - p) / 1e5).sqrt(), "{zeros}");
    }

    #[test]
    fn bridge_matches_extinction_law() {
        // ζ from z=1 under Feller: P(ζ ≤ s) = e^{-1/s}; conditioned on ζ ≤ 2, P(ζ ≤ 1) = e^{-1}/e^{-1/2}
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50_000;
        let hits = (0..n)
            .filter(|_| quadratic_extinction_bridge(1.0, 2.0, 0.0, 1.0, &mut rng) <= 1.0)
            .count() as f64
            / n as f64;
        let p = (-0.5f64).exp();
        assert!((hits - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{hits} vs {p}");
    }

    #[test]
    fn half_stable_is_levy_distribution() {
        // ρ = 1/2: E e^{-S} = e^{-1}
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..50_000)
            .map(|_| (-log_positive_stable(0.5, &mut rng).exp()).exp())
            .collect();
        let (m, se) = mean_se(&v);
        assert!((m - (-1f64).exp()).abs() < 4.0 * se, "{m}");
    }

    #[test]
    fn neveu_laplace_functional() {
        // E e^{-λ Z_t} = e^{-z λ^{e^{-t}}}
        let (c, a) = neveu_parameters(&catalog::neveu()).unwrap();
        assert!((c - 1.0).abs() < 1e-15 && a.abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (z, t, lambda) = (1.5f64, 0.7, 2.0f64);
        let v: Vec<f64> = (0..50_000)
            .map(|_| (-lambda * neveu_log_step(z.ln(), t, c, a, &mut rng).exp()).exp())
            .collect();
        let (m, se) = mean_se(&v);
        let want = (-z * lambda.powf((-t).exp())).exp();
        assert!((m - want).abs() < 4.0 * se, "{m} vs {want}");
    }
}
