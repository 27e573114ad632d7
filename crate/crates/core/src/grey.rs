//! Limit laws of the Grey martingales `exp(-u(-t, θ) Z_t)`: the Laplace exponent `φ_θ`
//! of `W^θ`, its drift, total jump mass and ratio constants.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowEvaluator;
use crate::numerics::quad::{integrate, integrate_to_infinity};
use crate::parallel::map_runs;
use crate::paths::{Advance, PathSimulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GreyRegime {
    /// `Ψ'(0+) ∈ (-∞, 0)`, normalized on `{Z → ∞}`.
    Supercritical,
    /// Finite variation with `Ψ'(0+) ≥ 0`.
    FiniteVariationSubcritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreyLimitLaw {
    pub theta: f64,
    pub regime: GreyRegime,
    pub d_theta: f64,
    /// `γ` (supercritical) or `π((0, ∞))/D` (subcritical), possibly infinite.
    pub total_jump_mass: f64,
    pub kappa_theta: f64,
}

pub fn regime(ev: &FlowEvaluator) -> Result<GreyRegime> {
    let r = ev.report();
    let p0 = r.psi_prime_0;
    if p0 == f64::NEG_INFINITY {
        return Err(Error::Unsupported(
            "Ψ'(0+) = -inf: the population has an Eve and W^θ is degenerate".into(),
        ));
    }
    if p0 < 0.0 {
        return Ok(GreyRegime::Supercritical);
    }
    match r.drift {
        Some(d) if d > 0.0 => Ok(GreyRegime::FiniteVariationSubcritical),
        _ => Err(Error::Unsupported(
            "no Grey limit law for this mechanism: needs Ψ'(0+) < 0 or finite variation with D > 0"
                .into(),
        )),
    }
}

fn check_theta(ev: &FlowEvaluator, reg: GreyRegime, theta: f64) -> Result<()> {
    let ok = match reg {
        GreyRegime::Supercritical => theta > 0.0 && theta < ev.gamma(),
        GreyRegime::FiniteVariationSubcritical => theta > 0.0 && theta.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "theta = {theta} outside the domain of the {reg:?} regime (γ = {})",
            ev.gamma()
        )))
    }
}

fn drift(ev: &FlowEvaluator) -> f64 {
    ev.report().drift.unwrap_or(f64::NAN)
}

/// Time change `s(λ)` with `φ_θ(λ) = u(s(λ), θ)`.
pub fn phi_time(ev: &FlowEvaluator, reg: GreyRegime, lambda: f64) -> f64 {
    match reg {
        GreyRegime::Supercritical => lambda.ln() / -ev.report().psi_prime_0,
        GreyRegime::FiniteVariationSubcritical => -lambda.ln() / drift(ev),
    }
}

/// `φ_θ(λ)`, the Laplace exponent of `W^θ`.
pub fn phi(ev: &FlowEvaluator, theta: f64, lambda: f64) -> Result<f64> {
    let reg = regime(ev)?;
    check_theta(ev, reg, theta)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Precondition(format!("lambda must be positive, got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(theta);
    }
    ev.u(phi_time(ev, reg, lambda), theta)
}

/// Drift `d_θ` of `W^θ` in the subcritical finite-variation regime:
/// `log d_θ = log θ - ∫_θ^∞ (D/Ψ(λ) - 1/λ) dλ`, and 0 when `∫ r log(1/r) π(dr) = ∞`.
pub fn drift_d_theta(ev: &FlowEvaluator, theta: f64) -> Result<f64> {
    let reg = regime(ev)?;
    if reg != GreyRegime::FiniteVariationSubcritical {
        return Err(Error::Precondition(
            "d_theta is defined in the subcritical finite-variation regime".into(),
        ));
    }
    check_theta(ev, reg, theta)?;
    if !ev.report().xlogx_finite {
        return Ok(0.0);
    }
    let d = drift(ev);
    let mech = ev.mechanism();
    // D/Ψ - 1/λ = J/(λΨ) with J(λ) = Dλ - Ψ(λ) = ∫(1 - e^{-λr}) π(dr), taken directly
    let integrand = |l: f64| {
        let j = mech.jump_transform(l).unwrap_or(f64::NAN);
        j / (l * (d * l - j))
    };
    let tail = integrate_to_infinity(integrand, theta, 1e-15, 1e-12)?;
    Ok(theta * (-tail.value).exp())
}

/// `∫_{θ'}^{θ} dλ/Ψ(λ)`, refusing intervals that reach a root of Ψ.
fn inverse_psi_integral(ev: &FlowEvaluator, reg: GreyRegime, a: f64, b: f64) -> Result<f64> {
    check_theta(ev, reg, a)?;
    check_theta(ev, reg, b)?;
    let mech = ev.mechanism();
    let r = integrate(|l| 1.0 / mech.psi(l).unwrap_or(f64::NAN), a, b, 1e-300, 1e-13)?;
    Ok(r.value)
}

/// `R_{θ',θ} = exp(Ψ'(0+) ∫_{θ'}^θ dλ/Ψ)` (supercritical) or
/// `S_{θ',θ} = exp(D ∫_{θ'}^θ dλ/Ψ)` (subcritical).
pub fn ratio_constant(ev: &FlowEvaluator, theta_prime: f64, theta: f64) -> Result<f64> {
    let reg = regime(ev)?;
    if theta_prime == theta {
        check_theta(ev, reg, theta)?;
        return Ok(1.0);
    }
    let k = match reg {
        GreyRegime::Supercritical => ev.report().psi_prime_0,
        GreyRegime::FiniteVariationSubcritical => drift(ev),
    };
    Ok((k * inverse_psi_integral(ev, reg, theta_prime, theta)?).exp())
}

pub fn grey_limit_law(ev: &FlowEvaluator, theta: f64) -> Result<GreyLimitLaw> {
    let reg = regime(ev)?;
    check_theta(ev, reg, theta)?;
    let (d_theta, total_jump_mass) = match reg {
        GreyRegime::Supercritical => (0.0, ev.gamma()),
        GreyRegime::FiniteVariationSubcritical => (
            drift_d_theta(ev, theta)?,
            ev.mechanism().mass_above(0.0)? / drift(ev),
        ),
    };
    Ok(GreyLimitLaw {
        theta,
        regime: reg,
        d_theta,
        total_jump_mass,
        kappa_theta: 0.0,
    })
}

/// Samples of `u(-t, θ) Z_t` for each `t` in `t_values` (ascending), `Z_0 = x`.
/// Row `i` holds the samples for `t_values[i]`.
pub fn renormalized_limit_samples(
    ev: &FlowEvaluator,
    sim: &PathSimulator,
    x: f64,
    theta: f64,
    t_values: &[f64],
    n_runs: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let reg = regime(ev)?;
    check_theta(ev, reg, theta)?;
    if t_values.windows(2).any(|w| w[1] <= w[0]) || t_values.first().is_some_and(|&t| t <= 0.0) {
        return Err(Error::Precondition("t_values must be positive and increasing".into()));
    }
    let scales = t_values
        .iter()
        .map(|&t| ev.u(-t, theta))
        .collect::<Result<Vec<_>>>()?;
    let runs = map_runs(n_runs, seed, |_, rng| {
        let mut z = x;
        let mut now = 0.0;
        let mut out = Vec::with_capacity(t_values.len());
        for (&t, &c) in t_values.iter().zip(&scales) {
            if z > 0.0 && z.is_finite() {
                z = match sim.advance(z, now, t - now, x, rng) {
                    Advance::Alive(v) => v,
                    Advance::Extinct(te) if te > t => z,
                    Advance::Extinct(_) => 0.0,
                    Advance::Exploded(_) => f64::INFINITY,
                };
            }
            now = t;
            out.push(c * z);
        }
        out
    });
    Ok((0..t_values.len())
        .map(|i| runs.iter().map(|r| r[i]).collect())
        .collect())
}
