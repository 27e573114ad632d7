//! The four Lévy-measure component kinds and their analytic metadata.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::integrate;
use crate::numerics::special::{em1, em1px, euler_gamma, gamma};

/// One summand of the Lévy measure π.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LevyComponent {
    /// `mass` times a Dirac mass at jump size `location`.
    Atom { location: f64, mass: f64 },
    /// Density `coefficient * r^-exponent` on `(lower, upper]`.
    Power {
        coefficient: f64,
        exponent: f64,
        lower: f64,
        upper: f64,
    },
    /// Density `coefficient * r^-power * (log 1/r)^-log_power` on `(0, upper]`, `upper < 1`.
    LogPower {
        coefficient: f64,
        power: f64,
        log_power: f64,
        upper: f64,
    },
    /// Density `coefficient * e^{-rate r}` on `(0, inf)`.
    Exponential { coefficient: f64, rate: f64 },
}

/// Local shape `c r^-p (log 1/r)^-q` of a density at `0+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub p: f64,
    pub q: f64,
}

impl Singularity {
    /// Orders singularities by heaviness: larger `p`, then smaller `q`.
    pub fn heavier_than(&self, other: &Singularity) -> bool {
        self.p > other.p || (self.p == other.p && self.q < other.q)
    }

    /// `∫_0 r^k r^-p (log 1/r)^-q dr < ∞`.
    pub fn moment_finite(&self, k: f64) -> bool {
        let s = k + 1.0 - self.p;
        s > 0.0 || (s == 0.0 && self.q > 1.0)
    }
}

/// Behavior of the density at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    Bounded,
    Power(f64),
    Exponential,
}

const QUAD_REL: f64 = 1e-12;

impl LevyComponent {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMechanism(m));
        match *self {
            LevyComponent::Atom { location, mass } => {
                if !(location > 0.0 && location.is_finite()) {
                    return bad(format!("atom location must be positive and finite, got {location}"));
                }
                if !(mass > 0.0 && mass.is_finite()) {
                    return bad(format!("atom mass must be positive and finite, got {mass}"));
                }
            }
            LevyComponent::Power {
                coefficient,
                exponent,
                lower,
                upper,
            } => {
                if !(coefficient > 0.0 && coefficient.is_finite()) {
                    return bad(format!("power coefficient must be positive, got {coefficient}"));
                }
                if !exponent.is_finite() {
                    return bad("power exponent must be finite".into());
                }
                if !(lower >= 0.0 && upper > lower) {
                    return bad(format!("power support ({lower}, {upper}] is empty or negative"));
                }
                if lower == 0.0 && exponent >= 3.0 {
                    return bad(format!(
                        "r^-{exponent} near 0 does not integrate r^2 (need exponent < 3)"
                    ));
                }
                if upper.is_infinite() && exponent <= 1.0 {
                    return bad(format!(
                        "r^-{exponent} at infinity has infinite mass (need exponent > 1)"
                    ));
                }
            }
            LevyComponent::LogPower {
                coefficient,
                power,
                log_power,
                upper,
            } => {
                if !(coefficient > 0.0 && coefficient.is_finite()) {
                    return bad(format!("log-power coefficient must be positive, got {coefficient}"));
                }
                if !(upper > 0.0 && upper < 1.0) {
                    return bad(format!("log-power support must end below 1, got {upper}"));
                }
                if !(power.is_finite() && log_power.is_finite()) {
                    return bad("log-power exponents must be finite".into());
                }
                let s = Singularity {
                    p: power,
                    q: log_power,
                };
                if !s.moment_finite(2.0) {
                    return bad(format!(
                        "r^-{power} (log 1/r)^-{log_power} near 0 does not integrate r^2"
                    ));
                }
            }
            LevyComponent::Exponential { coefficient, rate } => {
                if !(coefficient > 0.0 && coefficient.is_finite()) {
                    return bad(format!("exponential coefficient must be positive, got {coefficient}"));
                }
                if !(rate > 0.0 && rate.is_finite()) {
                    return bad(format!("exponential rate must be positive, got {rate}"));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LevyComponent::Atom { .. } => "atom",
            LevyComponent::Power { .. } => "power",
            LevyComponent::LogPower { .. } => "log-power",
            LevyComponent::Exponential { .. } => "exponential",
        }
    }

    /// Shape at `0+`, or `None` when the support stays away from 0.
    pub fn singularity(&self) -> Option<Singularity> {
        match *self {
            LevyComponent::Atom { .. } => None,
            LevyComponent::Power {
                exponent, lower, ..
            } => (lower == 0.0).then_some(Singularity { p: exponent, q: 0.0 }),
            LevyComponent::LogPower {
                power, log_power, ..
            } => Some(Singularity {
                p: power,
                q: log_power,
            }),
            LevyComponent::Exponential { .. } => Some(Singularity { p: 0.0, q: 0.0 }),
        }
    }

    pub fn tail(&self) -> Tail {
        match *self {
            LevyComponent::Power {
                exponent, upper, ..
            } if upper.is_infinite() => Tail::Power(exponent),
            LevyComponent::Exponential { .. } => Tail::Exponential,
            _ => Tail::Bounded,
        }
    }

    /// Whether the moment integral for `moment(k, lo, hi)` is available in closed form.
    pub fn closed_form_moments(&self) -> bool {
        !matches!(self, LevyComponent::LogPower { .. })
    }

    /// `∫_{[lo, hi)} r^k π(dr)` for `k ∈ {0, 1, 2, 3}`; may be `+inf`.
    pub fn moment(&self, k: i32, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let kf = k as f64;
        match *self {
            LevyComponent::Atom { location, mass } => Ok(if location >= lo && location < hi {
                mass * location.powi(k)
            } else {
                0.0
            }),
            LevyComponent::Power {
                coefficient,
                exponent,
                lower,
                upper,
            } => {
                let a = lo.max(lower);
                let b = hi.min(upper);
                if b <= a {
                    return Ok(0.0);
                }
                let s = kf + 1.0 - exponent;
                if s == 0.0 {
                    if a == 0.0 || b.is_infinite() {
                        return Ok(f64::INFINITY);
                    }
                    return Ok(coefficient * (b / a).ln());
                }
                if (a == 0.0 && s < 0.0) || (b.is_infinite() && s > 0.0) {
                    return Ok(f64::INFINITY);
                }
                let pa = if a == 0.0 { 0.0 } else { a.powf(s) };
                let pb = if b.is_infinite() { 0.0 } else { b.powf(s) };
                Ok(coefficient * (pb - pa) / s)
            }
            LevyComponent::LogPower {
                coefficient,
                power,
                log_power,
                upper,
            } => {
                let b = hi.min(upper);
                if b <= lo {
                    return Ok(0.0);
                }
                // u = log(1/r), density in u is e^{-s u} u^{-q}
                let s = kf + 1.0 - power;
                let u_lo = (1.0 / b).ln();
                let u_hi = if lo == 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 / lo).ln()
                };
                if u_hi.is_infinite() {
                    if !(Singularity {
                        p: power,
                        q: log_power,
                    })
                    .moment_finite(kf)
                    {
                        return Ok(f64::INFINITY);
                    }
                    if s == 0.0 {
                        return Ok(coefficient * u_lo.powf(1.0 - log_power) / (log_power - 1.0));
                    }
                }
                if s == 0.0 {
                    let prim = |u: f64| {
                        if log_power == 1.0 {
                            u.ln()
                        } else {
                            u.powf(1.0 - log_power) / (1.0 - log_power)
                        }
                    };
                    return Ok(coefficient * (prim(u_hi) - prim(u_lo)));
                }
                let upper_u = if u_hi.is_infinite() {
                    u_lo + 45.0 / s
                } else {
                    u_hi
                };
                let f = |u: f64| (-s * (u - u_lo)).exp() * u.powf(-log_power);
                let r = integrate(f, u_lo, upper_u, 0.0, QUAD_REL).map_err(|e| {
                    Error::Quadrature {
                        context: format!("log-power moment k={k}: {e}"),
                        estimate: f64::NAN,
                        error: f64::NAN,
                    }
                })?;
                Ok(coefficient * (-s * u_lo).exp() * r.value)
            }
            LevyComponent::Exponential { coefficient, rate } => {
                let prim = |r: f64| -> f64 {
                    // antiderivative of -r^k e^{-rate r}, evaluated as upper-tail form
                    if r.is_infinite() {
                        return 0.0;
                    }
                    let mu = rate;
                    let e = (-mu * r).exp();
                    match k {
                        0 => e / mu,
                        1 => e * (r / mu + 1.0 / (mu * mu)),
                        2 => e * (r * r / mu + 2.0 * r / (mu * mu) + 2.0 / mu.powi(3)),
                        _ => e
                            * (r.powi(3) / mu
                                + 3.0 * r * r / (mu * mu)
                                + 6.0 * r / mu.powi(3)
                                + 6.0 / mu.powi(4)),
                    }
                };
                Ok(coefficient * (prim(lo.max(0.0)) - prim(hi)))
            }
        }
    }

    /// `π([lo, inf))`.
    pub fn mass_above(&self, lo: f64) -> Result<f64> {
        self.moment(0, lo, f64::INFINITY)
    }

    /// `∫ e^{-g r} π(dr)` over the whole support; `+inf` if π is infinite near 0.
    pub fn laplace_mass(&self, g: f64) -> Result<f64> {
        match *self {
            LevyComponent::Atom { location, mass } => Ok(mass * (-g * location).exp()),
            LevyComponent::Exponential { coefficient, rate } => Ok(coefficient / (rate + g)),
            _ => {
                if let Some(s) = self.singularity() {
                    if !s.moment_finite(0.0) {
                        return Ok(f64::INFINITY);
                    }
                }
                if g == 0.0 {
                    return self.moment(0, 0.0, f64::INFINITY);
                }
                self.integrate_log_scale(|r| (-g * r).exp(), "laplace mass")
            }
        }
    }

    /// `∫ (1 - e^{-λr}) π(dr)`, finite when `∫ (r ∧ 1) π(dr) < ∞`.
    pub fn jump_transform(&self, lambda: f64) -> Result<f64> {
        match *self {
            LevyComponent::Atom { location, mass } => Ok(-mass * (-lambda * location).exp_m1()),
            LevyComponent::Exponential { coefficient, rate } => {
                Ok(coefficient * lambda / (rate * (rate + lambda)))
            }
            _ => self.integrate_log_scale(|r| -(-lambda * r).exp_m1(), "jump transform"),
        }
    }

    /// Density at `r` (zero for atoms).
    pub fn density(&self, r: f64) -> f64 {
        match *self {
            LevyComponent::Atom { .. } => 0.0,
            LevyComponent::Power {
                coefficient,
                exponent,
                lower,
                upper,
            } => {
                if r > lower && r <= upper {
                    coefficient * r.powf(-exponent)
                } else {
                    0.0
                }
            }
            LevyComponent::LogPower {
                coefficient,
                power,
                log_power,
                upper,
            } => {
                if r > 0.0 && r <= upper {
                    coefficient * r.powf(-power) * (1.0 / r).ln().powf(-log_power)
                } else {
                    0.0
                }
            }
            LevyComponent::Exponential { coefficient, rate } => {
                if r > 0.0 {
                    coefficient * (-rate * r).exp()
                } else {
                    0.0
                }
            }
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            LevyComponent::Atom { location, .. } => (location, location),
            LevyComponent::Power { lower, upper, .. } => (lower, upper),
            LevyComponent::LogPower { upper, .. } => (0.0, upper),
            LevyComponent::Exponential { .. } => (0.0, f64::INFINITY),
        }
    }

    /// `∫ h(r) π(dr)` for a density component with bounded `h`, by quadrature in `log r`.
    /// Requires `h(r) π(dr)` integrable; the support is cut where the integrand is negligible.
    fn integrate_log_scale<H: Fn(f64) -> f64>(&self, h: H, what: &str) -> Result<f64> {
        let (a, b) = self.support();
        let y_lo = if a > 0.0 { a.ln() } else { -60.0 };
        let y_hi = if b.is_finite() { b.ln() } else { 60.0 };
        let mut total = 0.0;
        let mut cuts = vec![y_lo];
        if y_lo < 0.0 && y_hi > 0.0 {
            cuts.push(0.0);
        }
        cuts.push(y_hi);
        for w in cuts.windows(2) {
            let r = integrate(
                |y| {
                    let r = y.exp();
                    h(r) * self.density(r) * r
                },
                w[0],
                w[1],
                1e-300,
                QUAD_REL,
            )
            .map_err(|e| Error::Quadrature {
                context: format!("{} {what}: {e}", self.kind()),
                estimate: f64::NAN,
                error: f64::NAN,
            })?;
            total += r.value;
        }
        Ok(total)
    }

    /// This component's contribution `∫(e^{-λr} - 1 + λ r 1_{r<1}) π(dr)`.
    pub fn psi(&self, lambda: f64) -> Result<f64> {
        if lambda == 0.0 {
            return Ok(0.0);
        }
        match *self {
            LevyComponent::Atom { location, mass } => {
                let x = lambda * location;
                Ok(mass * if location < 1.0 { em1px(x) } else { em1(x) })
            }
            LevyComponent::Exponential { coefficient, rate } => {
                let mu = rate;
                let jump = -lambda / (mu * (lambda + mu));
                let comp = lambda * (1.0 - (1.0 + mu) * (-mu).exp()) / (mu * mu);
                Ok(coefficient * (jump + comp))
            }
            LevyComponent::Power {
                coefficient,
                exponent,
                lower,
                upper,
            } if lower == 0.0 && upper.is_infinite() => {
                let p = exponent;
                if (p - 2.0).abs() < 1e-3 {
                    if p == 2.0 {
                        return Ok(coefficient * (lambda * lambda.ln() + (euler_gamma() - 1.0) * lambda));
                    }
                    return self.psi_quadrature(lambda);
                }
                Ok(coefficient * (gamma(1.0 - p) * lambda.powf(p - 1.0) + lambda / (2.0 - p)))
            }
            _ => self.psi_quadrature(lambda),
        }
    }

    /// Quadrature evaluation of [`psi`](Self::psi), valid for every density component.
    pub fn psi_quadrature(&self, lambda: f64) -> Result<f64> {
        if let LevyComponent::Atom { .. } = self {
            return self.psi(lambda);
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let (a, b) = self.support();
        // below r_min the integrand is λ²r²/2 - λ³r³/6 to relative 1e-10
        let r_min = (1e-5 / lambda).min(1e-3);
        let mut total = 0.0;
        let lo = if a > 0.0 {
            a
        } else {
            let m2 = self.moment(2, 0.0, r_min)?;
            let m3 = self.moment(3, 0.0, r_min)?;
            total += 0.5 * lambda * lambda * m2 - lambda.powi(3) * m3 / 6.0;
            r_min
        };
        // e^{-λr} is negligible past r_max
        let r_max = (45.0 / lambda).max(1.0);
        let hi = if b > r_max {
            total -= self.moment(0, r_max, b)?;
            r_max
        } else {
            b
        };
        if hi <= lo {
            return Ok(total);
        }
        let y_lo = lo.ln();
        let y_hi = hi.ln();
        let mut cuts = vec![y_lo];
        for c in [0.0, -lambda.ln()] {
            if c > y_lo && c < y_hi {
                cuts.push(c);
            }
        }
        cuts.push(y_hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let below_one = mid < 0.0;
            let r = integrate(
                |y| {
                    let r = y.exp();
                    let x = lambda * r;
                    let g = if below_one { em1px(x) } else { em1(x) };
                    g * self.density(r) * r
                },
                w[0],
                w[1],
                1e-300,
                QUAD_REL,
            )
            .map_err(|e| Error::Quadrature {
                context: format!("psi of {} component at lambda={lambda}: {e}", self.kind()),
                estimate: f64::NAN,
                error: f64::NAN,
            })?;
            total += r.value;
        }
        Ok(total)
    }
}
