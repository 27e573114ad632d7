//! The flow `u(t, λ)` solving `∫_{u}^{λ} dw/Ψ(w) = t`, its boundary functions
//! κ and v, and entrance-law tails.

mod entrance;

use std::collections::HashMap;
use std::sync::RwLock;

pub use entrance::gaver_stehfest;

use crate::error::{Error, Result};
use crate::mechanism::{classify, BranchingMechanism, ClassificationReport};
use crate::numerics::ode::dopri5;
use crate::numerics::quad::integrate;
use crate::numerics::special::KahanSum;

const SATURATION: f64 = 1e300;

/// Immutable flow evaluator over one mechanism, with a shared memo table.
#[derive(Debug)]
pub struct FlowEvaluator {
    mech: BranchingMechanism,
    report: ClassificationReport,
    gamma: f64,
    quad_tol: f64,
    root_tol: f64,
    memoize: bool,
    /// Taylor coefficients of Ψ at an interior root γ, orders 1 to 3.
    root_taylor: Option<[f64; 3]>,
    memo: RwLock<HashMap<(u64, u64), FlowValue>>,
}

/// A flow value and whether it was clipped at the representable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowValue {
    pub value: f64,
    pub saturated: bool,
}

/// One leg of the monotone march: `u(s) = anchor + side * base * e^{dir * s}` for `s ∈ [0, len]`.
#[derive(Debug, Clone, Copy)]
struct Leg {
    anchor: f64,
    side: f64,
    base: f64,
    dir: f64,
    len: f64,
}

impl Leg {
    fn u(&self, s: f64) -> f64 {
        self.anchor + self.side * self.base * (self.dir * s).exp()
    }

    fn speed(&self, s: f64) -> f64 {
        self.base * (self.dir * s).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Toward {
    Gamma,
    Infinity,
    Zero,
}

enum March {
    Hit(f64, bool),
    Total(f64),
}

/// Rounds to 12 significant digits; memo keys and evaluation points both use this.
fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - e);
    let r = (x * scale).round() / scale;
    if r.is_finite() {
        r
    } else {
        x
    }
}

/// Taylor coefficients of Ψ at `g` from five-point stencils.
fn taylor_at(mech: &BranchingMechanism, g: f64) -> Result<[f64; 3]> {
    let h = 1e-3 * g;
    let f = |k: f64| mech.psi(g + k * h);
    let (m2, m1, f0, p1, p2) = (f(-2.0)?, f(-1.0)?, f(0.0)?, f(1.0)?, f(2.0)?);
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * f0 + 16.0 * p1 - p2) / (12.0 * h * h);
    let d3 = (-m2 + 2.0 * m1 - 2.0 * p1 + p2) / (2.0 * h * h * h);
    Ok([d1, d2 / 2.0, d3 / 6.0])
}

impl FlowEvaluator {
    pub fn new(mech: BranchingMechanism) -> Result<Self> {
        let report = classify(&mech)?;
        let gamma = report.gamma()?;
        let root_taylor = if gamma > 0.0 && gamma.is_finite() {
            Some(taylor_at(&mech, gamma)?)
        } else {
            None
        };
        Ok(FlowEvaluator {
            mech,
            report,
            gamma,
            quad_tol: 1e-10,
            root_tol: 1e-12,
            memoize: true,
            root_taylor,
            memo: RwLock::new(HashMap::new()),
        })
    }

    /// Disables the memo table; inputs are then used at full precision.
    pub fn without_memo(mut self) -> Self {
        self.memoize = false;
        self
    }

    pub fn with_tolerances(mut self, quad_tol: f64, root_tol: f64) -> Self {
        self.quad_tol = quad_tol;
        self.root_tol = root_tol;
        self
    }

    pub fn mechanism(&self) -> &BranchingMechanism {
        &self.mech
    }

    pub fn report(&self) -> &ClassificationReport {
        &self.report
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Ψ'(γ)` for an interior root `0 < γ < ∞`.
    pub fn root_slope(&self) -> Option<f64> {
        self.root_taylor.map(|c| c[0])
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn root_tol(&self) -> f64 {
        self.root_tol
    }

    fn psi(&self, w: f64) -> f64 {
        self.mech.psi(w).unwrap_or(f64::NAN)
    }

    /// `u(t, λ)`.
    pub fn u(&self, t: f64, lambda: f64) -> Result<f64> {
        Ok(self.u_value(t, lambda)?.value)
    }

    /// `u(t, λ)` with the saturation flag.
    pub fn u_value(&self, t: f64, lambda: f64) -> Result<FlowValue> {
        if !self.memoize {
            return self.solve(t, lambda);
        }
        let (t, lambda) = (round12(t), round12(lambda));
        let key = (t.to_bits(), lambda.to_bits());
        if let Some(v) = self.memo.read().expect("memo lock").get(&key) {
            return Ok(*v);
        }
        let v = self.solve(t, lambda)?;
        self.memo.write().expect("memo lock").insert(key, v);
        Ok(v)
    }

    /// `u(t, λ)` at the exact inputs, bypassing the memo.
    pub fn u_exact(&self, t: f64, lambda: f64) -> Result<FlowValue> {
        self.solve(t, lambda)
    }

    fn solve(&self, t: f64, lambda: f64) -> Result<FlowValue> {
        if !(lambda > 0.0) || !lambda.is_finite() || !t.is_finite() {
            return Err(Error::Precondition(format!(
                "u(t, lambda) needs finite t and lambda > 0, got t={t}, lambda={lambda}"
            )));
        }
        let exact = |v| {
            Ok(FlowValue {
                value: v,
                saturated: false,
            })
        };
        if t == 0.0 || lambda == self.gamma {
            return exact(lambda);
        }
        let above = lambda > self.gamma;
        let toward = match (t > 0.0, above) {
            (true, _) => Toward::Gamma,
            (false, true) => Toward::Infinity,
            (false, false) => Toward::Zero,
        };
        let target = t.abs();
        if toward != Toward::Gamma {
            let total_possible = match toward {
                Toward::Infinity => !self.report.persistent,
                _ => !self.report.conservative,
            };
            if total_possible {
                if let March::Total(g) = self.march(lambda, toward, None)? {
                    if g <= target {
                        return Err(self.domain_error(t, lambda));
                    }
                }
            }
        }
        match self.march(lambda, toward, Some(target))? {
            March::Hit(v, saturated) => Ok(FlowValue {
                value: v,
                saturated,
            }),
            March::Total(_) => Err(self.domain_error(t, lambda)),
        }
    }

    fn domain_error(&self, t: f64, lambda: f64) -> Error {
        let tt = t.abs();
        Error::BackwardDomain {
            t,
            lambda,
            kappa: self.kappa(tt).unwrap_or(f64::NAN),
            v: self.v_bar(tt).unwrap_or(f64::NAN),
        }
    }

    fn legs(&self, lambda: f64, toward: Toward) -> Vec<Leg> {
        let g = self.gamma;
        let inf = f64::INFINITY;
        let leg = |anchor, side, base, dir, len| Leg {
            anchor,
            side,
            base,
            dir,
            len,
        };
        match toward {
            Toward::Gamma if lambda > g => {
                if g > 0.0 && lambda > 2.0 * g {
                    vec![
                        leg(0.0, 1.0, lambda, -1.0, (lambda / (2.0 * g)).ln()),
                        leg(g, 1.0, g, -1.0, inf),
                    ]
                } else {
                    vec![leg(g, 1.0, lambda - g, -1.0, inf)]
                }
            }
            Toward::Gamma => {
                if g.is_infinite() {
                    vec![leg(0.0, 1.0, lambda, 1.0, inf)]
                } else if lambda < 0.5 * g {
                    vec![
                        leg(0.0, 1.0, lambda, 1.0, (0.5 * g / lambda).ln()),
                        leg(g, -1.0, 0.5 * g, -1.0, inf),
                    ]
                } else {
                    vec![leg(g, -1.0, g - lambda, -1.0, inf)]
                }
            }
            Toward::Infinity => {
                if g > 0.0 && lambda < 2.0 * g {
                    vec![
                        leg(g, 1.0, lambda - g, 1.0, (g / (lambda - g)).ln()),
                        leg(0.0, 1.0, 2.0 * g, 1.0, inf),
                    ]
                } else {
                    vec![leg(0.0, 1.0, lambda, 1.0, inf)]
                }
            }
            Toward::Zero => {
                if g.is_finite() && lambda > 0.5 * g {
                    vec![
                        leg(g, -1.0, g - lambda, 1.0, (0.5 * g / (g - lambda)).ln()),
                        leg(0.0, 1.0, 0.5 * g, -1.0, inf),
                    ]
                } else {
                    vec![leg(0.0, 1.0, lambda, -1.0, inf)]
                }
            }
        }
    }

    /// `|Ψ|` along a leg. Next to γ the direct evaluation is dominated by rounding,
    /// so the cubic Taylor model takes over.
    fn leg_psi(&self, leg: &Leg, s: f64) -> f64 {
        let eta = leg.speed(s);
        if let Some([c1, c2, c3]) = self.root_taylor {
            if leg.anchor == self.gamma && eta < 1e-6 * self.gamma {
                let x = leg.side * eta;
                return (x * (c1 + x * (c2 + x * c3))).abs();
            }
        }
        self.psi(leg.u(s)).abs()
    }

    fn leg_integral(&self, leg: &Leg, a: f64, b: f64, scale: f64) -> Result<f64> {
        let r = integrate(
            |s| leg.speed(s) / self.leg_psi(leg, s),
            a,
            b,
            1e-15 * scale,
            self.quad_tol * 1e-3,
        );
        match r {
            Ok(r) => Ok(r.value),
            // Ψ loses relative accuracy next to a root; the rounding floor sits above the tight target
            Err(Error::Quadrature { estimate, error, .. })
                if error <= self.quad_tol * estimate.abs().max(1e-15 * scale) =>
            {
                Ok(estimate)
            }
            Err(e) => Err(e),
        }
    }

    /// Walks from `λ` toward the endpoint accumulating `∫ dw/|Ψ|`. With a target, stops at the
    /// crossing; without, returns the total (finite only toward a boundary that is reached).
    fn march(&self, lambda: f64, toward: Toward, target: Option<f64>) -> Result<March> {
        let legs = self.legs(lambda, toward);
        let mut acc = KahanSum::default();
        let scale = target.unwrap_or(1.0).max(1e-300);
        let n_legs = legs.len();
        for (li, leg) in legs.iter().enumerate() {
            let last = li + 1 == n_legs;
            let mut s = 0.0;
            let mut ds = 0.25;
            let mut prev: Option<(f64, f64)> = None;
            loop {
                if leg.len.is_finite() && s >= leg.len {
                    break;
                }
                let mut b = s + ds;
                if leg.len.is_finite() && b > leg.len {
                    b = leg.len;
                }
                let piece = self.leg_integral(leg, s, b, scale)?;
                let before = acc.value();
                if let Some(t) = target {
                    if before + piece >= t {
                        let root = self.newton_in_segment(leg, s, b, t - before, piece, scale)?;
                        let u = leg.u(root);
                        return Ok(March::Hit(u, false));
                    }
                }
                acc.add(piece);
                s = b;
                ds = (ds * 1.5).min(2.0);
                if !last {
                    continue;
                }
                let u = leg.u(s);
                if let Some((value, saturated)) = self.exit_value(u, leg.anchor, toward) {
                    return Ok(match target {
                        Some(_) => March::Hit(value, saturated),
                        None => March::Total(acc.value()),
                    });
                }
                if target.is_none() {
                    // geometric tail once the integrand decays steadily
                    let h = leg.speed(s) / self.leg_psi(leg, s);
                    if let Some((ps, ph)) = prev {
                        if h < ph {
                            let rate = ((ph / h).ln() / (s - ps)).max(1e-12);
                            let tail = h / rate;
                            if tail < 1e-14 * acc.value() {
                                acc.add(tail);
                                return Ok(March::Total(acc.value()));
                            }
                        }
                    }
                    prev = Some((s, h));
                    if s > 2000.0 {
                        return Ok(March::Total(f64::INFINITY));
                    }
                }
            }
        }
        Ok(March::Total(acc.value()))
    }

    /// Value to report once the march leaves the representable range.
    fn exit_value(&self, u: f64, anchor: f64, toward: Toward) -> Option<(f64, bool)> {
        let g = self.gamma;
        match toward {
            Toward::Gamma if g.is_finite() && g > 0.0 => {
                ((u - anchor).abs() <= 1e-16 * g).then_some((g, false))
            }
            Toward::Gamma if g == 0.0 => (u < 1.0 / SATURATION).then_some((1.0 / SATURATION, true)),
            Toward::Gamma | Toward::Infinity => (u > SATURATION).then_some((SATURATION, true)),
            Toward::Zero => (u < 1.0 / SATURATION).then_some((1.0 / SATURATION, true)),
        }
    }

    fn newton_in_segment(
        &self,
        leg: &Leg,
        a: f64,
        b: f64,
        need: f64,
        piece: f64,
        scale: f64,
    ) -> Result<f64> {
        let (mut lo, mut hi) = (a, b);
        let mut s = a + (b - a) * (need / piece).clamp(0.0, 1.0);
        for _ in 0..100 {
            let f = self.leg_integral(leg, a, s, scale)? - need;
            if f.abs() <= 1e-16 * scale {
                return Ok(s);
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let h = leg.speed(s) / self.leg_psi(leg, s);
            let mut next = s - f / h;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let step = (next - s).abs();
            s = next;
            if step <= 1e-15 * s.abs().max(1.0) || hi - lo <= 1e-15 * s.abs().max(1.0) {
                return Ok(s);
            }
        }
        Ok(s)
    }

    /// `κ(t) = lim_{λ→0} u(t, λ)`; 0 for conservative mechanisms.
    pub fn kappa(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Precondition(format!("kappa needs t > 0, got {t}")));
        }
        if self.report.conservative {
            return Ok(0.0);
        }
        // κ = u(t - G0(ε), ε) with G0(ε) = ∫_0^ε dw/|Ψ| small
        let mut eps = self.gamma.min(1.0) * 1e-3;
        loop {
            let g0 = self.total_toward(eps, Toward::Zero)?;
            if g0 < t {
                return self.u(t - g0, eps);
            }
            eps *= 1e-3;
            if eps < 1e-250 {
                return Ok(0.0);
            }
        }
    }

    /// `v(t) = lim_{λ→∞} u(t, λ)`; `+inf` for persistent mechanisms.
    pub fn v_bar(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Precondition(format!("v_bar needs t > 0, got {t}")));
        }
        if self.report.persistent {
            return Ok(f64::INFINITY);
        }
        let mut big = (self.gamma.max(1.0)) * 1e3;
        loop {
            let g = self.total_toward(big, Toward::Infinity)?;
            if g < t {
                return self.u(t - g, big);
            }
            big *= 1e3;
            if big > 1e250 {
                return Err(Error::Precondition(format!("v_bar({t}) beyond representable range")));
            }
        }
    }

    /// `∫_λ^∞ dw/Ψ(w)` for `λ > γ`.
    pub fn integral_to_infinity(&self, lambda: f64) -> Result<f64> {
        if self.report.persistent {
            return Ok(f64::INFINITY);
        }
        self.total_toward(lambda, Toward::Infinity)
    }

    /// `∫_0^λ dw/|Ψ(w)|` for `λ < γ`.
    pub fn integral_from_zero(&self, lambda: f64) -> Result<f64> {
        if self.report.conservative {
            return Ok(f64::INFINITY);
        }
        self.total_toward(lambda, Toward::Zero)
    }

    fn total_toward(&self, lambda: f64, toward: Toward) -> Result<f64> {
        match self.march(lambda, toward, None)? {
            March::Total(g) => Ok(g),
            March::Hit(..) => unreachable!("no target given"),
        }
    }

    /// `∂_λ u(t, λ) = Ψ(u(t, λ)) / Ψ(λ)`.
    pub fn du_dlambda(&self, t: f64, lambda: f64) -> Result<f64> {
        let u = self.u(t, lambda)?;
        let pl = self.psi(lambda);
        if pl == 0.0 || (lambda - self.gamma).abs() < 1e-9 * self.gamma.max(1e-300) {
            // at the fixed point the ratio tends to e^{-Ψ'(γ) t}
            let d = match self.root_slope() {
                Some(d) => d,
                None => {
                    let h = 1e-6 * self.gamma.max(1e-3);
                    (self.psi(self.gamma + h) - self.psi(self.gamma - h)) / (2.0 * h)
                }
            };
            return Ok((-d * t).exp());
        }
        Ok(self.psi(u) / pl)
    }

    /// `u(t, λ)` by integrating `∂_t log u = -Ψ(u)/u`; a cross-check for the integral solver.
    pub fn u_ode(&self, t: f64, lambda: f64) -> Result<f64> {
        let y = dopri5(
            |_, y| {
                let u = y.exp();
                -self.psi(u) / u
            },
            0.0,
            lambda.ln(),
            t,
            1e-12,
            1e-14,
        )?;
        Ok(y.exp())
    }

    /// Entrance-law tail `ν_t((ε, ∞])`.
    pub fn entrance_tail(&self, t: f64, eps: f64) -> Result<f64> {
        entrance::entrance_tail(self, t, eps)
    }
}
