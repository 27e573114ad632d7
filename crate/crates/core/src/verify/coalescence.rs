//! The probability that two uniformly sampled individuals at times `t` and `t + s` have
//! different ancestors, weighted by `1 - e^{-θ Z_{t+s}}`: quadrature and Monte Carlo.

use std::cell::{Cell, RefCell};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowEvaluator;
use crate::mechanism::BranchingMechanism;
use crate::numerics::{integrate, integrate_to_infinity};
use crate::parallel::{map_runs, mean_se};
use crate::paths::exact::{quadratic_clusters, quadratic_step};
use crate::paths::PathConfig;
use crate::population::{frequency_at, Atom, BlockSimulator, PopulationState};

/// Largest value the flow reports before saturating.
const SATURATION: f64 = 1e300;

/// A coalescence integral. `saturated` marks values where the backward flow left the
/// representable range; the value is then an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoalescenceBound {
    pub value: f64,
    pub saturated: bool,
}

fn require_conservative(ev: &FlowEvaluator) -> Result<()> {
    if ev.report().conservative {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "the coalescence formula needs a conservative mechanism".into(),
        ))
    }
}

fn check_args(x: f64, t: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Precondition(format!("x must be positive, got {x}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// Adaptive quadrature that settles for a looser target when rounding in the
/// integrand stalls the tight one.
fn quad<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> Result<f64> {
    let r = if b.is_finite() {
        integrate(&mut f, a, b, 1e-15, 1e-10)
    } else {
        integrate_to_infinity(&mut f, a, 1e-15, 1e-10)
    };
    match r {
        Ok(r) => Ok(r.value),
        Err(Error::Quadrature { estimate, error, .. }) if error <= 1e-7 * estimate.abs() => Ok(estimate),
        Err(e) => Err(e),
    }
}

/// `x² ∫ Ψ(w+g) e^{-xw} min(λ - g, cap) / Ψ(λ) dw` with `λ = u(-t, w + g)` over
/// `0 < w < v(t) - g`. With `g = γ` this is the integral for the mechanism `Ψ(· + γ)`.
fn integral(ev: &FlowEvaluator, x: f64, t: f64, g: f64, cap: f64) -> Result<CoalescenceBound> {
    let mech = ev.mechanism();
    let gamma = ev.gamma();
    let vt = if ev.report().persistent {
        f64::INFINITY
    } else {
        ev.v_bar(t)?
    };
    let upper = vt - g;
    let saturated = Cell::new(false);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let slope = ev.root_slope();
    let f = |w: f64| -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let arg = w + g;
        let lam = match ev.u_exact(-t, arg) {
            Ok(v) => {
                if v.saturated {
                    saturated.set(true);
                }
                v.value
            }
            Err(Error::BackwardDomain { .. }) => {
                saturated.set(true);
                SATURATION
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return 0.0;
            }
        };
        // Ψ(w)/Ψ(u(-t, w)) = ∂_λ u(t, λ), which tends to e^{-Ψ'(γ) t} at the root
        let ratio = match slope {
            Some(d) if (arg - gamma).abs() <= 1e-9 * gamma => (-d * t).exp(),
            _ => {
                let num = mech.psi(arg).unwrap_or(f64::NAN);
                let den = mech.psi(lam).unwrap_or(f64::NAN);
                if den == 0.0 {
                    return 0.0;
                }
                num / den
            }
        };
        let v = ratio * (-x * w).exp() * (lam - g).min(cap);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut cuts = vec![0.0];
    if gamma.is_finite() && gamma - g > 0.0 && gamma - g < upper {
        cuts.push(gamma - g);
    }
    if cap.is_finite() {
        let kink = ev.u_exact(t, cap + g)?.value - g;
        if kink > 0.0 && kink < upper {
            cuts.push(kink);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.push(upper);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += quad(f, w[0], w[1])?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
    }
    Ok(CoalescenceBound {
        value: x * x * total,
        saturated: saturated.get(),
    })
}

/// `E[1{R_t^{-1}(U) ≠ R_{t+s}^{-1}(V)} (1 - e^{-θ Z_{t+s}})]` from
/// `x² ∫_0^{v(t)} Ψ(w) e^{-xw} min(u(-t, w), u(s, θ)) / Ψ(u(-t, w)) dw`.
pub fn coalescence_quadrature(ev: &FlowEvaluator, x: f64, t: f64, s: f64, theta: f64) -> Result<f64> {
    require_conservative(ev)?;
    check_args(x, t)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Precondition(format!("s must be nonnegative, got {s}")));
    }
    if !(theta > 0.0) {
        return Err(Error::Precondition(format!("theta must be positive, got {theta}")));
    }
    let cap = if theta.is_infinite() {
        f64::INFINITY
    } else if s == 0.0 {
        theta
    } else {
        ev.u(s, theta)?
    };
    Ok(integral(ev, x, t, 0.0, cap)?.value)
}

/// `A(t)`: the coalescence integral with `θ = γ`, bounding
/// `E[(1 - M_t({e})) ; Z → ∞]` for the eventual Eve `e`.
pub fn eve_bound_a(ev: &FlowEvaluator, x: f64, t: f64) -> Result<CoalescenceBound> {
    require_conservative(ev)?;
    check_args(x, t)?;
    let gamma = ev.gamma();
    if !(gamma > 0.0) {
        return Err(Error::Precondition(
            "A(t) needs a positive Malthusian root".into(),
        ));
    }
    integral(ev, x, t, 0.0, gamma)
}

/// `B(t)`: the `θ → ∞` integral for `Ψ(· + γ)`, the mechanism of the population on
/// `{Z → 0}`; it bounds `1 - E[M_t({e})]` there.
pub fn eve_bound_b(ev: &FlowEvaluator, x: f64, t: f64) -> Result<CoalescenceBound> {
    require_conservative(ev)?;
    check_args(x, t)?;
    let gamma = ev.gamma();
    if !gamma.is_finite() {
        return Err(Error::Precondition("B(t) needs a finite Malthusian root".into()));
    }
    integral(ev, x, t, gamma, f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Resolution {
    /// Individual clusters of `Ψ = αλ + βλ²` sampled exactly.
    Clusters,
    /// `n` independent blocks; two clusters in one block count as one ancestor.
    Blocks(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoalescenceEstimate {
    /// Average of `1{different ancestors} (1 - e^{-θ Z_{t+s}})` over sampled `U, V`.
    pub mean: f64,
    pub se: f64,
    /// The same with `U, V` integrated out: `(1 - Σ_i p_i q_i)(1 - e^{-θ Z_{t+s}})`.
    pub rao_blackwell: f64,
    pub rao_blackwell_se: f64,
    pub n_runs: usize,
    pub resolution: Resolution,
}

/// Expected shortfall of the block estimate: pairs of distinct clusters inside one block
/// carry `1/n` of the integral, since blocks split the intensity `x² → n (x/n)²`.
pub fn block_resolution_bias(quadrature: f64, n: usize) -> f64 {
    quadrature / n as f64
}

/// One run's contribution from the atoms at `t` and at `t + s` (matched by location).
fn resolve<R: Rng + ?Sized>(
    now: &PopulationState,
    later: &PopulationState,
    theta: f64,
    rng: &mut R,
) -> (f64, f64) {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let (m_now, m_later) = match (frequency_at(now), frequency_at(later)) {
        (Ok(a), Ok(b)) => (a, b),
        // nobody left at t + s: the weight vanishes
        _ => return (0.0, 0.0),
    };
    let weight = -(-theta * later.log_total().exp()).exp_m1();
    let (_, i) = m_now.inverse(u);
    let (_, j) = m_later.inverse(v);
    let same = match (i, j) {
        (Some(i), Some(j)) => m_now.atoms[i].location == m_later.atoms[j].location,
        _ => false,
    };
    let mut overlap = 0.0;
    let mut k = 0;
    for a in &m_now.atoms {
        while k < m_later.atoms.len() && m_later.atoms[k].location < a.location {
            k += 1;
        }
        if k < m_later.atoms.len() && m_later.atoms[k].location == a.location {
            overlap += a.mass * m_later.atoms[k].mass;
        }
    }
    let sampled = if same { 0.0 } else { weight };
    (sampled, (1.0 - overlap).max(0.0) * weight)
}

/// Monte Carlo estimate of the left side of the coalescence identity, runs seeded per
/// index from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn mc_coalescence(
    mech: &BranchingMechanism,
    x: f64,
    t: f64,
    s: f64,
    theta: f64,
    n_runs: usize,
    resolution: Resolution,
    cfg: &PathConfig,
    seed: u64,
) -> Result<CoalescenceEstimate> {
    check_args(x, t)?;
    if !(s >= 0.0 && theta > 0.0) {
        return Err(Error::Precondition("need s >= 0 and theta > 0".into()));
    }
    if n_runs == 0 {
        return Err(Error::Precondition("need at least one run".into()));
    }
    let report = crate::mechanism::classify(mech)?;
    if !report.conservative {
        return Err(Error::Unsupported(
            "the coalescence formula needs a conservative mechanism".into(),
        ));
    }
    let pairs: Vec<(f64, f64)> = match resolution {
        Resolution::Clusters => {
            if !mech.levy().is_empty() {
                return Err(Error::Unsupported(
                    "cluster resolution needs Ψ = αλ + βλ²".into(),
                ));
            }
            let (alpha, beta) = (mech.alpha(), mech.beta());
            map_runs(n_runs, seed, |_, rng| {
                let now = quadratic_clusters(x, t, alpha, beta, rng);
                let later: Vec<f64> = if s == 0.0 {
                    now.clone()
                } else {
                    now.iter().map(|&m| quadratic_step(m, s, alpha, beta, rng).0).collect()
                };
                let mut locs: Vec<f64> = now.iter().map(|_| rng.random::<f64>() * x).collect();
                let mut order: Vec<usize> = (0..now.len()).collect();
                order.sort_by(|&a, &b| locs[a].total_cmp(&locs[b]));
                locs.sort_by(f64::total_cmp);
                let state = |masses: &[f64], time: f64| {
                    let atoms = order
                        .iter()
                        .zip(&locs)
                        .filter(|(&k, _)| masses[k] > 0.0)
                        .map(|(&k, &location)| Atom {
                            location,
                            mass: masses[k],
                        })
                        .collect();
                    PopulationState::new(time, x, 0.0, atoms, 0.0)
                };
                resolve(&state(&now, t), &state(&later, t + s), theta, rng)
            })
        }
        Resolution::Blocks(n) => {
            let cfg = PathConfig {
                horizon: t + s,
                ..cfg.clone()
            };
            if !cfg.grid().iter().any(|&g| (g - t).abs() <= 1e-9 * t.max(1.0)) {
                return Err(Error::Precondition(format!(
                    "t = {t} is not on the path grid of step {}",
                    cfg.h
                )));
            }
            let sim = BlockSimulator::new(mech, &cfg)?;
            let runs = map_runs(n_runs, seed, |_, rng| {
                let traj = sim.run(x, n, rng)?;
                Ok(resolve(traj.at(t), traj.terminal(), theta, rng))
            });
            runs.into_iter().collect::<Result<Vec<_>>>()?
        }
    };
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mean, se) = mean_se(&a);
    let (rao_blackwell, rao_blackwell_se) = mean_se(&b);
    Ok(CoalescenceEstimate {
        mean,
        se,
        rao_blackwell,
        rao_blackwell_se,
        n_runs,
        resolution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::catalog;

    #[test]
    fn vanishes_as_theta_shrinks() {
        let ev = FlowEvaluator::new(catalog::quadratic_super()).unwrap();
        let a = coalescence_quadrature(&ev, 1.0, 1.0, 0.0, 1e-3).unwrap();
        let b = coalescence_quadrature(&ev, 1.0, 1.0, 0.0, 1e-6).unwrap();
        assert!(b < a && b < 1e-5, "{a} {b}");
    }

    #[test]
    fn large_theta_approaches_the_uncapped_integral() {
        let ev = FlowEvaluator::new(catalog::quadratic_super()).unwrap();
        let capped = coalescence_quadrature(&ev, 1.0, 1.0, 0.0, 1e6).unwrap();
        let full = integral(&ev, 1.0, 1.0, 0.0, f64::INFINITY).unwrap();
        assert!(!full.saturated);
        assert!((capped - full.value).abs() < 1e-3 * full.value, "{capped} {}", full.value);
    }

    #[test]
    fn rejects_non_conservative() {
        let ev = FlowEvaluator::new(catalog::subordinator()).unwrap();
        assert!(matches!(
            coalescence_quadrature(&ev, 1.0, 1.0, 0.0, 1.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn a_decreases_in_t() {
        let ev = FlowEvaluator::new(catalog::quadratic_super()).unwrap();
        let v: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&t| eve_bound_a(&ev, 1.0, t).unwrap().value)
            .collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
    }

    #[test]
    fn neveu_bounds_are_small_at_twenty() {
        let ev = FlowEvaluator::new(catalog::neveu()).unwrap();
        let a = eve_bound_a(&ev, 1.0, 20.0).unwrap();
        let b = eve_bound_b(&ev, 1.0, 20.0).unwrap();
        assert!(a.value < 0.01 && b.value < 0.01, "{a:?} {b:?}");
    }

    #[test]
    fn s_zero_estimators_agree() {
        let m = catalog::quadratic_super();
        let cfg = PathConfig::default();
        let e = mc_coalescence(&m, 1.0, 1.0, 0.0, 1.0, 4000, Resolution::Clusters, &cfg, 3).unwrap();
        let tol = 3.0 * (e.se * e.se + e.rao_blackwell_se * e.rao_blackwell_se).sqrt();
        assert!((e.mean - e.rao_blackwell).abs() < tol, "{e:?}");
    }
}
