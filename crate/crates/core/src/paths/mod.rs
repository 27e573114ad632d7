//! Single CSBP trajectories on a time grid.

mod engine;
pub mod exact;
pub mod jumps;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

pub use engine::{Advance, Engine, FiniteVariationEngine, LampertiEngine, PathSimulator, POSITIVITY_FLOOR};
pub use exact::{feller_step, quadratic_step};

use crate::error::{Error, Result};
use crate::mechanism::{classify, BranchingMechanism};
use jumps::JumpTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathConfig {
    /// Output grid spacing, also the largest internal step.
    pub h: f64,
    /// Small-jump cutoff.
    pub delta: f64,
    pub horizon: f64,
    /// Mass above which a non-conservative path is declared exploded.
    pub cap: f64,
    pub seed: u64,
    /// Internal step as a fraction of the local time scale `|λ/Ψ(λ)|` at `λ = 1/Z`.
    pub rel_step: f64,
    /// The Lamperti cutoff shrinks to `delta_rel * Z` for small masses.
    pub delta_rel: f64,
    /// Below `extinction_threshold * x0`, non-persistent paths finish with the exact extinction law.
    pub extinction_threshold: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            h: 1e-3,
            delta: 1e-3,
            horizon: 1.0,
            cap: 1e12,
            seed: 0,
            rel_step: 2e-3,
            delta_rel: 1e-2,
            extinction_threshold: 1e-6,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Precondition(m.into()));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad("path step h must be positive");
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad("small-jump cutoff delta must lie in (0, 1]");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive and finite");
        }
        if !(self.cap > 0.0) {
            return bad("overflow cap must be positive");
        }
        if !(self.rel_step > 0.0 && self.rel_step <= 1.0) {
            return bad("rel_step must lie in (0, 1]");
        }
        if !(self.delta_rel > 0.0 && self.delta_rel <= 1.0) {
            return bad("delta_rel must lie in (0, 1]");
        }
        if !(self.extinction_threshold >= 0.0) {
            return bad("extinction_threshold must be nonnegative");
        }
        Ok(())
    }

    /// Grid `0, h, 2h, ...` ending exactly at the horizon.
    pub fn grid(&self) -> Vec<f64> {
        let n = (self.horizon / self.h - 1e-9).ceil().max(1.0) as usize;
        let mut g: Vec<f64> = (0..n).map(|k| k as f64 * self.h).collect();
        g.push(self.horizon);
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Absorption {
    None,
    Extinct(f64),
    Exploded(f64),
}

impl Absorption {
    pub fn time(&self) -> Option<f64> {
        match *self {
            Absorption::None => None,
            Absorption::Extinct(t) | Absorption::Exploded(t) => Some(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsbpPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub absorption: Absorption,
}

impl CsbpPath {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("paths are never empty")
    }

    /// Value at the first grid time `>= t`.
    pub fn at(&self, t: f64) -> f64 {
        let i = self
            .times
            .iter()
            .position(|&s| s >= t - 1e-12)
            .unwrap_or(self.times.len() - 1);
        self.values[i]
    }
}

/// Runs `sim` from `x0` over the configured grid.
pub fn simulate_path<R: Rng + ?Sized>(
    sim: &PathSimulator,
    x0: f64,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<CsbpPath> {
    if !(x0 > 0.0 && x0 < cfg.cap) {
        return Err(Error::Precondition(format!(
            "initial mass must lie in (0, cap), got {x0}"
        )));
    }
    let times = cfg.grid();
    let mut values = Vec::with_capacity(times.len());
    values.push(x0);
    let mut z = x0;
    let mut absorption = Absorption::None;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        match absorption {
            Absorption::Extinct(t) if t <= t1 => {
                values.push(0.0);
                continue;
            }
            Absorption::Extinct(_) => {
                // finished by the extinction law: negligible mass until ζ
                values.push(z);
                continue;
            }
            Absorption::Exploded(_) => {
                values.push(f64::INFINITY);
                continue;
            }
            Absorption::None => {}
        }
        match sim.advance(z, t0, t1 - t0, x0, rng) {
            Advance::Alive(next) => {
                z = next;
                values.push(z);
            }
            Advance::Extinct(t) => {
                absorption = Absorption::Extinct(t);
                values.push(if t <= t1 { 0.0 } else { z });
            }
            Advance::Exploded(t) => {
                absorption = Absorption::Exploded(t);
                values.push(f64::INFINITY);
            }
        }
    }
    Ok(CsbpPath {
        times,
        values,
        absorption,
    })
}

/// A trajectory from the Lamperti scheme, even when an exact engine exists.
pub fn lamperti_path<R: Rng + ?Sized>(
    mech: &BranchingMechanism,
    x0: f64,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<CsbpPath> {
    let sim = PathSimulator::lamperti(mech, cfg)?;
    simulate_path(&sim, x0, cfg, rng)
}

/// `Z` and the subordinator CSBP `Z*` with mechanism `Ψ(λ) - Dλ`, driven by one
/// Poisson measure on (time, level, size): an atom moves `Z*` if its level is below
/// `Z*` and `Z` if it is below `Z`, so `Z ≤ Z*` holds pathwise.
pub fn dominating_coupling<R: Rng + ?Sized>(
    mech: &BranchingMechanism,
    x0: f64,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<(CsbpPath, CsbpPath)> {
    cfg.validate()?;
    let report = classify(mech)?;
    let d = match report.drift {
        Some(d) if d > 0.0 => d,
        _ => {
            return Err(Error::Precondition(
                "dominating coupling needs finite variation with D > 0".into(),
            ))
        }
    };
    if !(x0 > 0.0) {
        return Err(Error::Precondition(format!("x0 must be positive, got {x0}")));
    }
    // small jumps become drift for both processes; the cutoff only matters for infinite π
    let table = JumpTable::new(mech, cfg.delta)?;
    let small = mech.moment(1, 0.0, cfg.delta)?;
    let g = small - d;
    let g_star = small;
    let times = cfg.grid();
    let (mut z, mut zs) = (x0, x0);
    let (mut vz, mut vs) = (vec![x0], vec![x0]);
    let mut now = 0.0;
    let mut absorption_star = Absorption::None;
    let alone = FiniteVariationEngine::new(mech, &report, cfg.delta, cfg.delta_rel)?;
    for &t1 in &times[1..] {
        loop {
            if absorption_star != Absorption::None {
                break;
            }
            let lam = table.rate() * zs;
            let w = if lam > 0.0 {
                let e: f64 = Exp1.sample(rng);
                if g_star == 0.0 {
                    e / lam
                } else {
                    (g_star * e / lam).ln_1p() / g_star
                }
            } else {
                f64::INFINITY
            };
            if now + w >= t1 {
                let rest = t1 - now;
                z *= (g * rest).exp();
                zs *= (g_star * rest).exp();
                now = t1;
                break;
            }
            now += w;
            z *= (g * w).exp();
            zs *= (g_star * w).exp();
            let level = rng.random::<f64>() * zs;
            let r = table.sample(rng);
            if level < z {
                z += r;
            }
            zs += r;
            if zs > cfg.cap {
                absorption_star = Absorption::Exploded(now);
            }
        }
        if absorption_star != Absorption::None {
            // Z continues alone once Z* leaves the representable range
            if now < t1 {
                if let Advance::Alive(next) = alone.advance(z, now, t1 - now, None, rng) {
                    z = next;
                }
                now = t1;
            }
            vs.push(f64::INFINITY);
            vz.push(z);
        } else {
            vz.push(z);
            vs.push(zs);
        }
    }
    Ok((
        CsbpPath {
            times: times.clone(),
            values: vz,
            absorption: Absorption::None,
        },
        CsbpPath {
            times,
            values: vs,
            absorption: absorption_star,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::catalog;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_ends_at_horizon() {
        let cfg = PathConfig {
            h: 0.3,
            horizon: 1.0,
            ..Default::default()
        };
        let g = cfg.grid();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        let cfg = PathConfig {
            h: 0.25,
            horizon: 1.0,
            ..Default::default()
        };
        assert_eq!(cfg.grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = PathConfig {
            h: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = PathConfig {
            delta: 2.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn absorbing_states_are_constant() {
        let cfg = PathConfig {
            h: 0.05,
            horizon: 3.0,
            ..Default::default()
        };
        let sim = PathSimulator::new(&catalog::feller(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut extinct = 0;
        for _ in 0..200 {
            let p = simulate_path(&sim, 0.5, &cfg, &mut rng).unwrap();
            if let Absorption::Extinct(t) = p.absorption {
                extinct += 1;
                for (s, v) in p.times.iter().zip(&p.values) {
                    if *s >= t {
                        assert_eq!(*v, 0.0);
                    } else {
                        assert!(*v > 0.0);
                    }
                }
            }
        }
        assert!(extinct > 100);
    }

    #[test]
    fn coupling_dominates() {
        let cfg = PathConfig {
            h: 0.05,
            horizon: 2.0,
            ..Default::default()
        };
        let m = catalog::fv_compound_poisson();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let (z, zs) = dominating_coupling(&m, 1.0, &cfg, &mut rng).unwrap();
            for (a, b) in z.values.iter().zip(&zs.values) {
                assert!(a <= b);
            }
            assert!(zs.values.windows(2).all(|w| w[0] <= w[1]));
        }
        assert!(dominating_coupling(&catalog::feller(), 1.0, &cfg, &mut rng).is_err());
    }
}
