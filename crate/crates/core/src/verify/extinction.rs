//! Empirical extinction-time distribution against `P_x(ζ₀ ≤ t) = e^{-x v(t)}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::FlowEvaluator;
use crate::parallel::map_runs;
use crate::paths::{simulate_path, Absorption, PathConfig, PathSimulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionPoint {
    pub t: f64,
    pub empirical: f64,
    pub theoretical: f64,
    /// Binomial standard error at the theoretical probability.
    pub se: f64,
    pub pass: bool,
}

/// Extinction fractions on `t_grid` from `n_runs` paths started at `x`; the band is
/// three binomial standard errors.
pub fn extinction_curve(
    ev: &FlowEvaluator,
    x: f64,
    t_grid: &[f64],
    n_runs: usize,
    cfg: &PathConfig,
    seed: u64,
) -> Result<Vec<ExtinctionPoint>> {
    if ev.report().persistent {
        return Err(Error::Unsupported(
            "a persistent mechanism never hits zero in finite time".into(),
        ));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Precondition("t_grid must hold positive finite times".into()));
    }
    if n_runs == 0 {
        return Err(Error::Precondition("need at least one run".into()));
    }
    let horizon = t_grid.iter().copied().fold(0.0, f64::max);
    let cfg = PathConfig {
        horizon,
        h: cfg.h.min(horizon),
        ..cfg.clone()
    };
    let sim = PathSimulator::new(ev.mechanism(), &cfg)?;
    let times = map_runs(n_runs, seed, |_, rng| {
        let p = simulate_path(&sim, x, &cfg, rng)?;
        Ok(match p.absorption {
            Absorption::Extinct(t) => t,
            _ => f64::INFINITY,
        })
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let n = n_runs as f64;
    t_grid
        .iter()
        .map(|&t| {
            let empirical = times.iter().filter(|&&z| z <= t).count() as f64 / n;
            let theoretical = (-x * ev.v_bar(t)?).exp();
            let se = (theoretical * (1.0 - theoretical) / n).sqrt();
            let pass = (empirical - theoretical).abs() <= 3.0 * se;
            Ok(ExtinctionPoint {
                t,
                empirical,
                theoretical,
                se,
                pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::catalog;

    #[test]
    fn persistent_is_unsupported() {
        let ev = FlowEvaluator::new(catalog::neveu()).unwrap();
        let r = extinction_curve(&ev, 1.0, &[1.0], 10, &PathConfig::default(), 0);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn feller_small_t_is_near_zero() {
        let ev = FlowEvaluator::new(catalog::feller()).unwrap();
        let cfg = PathConfig {
            h: 0.05,
            ..Default::default()
        };
        let pts = extinction_curve(&ev, 1.0, &[0.05, 1.0], 2000, &cfg, 4).unwrap();
        assert!(pts[0].theoretical < 1e-8 && pts[0].empirical == 0.0);
        assert!((pts[1].theoretical - (-1f64).exp()).abs() < 1e-9);
        assert!(pts.iter().all(|p| p.pass), "{pts:?}");
    }
}
