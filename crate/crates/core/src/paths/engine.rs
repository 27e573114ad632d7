//! Transition engines: exact where the flow is explicit, event-driven for finite
//! variation, adaptive Lamperti-Euler otherwise.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::exact::{
    neveu_log_step, neveu_parameters, quadratic_extinction_bridge, quadratic_step,
};
use super::jumps::{JumpTable, LevyIncrement};
use super::PathConfig;
use crate::error::{Error, Result};
use crate::flow::FlowEvaluator;
use crate::mechanism::{classify, BranchingMechanism, ClassificationReport, Variation};

/// State after advancing a single path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Advance {
    Alive(f64),
    /// Absolute time of extinction. May lie past the requested interval when the engine
    /// finished a negligible mass with the exact extinction law.
    Extinct(f64),
    /// Absolute time of cap crossing.
    Exploded(f64),
}

/// Jumps above a cutoff simulated exactly, jumps below it replaced by their mean;
/// between jumps `Z` follows `dZ = g Z dt` and jumps arrive at rate `Λ Z`. The cutoff is
/// δ for small masses and rises to about `delta_rel * Z` for large ones, which keeps the
/// event count per unit of relative growth bounded.
#[derive(Debug, Clone)]
pub struct FiniteVariationEngine {
    /// `(jumps above δ 2^k, growth g)` for `k = 0, 1, ...`
    levels: Vec<(JumpTable, f64)>,
    delta_rel: f64,
}

const FV_LEVELS: usize = 64;

impl FiniteVariationEngine {
    pub fn new(
        mech: &BranchingMechanism,
        report: &ClassificationReport,
        delta: f64,
        delta_rel: f64,
    ) -> Result<Self> {
        let d = report.drift.ok_or_else(|| {
            Error::Precondition("event-driven engine needs a finite-variation mechanism".into())
        })?;
        let mut levels = Vec::with_capacity(FV_LEVELS);
        let mut cut = delta;
        for _ in 0..FV_LEVELS {
            let table = JumpTable::new(mech, cut)?;
            let small = mech.moment(1, 0.0, cut)?;
            levels.push((table, small - d));
            cut *= 2.0;
        }
        Ok(FiniteVariationEngine { levels, delta_rel })
    }

    fn level(&self, z: f64) -> &(JumpTable, f64) {
        let want = self.delta_rel * z;
        let base = self.levels[0].0.delta();
        if !(want > 2.0 * base) {
            return &self.levels[0];
        }
        let k = ((want / base).log2().floor() as usize).min(FV_LEVELS - 1);
        &self.levels[k]
    }

    /// Rate of jumps above δ per unit mass.
    pub fn jump_rate(&self) -> f64 {
        self.levels[0].0.rate()
    }

    pub fn table(&self) -> &JumpTable {
        &self.levels[0].0
    }

    /// Time until the next jump from mass `z`, or `None` if the decaying rate never fires.
    pub fn next_jump<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> Option<f64> {
        let (table, g) = self.level(z);
        Self::waiting_time(table.rate() * z, *g, rng)
    }

    fn waiting_time<R: Rng + ?Sized>(lam: f64, g: f64, rng: &mut R) -> Option<f64> {
        if lam <= 0.0 {
            return None;
        }
        let e: f64 = Exp1.sample(rng);
        if g == 0.0 {
            return Some(e / lam);
        }
        let arg = g * e / lam;
        if arg <= -1.0 {
            return None;
        }
        Some(arg.ln_1p() / g)
    }

    pub(crate) fn advance<R: Rng + ?Sized>(
        &self,
        mut z: f64,
        t0: f64,
        dt: f64,
        cap: Option<f64>,
        rng: &mut R,
    ) -> Advance {
        let mut t = 0.0;
        loop {
            let (table, g) = self.level(z);
            match Self::waiting_time(table.rate() * z, *g, rng) {
                Some(w) if t + w < dt => {
                    t += w;
                    z = z * (g * w).exp() + table.sample(rng);
                    if let Some(c) = cap {
                        if z > c {
                            return Advance::Exploded(t0 + t);
                        }
                    }
                }
                _ => {
                    let end = z * (g * (dt - t)).exp();
                    return match cap {
                        Some(c) if end > c => Advance::Exploded(t0 + t + (c / z).ln() / g),
                        _ => Advance::Alive(end),
                    };
                }
            }
        }
    }
}

/// Adaptive Euler scheme on the Lamperti representation `Z_t = x + X(∫_0^t Z_s ds)`.
#[derive(Debug)]
pub struct LampertiEngine {
    /// Increments for cutoffs `δ 2^k`, `k` from `-LADDER_DOWN` up to `LADDER_UP - 1`.
    ladder: Vec<LevyIncrement>,
    /// Mechanism time scale at `z = 2^k` for `k` in `TAU_K`.
    tau: Vec<f64>,
    rel_step: f64,
    delta_rel: f64,
    max_step: f64,
    persistent: bool,
    extinction_threshold: f64,
    flow: Option<FlowEvaluator>,
}

const TAU_K: std::ops::RangeInclusive<i32> = -200..=200;
const LADDER_DOWN: i32 = 48;
const LADDER_UP: i32 = 48;
pub const POSITIVITY_FLOOR: f64 = 1e-300;

impl LampertiEngine {
    pub fn new(mech: &BranchingMechanism, report: &ClassificationReport, cfg: &PathConfig) -> Result<Self> {
        let ladder = (-LADDER_DOWN..LADDER_UP)
            .map(|k| LevyIncrement::new(mech, cfg.delta * 2f64.powi(k)))
            .collect::<Result<Vec<_>>>()?;
        let tau = TAU_K
            .map(|k| mech.time_scale(2f64.powi(k)).unwrap_or(f64::NAN))
            .collect();
        let flow = if report.persistent {
            None
        } else {
            Some(FlowEvaluator::new(mech.clone())?)
        };
        Ok(LampertiEngine {
            ladder,
            tau,
            rel_step: cfg.rel_step,
            delta_rel: cfg.delta_rel,
            max_step: cfg.h,
            persistent: report.persistent,
            extinction_threshold: cfg.extinction_threshold,
            flow,
        })
    }

    /// Natural time scale at mass `z`.
    pub fn time_scale(&self, z: f64) -> f64 {
        let k = z.log2().floor().clamp(*TAU_K.start() as f64, (*TAU_K.end() - 1) as f64) as i32;
        let i = (k - TAU_K.start()) as usize;
        self.tau[i].min(self.tau[i + 1])
    }

    fn increment_for(&self, z: f64) -> &LevyIncrement {
        let base = self.ladder[LADDER_DOWN as usize].delta();
        let k = (self.delta_rel * z / base)
            .log2()
            .floor()
            .clamp(-LADDER_DOWN as f64, (LADDER_UP - 1) as f64) as i32;
        &self.ladder[(k + LADDER_DOWN) as usize]
    }

    /// Remaining time to extinction from a small mass: `P(ζ ≤ s) = e^{-z v(s)}`.
    fn extinction_tail<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> Option<f64> {
        let flow = self.flow.as_ref()?;
        let e: f64 = Exp1.sample(rng);
        flow.integral_to_infinity(e / z).ok()
    }

    fn advance<R: Rng + ?Sized>(
        &self,
        mut z: f64,
        t0: f64,
        dt: f64,
        cap: Option<f64>,
        x0: f64,
        rng: &mut R,
    ) -> Advance {
        let mut t = 0.0;
        while t < dt {
            if !self.persistent && z < self.extinction_threshold * x0 {
                // finish with the exact extinction law; the time may fall past this interval
                if let Some(rest) = self.extinction_tail(z, rng) {
                    return Advance::Extinct(t0 + t + rest);
                }
            }
            let step = (self.rel_step * self.time_scale(z))
                .min(self.max_step)
                .min(dt - t)
                .max(1e-300);
            let inc = self.increment_for(z);
            let next = z + inc.sample(z * step, rng);
            t += step;
            if next <= 0.0 {
                if self.persistent {
                    z = POSITIVITY_FLOOR;
                    continue;
                }
                return Advance::Extinct(t0 + t);
            }
            z = next;
            if let Some(c) = cap {
                if z > c {
                    return Advance::Exploded(t0 + t);
                }
            }
        }
        Advance::Alive(z)
    }
}

/// The per-mechanism transition engine.
#[derive(Debug)]
pub enum Engine {
    Quadratic { alpha: f64, beta: f64 },
    Neveu { c: f64, a: f64 },
    FiniteVariation(FiniteVariationEngine),
    Lamperti(Box<LampertiEngine>),
}

/// Engine selection plus what it needs to declare absorption.
#[derive(Debug)]
pub struct PathSimulator {
    pub engine: Engine,
    pub report: ClassificationReport,
    cap: f64,
}

impl PathSimulator {
    /// Exact engines when available, the event-driven engine for finite variation,
    /// the Lamperti scheme otherwise.
    pub fn new(mech: &BranchingMechanism, cfg: &PathConfig) -> Result<Self> {
        cfg.validate()?;
        let report = classify(mech)?;
        let engine = if mech.levy().is_empty() {
            Engine::Quadratic {
                alpha: mech.alpha(),
                beta: mech.beta(),
            }
        } else if let Some((c, a)) = neveu_parameters(mech) {
            Engine::Neveu { c, a }
        } else if report.variation == Variation::Finite {
            Engine::FiniteVariation(FiniteVariationEngine::new(mech, &report, cfg.delta, cfg.delta_rel)?)
        } else {
            Engine::Lamperti(Box::new(LampertiEngine::new(mech, &report, cfg)?))
        };
        Ok(PathSimulator {
            engine,
            report,
            cap: cfg.cap,
        })
    }

    /// Forces the Lamperti scheme regardless of available exact samplers.
    pub fn lamperti(mech: &BranchingMechanism, cfg: &PathConfig) -> Result<Self> {
        cfg.validate()?;
        let report = classify(mech)?;
        let engine = Engine::Lamperti(Box::new(LampertiEngine::new(mech, &report, cfg)?));
        Ok(PathSimulator {
            engine,
            report,
            cap: cfg.cap,
        })
    }

    /// Cap-crossing means explosion only when explosion can happen.
    fn cap(&self) -> Option<f64> {
        (!self.report.conservative).then_some(self.cap)
    }

    /// Advances a live mass `z` at time `t0` by `dt`. `x0` sets the relative extinction threshold.
    pub fn advance<R: Rng + ?Sized>(&self, z: f64, t0: f64, dt: f64, x0: f64, rng: &mut R) -> Advance {
        match &self.engine {
            &Engine::Quadratic { alpha, beta } => {
                let (next, _) = quadratic_step(z, dt, alpha, beta, rng);
                if next == 0.0 {
                    Advance::Extinct(t0 + quadratic_extinction_bridge(z, dt, alpha, beta, rng))
                } else {
                    Advance::Alive(next)
                }
            }
            &Engine::Neveu { c, a } => {
                let l = neveu_log_step(z.ln(), dt, c, a, rng);
                Advance::Alive(l.exp().clamp(POSITIVITY_FLOOR, f64::MAX))
            }
            Engine::FiniteVariation(fv) => fv.advance(z, t0, dt, self.cap(), rng),
            Engine::Lamperti(l) => l.advance(z, t0, dt, self.cap(), x0, rng),
        }
    }

    /// `log Z` after `dt` from `log Z = log_z`; exact in log space for Neveu, so masses far
    /// outside the `f64` range keep their ordering.
    pub fn advance_log<R: Rng + ?Sized>(
        &self,
        log_z: f64,
        t0: f64,
        dt: f64,
        x0: f64,
        rng: &mut R,
    ) -> Advance {
        match &self.engine {
            &Engine::Neveu { c, a } => Advance::Alive(neveu_log_step(log_z, dt, c, a, rng)),
            _ => match self.advance(log_z.exp(), t0, dt, x0, rng) {
                Advance::Alive(z) => Advance::Alive(z.ln()),
                other => other,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self.engine {
            Engine::Quadratic { .. } => "exact-quadratic",
            Engine::Neveu { .. } => "exact-neveu",
            Engine::FiniteVariation(_) => "event-driven",
            Engine::Lamperti(_) => "lamperti-euler",
        }
    }
}
