//! The three population constructions. Each atom carries an independent CSBP path
//! started at its birth time; snapshots are taken on the configured grid.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{Atom, PopulationAbsorption, PopulationState, Trajectory};
use crate::error::{Error, Result};
use crate::mechanism::{classify, BranchingMechanism};
use crate::paths::jumps::{poisson, JumpTable};
use crate::paths::{Advance, Engine, PathConfig, PathSimulator};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fate {
    Alive,
    Extinct(f64),
    Exploded(f64),
}

struct Track {
    location: f64,
    /// Mass (or log mass) at each snapshot time, `None` before birth.
    values: Vec<Option<f64>>,
    fate: Fate,
}

/// Runs one atom of initial mass `z0` born at `birth` through `times`.
fn track<R: Rng + ?Sized>(
    sim: &PathSimulator,
    location: f64,
    z0: f64,
    birth: f64,
    times: &[f64],
    log_space: bool,
    rng: &mut R,
) -> Track {
    let zero = if log_space { f64::NEG_INFINITY } else { 0.0 };
    let mut values = vec![None; times.len()];
    let mut cur = if log_space { z0.ln() } else { z0 };
    let mut now = birth;
    let mut fate = Fate::Alive;
    for (i, &t) in times.iter().enumerate() {
        if t < birth {
            continue;
        }
        if fate == Fate::Alive && t > now {
            let adv = if log_space {
                sim.advance_log(cur, now, t - now, z0, rng)
            } else {
                sim.advance(cur, now, t - now, z0, rng)
            };
            match adv {
                Advance::Alive(v) => cur = v,
                Advance::Extinct(te) => fate = Fate::Extinct(te),
                Advance::Exploded(te) => fate = Fate::Exploded(te),
            }
            now = t;
        }
        values[i] = Some(match fate {
            Fate::Alive => cur,
            // a finished extinction may land past this snapshot; the mass is negligible until then
            Fate::Extinct(te) if te > t => cur,
            Fate::Extinct(_) => zero,
            Fate::Exploded(_) => f64::INFINITY,
        });
    }
    Track {
        location,
        values,
        fate,
    }
}

fn assemble<F: Fn(f64) -> f64>(
    x: f64,
    times: &[f64],
    dust: F,
    tracks: &[Track],
    log_space: bool,
    can_die: bool,
) -> Trajectory {
    let horizon = *times.last().expect("nonempty grid");
    let snapshots = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let live = tracks.iter().filter_map(|k| k.values[i].map(|v| (k.location, v)));
            if log_space {
                let scale = live
                    .clone()
                    .map(|(_, v)| v)
                    .filter(|v| v.is_finite())
                    .fold(f64::NEG_INFINITY, f64::max);
                let scale = if scale.is_finite() { scale } else { 0.0 };
                let atoms = live
                    .filter(|&(_, v)| v > f64::NEG_INFINITY)
                    .map(|(location, v)| Atom {
                        location,
                        mass: if v == f64::INFINITY { v } else { (v - scale).exp() },
                    })
                    .collect();
                let d = dust(t);
                let d = if d == 0.0 { 0.0 } else { d * (-scale).exp() };
                PopulationState::new(t, x, d, atoms, scale)
            } else {
                let atoms = live
                    .filter(|&(_, v)| v > 0.0)
                    .map(|(location, mass)| Atom { location, mass })
                    .collect();
                PopulationState::new(t, x, dust(t), atoms, 0.0)
            }
        })
        .collect();
    let first_explosion = tracks
        .iter()
        .filter_map(|k| match k.fate {
            Fate::Exploded(te) if te <= horizon => Some((te, k.location)),
            _ => None,
        })
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let absorption = if let Some((time, eve)) = first_explosion {
        PopulationAbsorption::Exploded { time, eve }
    } else if can_die && !tracks.is_empty() {
        let mut last: Option<(f64, f64)> = Some((f64::NEG_INFINITY, f64::NAN));
        for k in tracks {
            match (k.fate, last) {
                (Fate::Extinct(te), Some((tl, _))) if te <= horizon => {
                    if te > tl {
                        last = Some((te, k.location));
                    }
                }
                _ => last = None,
            }
        }
        match last {
            Some((time, eve)) => PopulationAbsorption::Extinct { time, eve },
            None => PopulationAbsorption::None,
        }
    } else {
        PopulationAbsorption::None
    };
    Trajectory {
        x,
        snapshots,
        absorption,
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("x must be positive and finite, got {x}")))
    }
}

/// `[0, x]` cut into `n` equal blocks, each carrying an independent CSBP(Ψ, x/n).
#[derive(Debug)]
pub struct BlockSimulator {
    sim: PathSimulator,
    cfg: PathConfig,
    log_space: bool,
}

impl BlockSimulator {
    pub fn new(mech: &BranchingMechanism, cfg: &PathConfig) -> Result<Self> {
        Self::with_simulator(PathSimulator::new(mech, cfg)?, cfg)
    }

    pub fn with_simulator(sim: PathSimulator, cfg: &PathConfig) -> Result<Self> {
        cfg.validate()?;
        // Neveu masses leave the f64 range within a few time units
        let log_space = matches!(sim.engine, Engine::Neveu { .. });
        Ok(BlockSimulator {
            sim,
            cfg: cfg.clone(),
            log_space,
        })
    }

    pub fn path_simulator(&self) -> &PathSimulator {
        &self.sim
    }

    pub fn run<R: Rng + ?Sized>(&self, x: f64, n: usize, rng: &mut R) -> Result<Trajectory> {
        check_x(x)?;
        if n == 0 {
            return Err(Error::Precondition("block count must be at least 1".into()));
        }
        let times = self.cfg.grid();
        let w = x / n as f64;
        let tracks: Vec<Track> = (0..n)
            .map(|k| {
                let mid = (k as f64 + 0.5) * w;
                track(&self.sim, mid, w, 0.0, &times, self.log_space, rng)
            })
            .collect();
        Ok(assemble(x, &times, |_| 0.0, &tracks, self.log_space, true))
    }
}

pub fn simulate_blocks<R: Rng + ?Sized>(
    mech: &BranchingMechanism,
    x: f64,
    n: usize,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    BlockSimulator::new(mech, cfg)?.run(x, n, rng)
}

/// Dust `x e^{-Dt}` plus atoms born at rate `x e^{-Dt} π(dr)` with `r > ε`, each then
/// evolving as an independent CSBP.
#[derive(Debug)]
pub struct FvPoissonSimulator {
    sim: PathSimulator,
    table: JumpTable,
    drift: f64,
    eps: f64,
    cfg: PathConfig,
}

impl FvPoissonSimulator {
    pub fn new(mech: &BranchingMechanism, eps: f64, cfg: &PathConfig) -> Result<Self> {
        let report = classify(mech)?;
        let drift = report.drift.ok_or_else(|| {
            Error::Unsupported("the Poisson decomposition with dust needs finite variation".into())
        })?;
        if !(eps > 0.0) {
            return Err(Error::Precondition(format!("mass cutoff must be positive, got {eps}")));
        }
        Ok(FvPoissonSimulator {
            sim: PathSimulator::new(mech, cfg)?,
            table: JumpTable::new(mech, eps)?,
            drift,
            eps,
            cfg: cfg.clone(),
        })
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// `∫_0^T e^{-Dt} dt`, read as `T` when `D = 0`.
    pub fn birth_weight(&self, horizon: f64) -> f64 {
        if self.drift == 0.0 {
            horizon
        } else {
            -(-self.drift * horizon).exp_m1() / self.drift
        }
    }

    /// Mean number of atoms up to the horizon.
    pub fn mean_atoms(&self, x: f64) -> f64 {
        x * self.table.rate() * self.birth_weight(self.cfg.horizon)
    }

    /// Bound on the change in `E e^{-λ Z_t}` from dropping atoms below ε:
    /// `x t λ ∫_{(0,ε]} r π(dr)`.
    pub fn truncation_bias(&self, mech: &BranchingMechanism, x: f64, t: f64, lambda: f64) -> Result<f64> {
        Ok(x * t * lambda * mech.moment(1, 0.0, self.eps)?)
    }

    pub fn run<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<Trajectory> {
        check_x(x)?;
        let times = self.cfg.grid();
        let horizon = self.cfg.horizon;
        let n = poisson(self.mean_atoms(x), rng);
        let d = self.drift;
        let tracks: Vec<Track> = (0..n)
            .map(|_| {
                let location = rng.random::<f64>() * x;
                let u: f64 = rng.random();
                let birth = if d == 0.0 {
                    u * horizon
                } else {
                    -(u * (-d * horizon).exp_m1()).ln_1p() / d
                };
                let r = self.table.sample(rng);
                track(&self.sim, location, r, birth.min(horizon), &times, false, rng)
            })
            .collect();
        Ok(assemble(x, &times, |t| (-d * t).exp(), &tracks, false, false))
    }
}

pub fn simulate_fv_poisson<R: Rng + ?Sized>(
    mech: &BranchingMechanism,
    x: f64,
    eps: f64,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    FvPoissonSimulator::new(mech, eps, cfg)?.run(x, rng)
}

/// Clusters alive at `s0` with mass above ε, from the closed-form entrance law of
/// `Ψ(λ) = αλ + βλ²`: `ν_{s0}(dr) = (a/b²) e^{-r/b} dr`.
#[derive(Debug)]
pub struct ClusterSimulator {
    sim: PathSimulator,
    a: f64,
    b: f64,
    s0: f64,
    eps: f64,
    cfg: PathConfig,
}

impl ClusterSimulator {
    pub fn new(mech: &BranchingMechanism, s0: f64, eps: f64, cfg: &PathConfig) -> Result<Self> {
        if !mech.levy().is_empty() || mech.beta() <= 0.0 {
            return Err(Error::Unsupported(
                "cluster sampling needs the closed-form entrance law of Ψ = αλ + βλ²".into(),
            ));
        }
        if !(s0 > 0.0 && eps > 0.0) {
            return Err(Error::Precondition(format!(
                "warm-up time and cutoff must be positive, got s0={s0}, eps={eps}"
            )));
        }
        if s0 >= cfg.horizon {
            return Err(Error::Precondition("warm-up time must precede the horizon".into()));
        }
        let (a, b) = crate::paths::exact::quadratic_coefficients(mech.alpha(), mech.beta(), s0);
        Ok(ClusterSimulator {
            sim: PathSimulator::new(mech, cfg)?,
            a,
            b,
            s0,
            eps,
            cfg: cfg.clone(),
        })
    }

    /// `ν_{s0}((ε, ∞])`.
    pub fn tail(&self) -> f64 {
        self.a / self.b * (-self.eps / self.b).exp()
    }

    /// Bound on the change in `E e^{-λ Z_t}` from dropping clusters below ε at `s0`:
    /// `x λ_t ∫_0^ε r ν_{s0}(dr)` with `λ_t = u(t - s0, λ) ≤ λ`.
    pub fn truncation_bias(&self, x: f64, lambda: f64) -> f64 {
        let b = self.b;
        let e = self.eps / b;
        // ∫_0^ε r (a/b²) e^{-r/b} dr = a (1 - e^{-e}(1 + e))
        let m1 = self.a * (-(-e).exp_m1() - e * (-e).exp());
        x * lambda * m1
    }

    pub fn times(&self) -> Vec<f64> {
        let mut times = vec![self.s0];
        times.extend(self.cfg.grid().into_iter().filter(|&g| g > self.s0 + 1e-12));
        times
    }

    pub fn run<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<Trajectory> {
        check_x(x)?;
        let times = self.times();
        let n = poisson(x * self.tail(), rng);
        let tracks: Vec<Track> = (0..n)
            .map(|_| {
                let location = rng.random::<f64>() * x;
                let e: f64 = Exp1.sample(rng);
                let r = self.eps + self.b * e;
                track(&self.sim, location, r, self.s0, &times, false, rng)
            })
            .collect();
        Ok(assemble(x, &times, |_| 0.0, &tracks, false, true))
    }
}

pub fn simulate_iv_cluster<R: Rng + ?Sized>(
    mech: &BranchingMechanism,
    x: f64,
    s0: f64,
    eps: f64,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<Trajectory> {
    ClusterSimulator::new(mech, s0, eps, cfg)?.run(x, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::catalog;
    use crate::population::frequency_at;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_block_is_one_atom() {
        let cfg = PathConfig {
            h: 0.25,
            horizon: 1.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traj = simulate_blocks(&catalog::neveu(), 1.0, 1, &cfg, &mut rng).unwrap();
        for s in &traj.snapshots {
            let m = frequency_at(s).unwrap();
            assert_eq!(m.atoms.len(), 1);
            assert_eq!(m.atoms[0].mass, 1.0);
        }
    }

    #[test]
    fn uniform_start() {
        let cfg = PathConfig {
            h: 0.5,
            horizon: 1.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let traj = simulate_blocks(&catalog::feller(), 1.0, 100, &cfg, &mut rng).unwrap();
        let m0 = frequency_at(&traj.snapshots[0]).unwrap();
        assert_eq!(m0.atoms.len(), 100);
        for a in &m0.atoms {
            assert!((a.mass - 0.01).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_dust_when_cutoff_exceeds_atom() {
        let cfg = PathConfig {
            h: 0.5,
            horizon: 2.0,
            ..Default::default()
        };
        let sim = FvPoissonSimulator::new(&catalog::fv_compound_poisson(), 2.0, &cfg).unwrap();
        assert_eq!(sim.mean_atoms(2.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let traj = sim.run(2.0, &mut rng).unwrap();
        let last = traj.terminal();
        assert!(last.atoms.is_empty());
        assert!((last.dust_coefficient - (-4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn expected_atom_count() {
        let cfg = PathConfig {
            h: 1.0,
            horizon: 5.0,
            ..Default::default()
        };
        let sim = FvPoissonSimulator::new(&catalog::fv_compound_poisson(), 0.5, &cfg).unwrap();
        let want = 2.0 * 1.0 * (1.0 - (-10f64).exp()) / 2.0;
        assert!((sim.mean_atoms(2.0) - want).abs() < 1e-15);
        assert!(FvPoissonSimulator::new(&catalog::stable(), 0.5, &cfg).is_err());
    }

    #[test]
    fn cluster_count_mean() {
        let cfg = PathConfig {
            h: 0.5,
            horizon: 2.0,
            ..Default::default()
        };
        let sim = ClusterSimulator::new(&catalog::feller(), 1.0, 1.0, &cfg).unwrap();
        assert!((sim.tail() - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(sim.times(), vec![1.0, 1.5, 2.0]);
        assert!(ClusterSimulator::new(&catalog::stable(), 1.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn feller_blocks_die_with_a_last_atom() {
        let cfg = PathConfig {
            h: 1e6,
            horizon: 1e6,
            ..Default::default()
        };
        let sim = BlockSimulator::new(&catalog::feller(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let traj = sim.run(1.0, 10, &mut rng).unwrap();
            match traj.absorption {
                PopulationAbsorption::Extinct { time, eve } => {
                    assert!(time > 0.0 && time <= 1e6);
                    assert!(eve > 0.0 && eve < 1.0);
                }
                other => panic!("{other:?}"),
            }
        }
    }
}
