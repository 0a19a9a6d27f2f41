//! Global-best particle swarm optimization over a bounded box.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::{tags, RandomStream};
use super::{evaluate_all, validate_bounds, OptimResult};
use crate::error::{check_dim, Error, Result};

/// Inertia weight used when a config does not set one.
pub const DEFAULT_INERTIA: f64 = 0.729;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub population: usize,
    pub iterations: usize,
    /// Cognitive (personal best) acceleration.
    pub c1: f64,
    /// Social (global best) acceleration.
    pub c2: f64,
    pub inertia: f64,
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            population: 50,
            iterations: 1000,
            c1: 1.0,
            c2: 2.0,
            inertia: DEFAULT_INERTIA,
            bounds: Vec::new(),
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::invalid("PSO population must be at least 2"));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err(Error::invalid(
                "PSO acceleration coefficients must be non-negative",
            ));
        }
        if !self.inertia.is_finite() {
            return Err(Error::invalid("PSO inertia must be finite"));
        }
        validate_bounds(&self.bounds)
    }
}

/// Swarm state: positions, velocities, personal and global bests.
#[derive(Debug, Clone)]
pub struct Swarm {
    positions: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    best_positions: Vec<Vec<f64>>,
    best_costs: Vec<f64>,
    global_best: Vec<f64>,
    global_cost: f64,
}

impl Swarm {
    /// Builds a swarm from explicit particle states and evaluates them.
    pub fn from_state<F>(
        objective: &F,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        check_dim(positions.len(), velocities.len())?;
        if positions.is_empty() {
            return Err(Error::invalid("swarm needs at least one particle"));
        }
        let dim = positions[0].len();
        for (p, v) in positions.iter().zip(&velocities) {
            check_dim(dim, p.len())?;
            check_dim(dim, v.len())?;
        }
        let costs = evaluate_all(objective, &positions);
        let best = costs
            .iter()
            .enumerate()
            .fold(0, |b, (i, &c)| if c < costs[b] { i } else { b });
        if costs[best].is_infinite() {
            return Err(Error::AllCandidatesNonFinite);
        }
        Ok(Swarm {
            global_best: positions[best].clone(),
            global_cost: costs[best],
            best_positions: positions.clone(),
            best_costs: costs,
            positions,
            velocities,
        })
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn best(&self) -> (&[f64], f64) {
        (&self.global_best, self.global_cost)
    }

    /// Advances every particle once. `iteration` keys the random streams.
    pub fn step<F>(&mut self, objective: &F, cfg: &PsoConfig, iteration: usize)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        for (i, (x, v)) in self
            .positions
            .iter_mut()
            .zip(self.velocities.iter_mut())
            .enumerate()
        {
            let mut rng =
                RandomStream::derive(cfg.seed, &[tags::PSO, iteration as u64, i as u64]).into_rng();
            let pbest = &self.best_positions[i];
            for d in 0..x.len() {
                let (lo, hi) = cfg.bounds[d];
                let span = hi - lo;
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let vel = cfg.inertia * v[d]
                    + cfg.c1 * r1 * (pbest[d] - x[d])
                    + cfg.c2 * r2 * (self.global_best[d] - x[d]);
                v[d] = vel.clamp(-span, span);
                let moved = x[d] + v[d];
                if moved < lo || moved > hi {
                    x[d] = moved.clamp(lo, hi);
                    v[d] = 0.0;
                } else {
                    x[d] = moved;
                }
            }
        }

        let costs = evaluate_all(objective, &self.positions);
        for (i, &c) in costs.iter().enumerate() {
            if c < self.best_costs[i] {
                self.best_costs[i] = c;
                self.best_positions[i].clone_from(&self.positions[i]);
            }
            if c < self.global_cost {
                self.global_cost = c;
                self.global_best.clone_from(&self.positions[i]);
            }
        }
    }
}

/// Minimizes `objective` with uniformly initialized particles.
pub fn pso_minimize<F>(objective: F, cfg: &PsoConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pso_minimize_seeded(objective, cfg, &[])
}

/// Like [`pso_minimize`], but the first particles start at `seed_points`
/// (clamped into the box); the rest are drawn uniformly.
pub fn pso_minimize_seeded<F>(
    objective: F,
    cfg: &PsoConfig,
    seed_points: &[Vec<f64>],
) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let dim = cfg.bounds.len();
    let mut positions = Vec::with_capacity(cfg.population);
    let mut velocities = Vec::with_capacity(cfg.population);
    for i in 0..cfg.population {
        let mut rng = RandomStream::derive(cfg.seed, &[tags::PSO, 0, i as u64]).into_rng();
        let position: Vec<f64> = match seed_points.get(i) {
            Some(p) => {
                check_dim(dim, p.len())?;
                p.iter()
                    .zip(&cfg.bounds)
                    .map(|(&x, &(lo, hi))| x.clamp(lo, hi))
                    .collect()
            }
            None => cfg
                .bounds
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect(),
        };
        let velocity = cfg
            .bounds
            .iter()
            .map(|&(lo, hi)| 0.1 * (hi - lo) * rng.random_range(-1.0..=1.0))
            .collect();
        positions.push(position);
        velocities.push(velocity);
    }

    let mut swarm = Swarm::from_state(&objective, positions, velocities)?;
    let mut history = Vec::with_capacity(cfg.iterations);
    for it in 1..=cfg.iterations {
        swarm.step(&objective, cfg, it);
        history.push(swarm.global_cost);
    }
    Ok(OptimResult {
        best_point: swarm.global_best,
        best_cost: swarm.global_cost,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn sphere_4d_with_reference_settings() {
        let cfg = PsoConfig {
            bounds: vec![(-5.0, 5.0); 4],
            seed: 17,
            ..PsoConfig::default()
        };
        let res = pso_minimize(sphere, &cfg).unwrap();
        assert!(res.best_cost < 1e-4, "best cost {}", res.best_cost);
        assert_eq!(res.history.len(), 1000);
    }

    #[test]
    fn particle_at_optimum_stays() {
        let cfg = PsoConfig {
            bounds: vec![(-5.0, 5.0); 3],
            ..PsoConfig::default()
        };
        let mut swarm = Swarm::from_state(&sphere, vec![vec![0.0; 3]], vec![vec![0.0; 3]]).unwrap();
        for it in 1..=25 {
            swarm.step(&sphere, &cfg, it);
        }
        assert_eq!(swarm.positions()[0], vec![0.0; 3]);
        assert_eq!(swarm.best().1, 0.0);
    }

    #[test]
    fn history_monotone_bounded_deterministic() {
        let cfg = PsoConfig {
            iterations: 200,
            bounds: vec![(-2.0, 1.0), (0.5, 3.0)],
            seed: 3,
            ..PsoConfig::default()
        };
        let wavy = |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.1 * x[0] * x[1];
        let a = pso_minimize(wavy, &cfg).unwrap();
        let b = pso_minimize(wavy, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
        for (x, (lo, hi)) in a.best_point.iter().zip(&cfg.bounds) {
            assert!(x >= lo && x <= hi);
        }
    }

    #[test]
    fn seeded_particle_is_kept_when_optimal() {
        let cfg = PsoConfig {
            iterations: 5,
            bounds: vec![(-5.0, 5.0); 2],
            ..PsoConfig::default()
        };
        let shifted = |x: &[f64]| (x[0] - 1.5).powi(2) + (x[1] + 0.5).powi(2);
        let res = pso_minimize_seeded(shifted, &cfg, &[vec![1.5, -0.5]]).unwrap();
        assert_eq!(res.best_cost, 0.0);
    }

    #[test]
    fn rejects_negative_acceleration() {
        let cfg = PsoConfig {
            c1: -1.0,
            bounds: vec![(-1.0, 1.0)],
            ..PsoConfig::default()
        };
        assert!(pso_minimize(sphere, &cfg).is_err());
    }
}
