//! Real-coded genetic algorithm over a bounded box.
//!
//! Tournament selection (size 3), blend crossover (BLX-0.5), per-gene
//! Gaussian mutation and one elite carried over unchanged.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{tags, RandomStream};
use super::{evaluate_all, validate_bounds, OptimResult};
use crate::error::{Error, Result};

const TOURNAMENT_SIZE: usize = 3;
const BLEND_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub iterations: usize,
    /// `(low, high)` per gene.
    pub bounds: Vec<(f64, f64)>,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of the gene range.
    pub mutation_sd: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 100,
            iterations: 1000,
            bounds: Vec::new(),
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_sd: 0.1,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::invalid("GA population must be at least 2"));
        }
        validate_bounds(&self.bounds)?;
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("GA {name} must lie in [0, 1]")));
            }
        }
        if !(self.mutation_sd >= 0.0 && self.mutation_sd.is_finite()) {
            return Err(Error::invalid("GA mutation_sd must be non-negative"));
        }
        Ok(())
    }
}

fn tournament(costs: &[f64], rng: &mut impl Rng) -> usize {
    let mut best = rng.random_range(0..costs.len());
    for _ in 1..TOURNAMENT_SIZE {
        let c = rng.random_range(0..costs.len());
        if costs[c] < costs[best] {
            best = c;
        }
    }
    best
}

fn breed(population: &[Vec<f64>], costs: &[f64], cfg: &GaConfig, stream: RandomStream) -> Vec<f64> {
    let mut rng = stream.into_rng();
    let a = &population[tournament(costs, &mut rng)];
    let b = &population[tournament(costs, &mut rng)];
    let crossover = rng.random::<f64>() < cfg.crossover_rate;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    cfg.bounds
        .iter()
        .enumerate()
        .map(|(g, &(lo, hi))| {
            let mut gene = if crossover {
                let (min, max) = (a[g].min(b[g]), a[g].max(b[g]));
                let spread = BLEND_ALPHA * (max - min);
                let (l, h) = (min - spread, max + spread);
                if h > l {
                    rng.random_range(l..h)
                } else {
                    l
                }
            } else {
                a[g]
            };
            if rng.random::<f64>() < cfg.mutation_rate {
                gene += unit.sample(&mut rng) * cfg.mutation_sd * (hi - lo);
            }
            gene.clamp(lo, hi)
        })
        .collect()
}

fn argmin(costs: &[f64]) -> usize {
    costs
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c < costs[best] { i } else { best })
}

/// Minimizes `objective` over the box in `cfg.bounds`.
///
/// Non-finite costs mark a candidate as discarded; it never becomes the best
/// point and loses every tournament. The returned history holds the best cost
/// after each generation.
pub fn ga_minimize<F>(objective: F, cfg: &GaConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let mut population: Vec<Vec<f64>> = (0..cfg.population)
        .map(|i| {
            let mut rng = RandomStream::derive(cfg.seed, &[tags::GA, 0, i as u64]).into_rng();
            cfg.bounds
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect()
        })
        .collect();
    let mut costs = evaluate_all(&objective, &population);
    if costs.iter().all(|c| c.is_infinite()) {
        return Err(Error::AllCandidatesNonFinite);
    }

    let mut history = Vec::with_capacity(cfg.iterations);
    for generation in 1..=cfg.iterations {
        let elite = argmin(&costs);
        let children: Vec<Vec<f64>> = (1..cfg.population)
            .into_par_iter()
            .map(|i| {
                let stream =
                    RandomStream::derive(cfg.seed, &[tags::GA, generation as u64, i as u64]);
                breed(&population, &costs, cfg, stream)
            })
            .collect();
        let child_costs = evaluate_all(&objective, &children);

        let mut next = Vec::with_capacity(cfg.population);
        let mut next_costs = Vec::with_capacity(cfg.population);
        next.push(population[elite].clone());
        next_costs.push(costs[elite]);
        next.extend(children);
        next_costs.extend(child_costs);
        population = next;
        costs = next_costs;
        history.push(costs[argmin(&costs)]);
    }

    let best = argmin(&costs);
    Ok(OptimResult {
        best_point: population[best].clone(),
        best_cost: costs[best],
        history,
    })
}
