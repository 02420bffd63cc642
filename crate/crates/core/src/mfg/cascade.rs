//! Best-response dynamics among `N` discrete agents.
//!
//! Agents obfuscate at `M` or not at all. Each one reacts to the root mean
//! variance of everybody else; indifferent agents keep what they had.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{best_response, ResponseKind};
use crate::model::GameParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Schedule {
    /// Every agent responds to the previous round's state.
    Synchronous,
    /// Agents respond one at a time in a fresh random order each round.
    #[default]
    Asynchronous,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CascadeError {
    #[error("seed fraction must lie in [0, 1] (got {0})")]
    SeedFraction(f64),
    #[error("max_rounds must be at least 1")]
    NoRounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeTrace {
    /// Adoption state per round; index 0 is the seeded initial state.
    pub rounds: Vec<Vec<bool>>,
    pub adoption_fraction: Vec<f64>,
    pub converged: bool,
    pub final_mean_variance: f64,
    /// Obfuscation level of an adopting agent.
    pub m: f64,
}

impl CascadeTrace {
    /// `σ_S` of every agent after `round`.
    pub fn sigmas(&self, round: usize) -> Vec<f64> {
        self.rounds[round]
            .iter()
            .map(|&on| if on { self.m } else { 0.0 })
            .collect()
    }

    pub fn final_state(&self) -> &[bool] {
        self.rounds
            .last()
            .expect("trace always holds the initial state")
    }

    /// Number of update passes performed.
    pub fn passes(&self) -> usize {
        self.rounds.len() - 1
    }
}

struct Population<'a> {
    params: &'a GameParams,
    // adoption decision indexed by the number of other adopters
    response_by_others: Vec<ResponseKind>,
}

impl<'a> Population<'a> {
    fn new(params: &'a GameParams, sigma_l: f64) -> Self {
        let n = params.n;
        let m2 = params.m * params.m;
        let response_by_others = (0..n)
            .map(|others| {
                let mean_var = if n > 1 {
                    m2 * others as f64 / (n - 1) as f64
                } else {
                    0.0
                };
                best_response(params, sigma_l, mean_var.sqrt()).kind
            })
            .collect();
        Self {
            params,
            response_by_others,
        }
    }

    fn respond(&self, current: bool, other_adopters: usize) -> bool {
        match self.response_by_others[other_adopters] {
            ResponseKind::Zero => false,
            ResponseKind::Max => true,
            ResponseKind::Indifferent => current,
        }
    }
}

pub fn cascade_simulate(
    params: &GameParams,
    sigma_l: f64,
    seed_fraction: f64,
    schedule: Schedule,
    rng_seed: u64,
    max_rounds: usize,
) -> Result<CascadeTrace, CascadeError> {
    if !(0.0..=1.0).contains(&seed_fraction) {
        return Err(CascadeError::SeedFraction(seed_fraction));
    }
    if max_rounds == 0 {
        return Err(CascadeError::NoRounds);
    }
    let n = params.n;
    let population = Population::new(params, sigma_l);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    // ⌈f·N⌉ with a guard against representation error in f·N
    let seeded = ((seed_fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n);
    let mut state: Vec<bool> = (0..n).map(|i| i < seeded).collect();
    let mut adopters = seeded;

    let mut rounds = vec![state.clone()];
    let mut adoption_fraction = vec![adopters as f64 / n as f64];
    let mut converged = false;
    let mut order: Vec<usize> = (0..n).collect();

    for _ in 0..max_rounds {
        match schedule {
            Schedule::Synchronous => {
                let next: Vec<bool> = state
                    .iter()
                    .map(|&on| population.respond(on, adopters - on as usize))
                    .collect();
                adopters = next.iter().filter(|&&on| on).count();
                state = next;
            }
            Schedule::Asynchronous => {
                order.shuffle(&mut rng);
                for &i in &order {
                    let on = state[i];
                    let next = population.respond(on, adopters - on as usize);
                    if next != on {
                        state[i] = next;
                        if next {
                            adopters += 1;
                        } else {
                            adopters -= 1;
                        }
                    }
                }
            }
        }
        let unchanged = rounds.last().is_some_and(|prev| *prev == state);
        rounds.push(state.clone());
        adoption_fraction.push(adopters as f64 / n as f64);
        if unchanged {
            converged = true;
            break;
        }
    }

    let m = population.params.m;
    Ok(CascadeTrace {
        rounds,
        adoption_fraction,
        converged,
        final_mean_variance: m * m * adopters as f64 / n as f64,
        m,
    })
}
