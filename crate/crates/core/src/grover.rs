//! Dense statevector simulation of Grover search over an index space.
//!
//! Indices `1..=space_size` map to basis states `0..space_size`; the space is
//! padded with unmarked states to a power of two. Every operator in the
//! iteration (phase flip on marked states, inversion about the mean) is real,
//! so amplitudes are kept as `f64`.

use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default limit on simulated basis states.
pub const DEFAULT_SPACE_CAP: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Classical,
    GroverSim,
    CostOnly,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Backend::Classical),
            "grover-sim" => Ok(Backend::GroverSim),
            "cost-only" => Ok(Backend::CostOnly),
            _ => Err(Error::Unknown(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroverConfig {
    pub space_size: u64,
    /// Iterations to run; `None` uses [`iteration_count`].
    pub iterations: Option<u64>,
    pub seed: u64,
    pub cap: usize,
}

impl GroverConfig {
    pub fn new(space_size: u64, seed: u64) -> Self {
        Self {
            space_size,
            iterations: None,
            seed,
            cap: DEFAULT_SPACE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    /// Index in `1..=space_size` accepted by the predicate, if measured.
    pub found: Option<u64>,
    pub oracle_queries: u64,
    pub iterations_executed: u64,
    pub backend: Backend,
    /// Predicate evaluations spent on the classical pre-scan that counts
    /// marked states; excluded from `oracle_queries`.
    pub prescan_evaluations: u64,
    pub marked: u64,
    pub padded_size: u64,
    /// Probability of measuring a marked state before sampling.
    pub success_probability: f64,
}

/// `floor(pi/4 * sqrt(space_size / marked))`, at least 1.
pub fn iteration_count(space_size: u64, marked: u64) -> Result<u64> {
    if marked == 0 {
        return Err(Error::NoSolution);
    }
    if marked > space_size {
        return Err(Error::InvalidParams(format!("{marked} marked of {space_size}")));
    }
    let k = (FRAC_PI_4 * (space_size as f64 / marked as f64).sqrt()).floor() as u64;
    Ok(k.max(1))
}

/// `sin^2((2k + 1) theta)` with `theta = asin(sqrt(marked / space_size))`.
pub fn success_probability(space_size: u64, marked: u64, iterations: u64) -> Result<f64> {
    if marked > space_size || space_size == 0 {
        return Err(Error::InvalidParams(format!("{marked} marked of {space_size}")));
    }
    let theta = (marked as f64 / space_size as f64).sqrt().asin();
    Ok(((2 * iterations + 1) as f64 * theta).sin().powi(2))
}

/// Padded size for a space with `marked` solutions: the next power of two of
/// at least `space_size` and `4 * marked`, keeping the per-run success
/// probability of the standard iteration count at or above 3/4.
pub fn padded_size(space_size: u64, marked: u64) -> u64 {
    space_size.max(4 * marked).max(1).next_power_of_two()
}

/// Statevector with a fixed marked set.
#[derive(Debug, Clone)]
pub struct GroverState {
    amplitudes: Vec<f64>,
    marked: Vec<bool>,
    iterations: u64,
}

impl GroverState {
    /// Uniform superposition over `marked.len()` basis states.
    pub fn uniform(marked: Vec<bool>) -> Self {
        let n = marked.len();
        let a = 1.0 / (n as f64).sqrt();
        Self {
            amplitudes: vec![a; n],
            marked,
            iterations: 0,
        }
    }

    /// Phase inversion of marked states followed by inversion about the mean.
    pub fn iterate(&mut self) {
        for (a, &m) in self.amplitudes.iter_mut().zip(&self.marked) {
            if m {
                *a = -*a;
            }
        }
        let mean = self.amplitudes.iter().sum::<f64>() / self.amplitudes.len() as f64;
        for a in &mut self.amplitudes {
            *a = 2.0 * mean - *a;
        }
        self.iterations += 1;
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }

    pub fn marked_probability(&self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.marked)
            .filter(|(_, &m)| m)
            .map(|(a, _)| a * a)
            .sum()
    }

    /// Samples a basis state from the squared amplitudes.
    pub fn measure<R: Rng>(&self, rng: &mut R) -> usize {
        let total: f64 = self.amplitudes.iter().map(|a| a * a).sum();
        let mut u = rng.gen::<f64>() * total;
        for (i, a) in self.amplitudes.iter().enumerate() {
            u -= a * a;
            if u < 0.0 {
                return i;
            }
        }
        self.amplitudes.len() - 1
    }
}

/// Runs Grover search for an index in `1..=space_size` accepted by `predicate`.
///
/// A classical pre-scan counts the marked indices `M` to fix the iteration
/// count. With `M = 0` the circuit still runs for the single-solution count;
/// the state stays uniform and nothing is found.
pub fn simulate<F>(predicate: F, config: &GroverConfig) -> Result<SearchOutcome>
where
    F: Fn(u64) -> bool,
{
    let n = config.space_size;
    if n == 0 {
        return Err(Error::InvalidParams("empty search space".into()));
    }
    let mut marked_mask: Vec<bool> = (1..=n).map(&predicate).collect();
    let marked = marked_mask.iter().filter(|&&m| m).count() as u64;
    let padded = padded_size(n, marked);
    if padded > config.cap as u64 {
        return Err(Error::SpaceTooLarge {
            size: padded as u128,
            cap: config.cap,
            interval: None,
        });
    }
    marked_mask.resize(padded as usize, false);

    let iterations = match config.iterations {
        Some(k) => k,
        None => iteration_count(padded, marked.max(1))?,
    };
    let mut state = GroverState::uniform(marked_mask);
    for _ in 0..iterations {
        state.iterate();
    }
    let p = state.marked_probability();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let x = state.measure(&mut rng) as u64;
    let found = (x < n && predicate(x + 1)).then_some(x + 1);
    Ok(SearchOutcome {
        found,
        oracle_queries: iterations,
        iterations_executed: iterations,
        backend: Backend::GroverSim,
        prescan_evaluations: n,
        marked,
        padded_size: padded,
        success_probability: p,
    })
}
