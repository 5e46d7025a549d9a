//! Success-rate experiments over noise and list-size grids.
//!
//! Each trial generates a Picnic-style key pair, decays the secret key through
//! the channel, builds the candidate table and records whether the true key
//! is reachable at all and whether it falls inside the window of the `2^e`
//! best candidates.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{perturb, ChannelParams, DEFAULT_PRECISION};
use crate::enumeration::{generate_candidates, CandidateTable, EnumerationParams};
use crate::error::{Error, Result};
use crate::lowmc::{keygen, LowMc, PicnicParamSet, DEFAULT_ROUNDS};
use crate::rankindex::{find_bound, min_weight, rank, WeightInterval};
use crate::seed;

const TAG_INSTANCE: u64 = 1;
const TAG_KEYGEN: u64 = 2;
const TAG_PERTURB: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub paramset: PicnicParamSet,
    pub alpha: f64,
    pub beta_grid: Vec<f64>,
    pub mu_grid: Vec<usize>,
    pub e_grid: Vec<u32>,
    pub trials: usize,
    pub base_seed: u64,
    pub chunk_bits: usize,
    pub eta: usize,
    pub precision: f64,
    pub rounds: usize,
}

/// `{0.001, 0.01, 0.02, ..., upper}`.
pub fn beta_grid(upper: f64) -> Vec<f64> {
    let steps = (upper * 100.0).round() as u32;
    std::iter::once(0.001).chain((1..=steps).map(|i| i as f64 / 100.0)).collect()
}

impl ExperimentSpec {
    /// Default sweep for a parameter set: chunk width 8, `eta` of 2, 3 or 4
    /// by security level, `mu` in {256, 512, 1024}, `e` in {30, 40, 50},
    /// alpha 0.001 and 100 trials per grid point.
    pub fn for_paramset(paramset: PicnicParamSet) -> Self {
        let (eta, upper) = match paramset.level() {
            1 => (2, 0.4),
            3 => (3, 0.3),
            _ => (4, 0.2),
        };
        Self {
            paramset,
            alpha: 0.001,
            beta_grid: beta_grid(upper),
            mu_grid: vec![256, 512, 1024],
            e_grid: vec![30, 40, 50],
            trials: 100,
            base_seed: 0,
            chunk_bits: 8,
            eta,
            precision: DEFAULT_PRECISION,
            rounds: DEFAULT_ROUNDS,
        }
    }

    /// Key length seen by the enumerator: the state size rounded up to a
    /// whole number of blocks. Bits past `stateSizeBits` are forced zero.
    pub fn key_len(&self) -> usize {
        self.paramset.state_size_bits.next_multiple_of(self.chunk_bits * self.eta)
    }

    pub fn enumeration_params(&self, mu: usize) -> Result<EnumerationParams> {
        EnumerationParams::with_free_bits(
            self.key_len(),
            self.chunk_bits,
            self.eta,
            mu,
            self.paramset.state_size_bits,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParams("at least one trial required".into()));
        }
        if self.beta_grid.is_empty() || self.mu_grid.is_empty() || self.e_grid.is_empty() {
            return Err(Error::InvalidParams("grids must be non-empty".into()));
        }
        for &beta in &self.beta_grid {
            ChannelParams::new(self.alpha, beta)?;
        }
        for &mu in &self.mu_grid {
            self.enumeration_params(mu)?;
        }
        Ok(())
    }

    pub fn cipher(&self) -> LowMc {
        LowMc::instantiate(
            self.paramset
                .lowmc_params(self.rounds, seed::derive(self.base_seed, TAG_INSTANCE, 0)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub beta: f64,
    pub mu: usize,
    /// Every true block value is in its list.
    pub full_enum_recoverable: bool,
    pub within_e: BTreeMap<u32, bool>,
    pub true_key_weight: Option<u64>,
    pub b_min: u64,
    pub b_e: BTreeMap<u32, u64>,
}

/// Whether a key of weight `weight` lies among the first `target` candidates,
/// judged by rank: `rank([b_min, weight)) < target`.
pub fn within_by_rank(table: &CandidateTable, b_min: u64, weight: u64, target: &BigUint) -> Result<bool> {
    if weight <= b_min {
        return Ok(true);
    }
    Ok(rank(table, WeightInterval::new(b_min, weight)?)? < *target)
}

/// One trial at `(beta, mu)`. Keys and decay draws depend only on the base
/// seed and the trial index, so grid points share them.
pub fn run_trial(spec: &ExperimentSpec, cipher: &LowMc, beta: f64, mu: usize, trial: usize) -> Result<TrialRecord> {
    let (table, secret) = trial_table(spec, cipher, beta, mu, trial)?;
    record(spec, &table, &secret, beta, mu, trial)
}

fn trial_table(
    spec: &ExperimentSpec,
    cipher: &LowMc,
    beta: f64,
    mu: usize,
    trial: usize,
) -> Result<(CandidateTable, crate::BitString)> {
    let set = &spec.paramset;
    let channel = ChannelParams::new(spec.alpha, beta)?;
    let params = spec.enumeration_params(mu)?;
    let pair = keygen(set, cipher, seed::derive(spec.base_seed, TAG_KEYGEN, trial as u64))?;
    let noisy = perturb(
        &pair.secret,
        &channel,
        seed::derive(spec.base_seed, TAG_PERTURB, trial as u64),
    )
    .resized(params.key_len);
    let table = generate_candidates(&noisy, &params, &channel, spec.precision)?;
    Ok((table, pair.secret.resized(params.key_len)))
}

fn record(
    spec: &ExperimentSpec,
    table: &CandidateTable,
    secret: &crate::BitString,
    beta: f64,
    mu: usize,
    trial: usize,
) -> Result<TrialRecord> {
    let b_min = min_weight(table);
    let weight = table.weight_of(secret);
    let mut within_e = BTreeMap::new();
    let mut b_e = BTreeMap::new();
    if let Some(w) = weight {
        for &e in &spec.e_grid {
            let bound = find_bound(table, b_min, &(BigUint::one() << e))?;
            b_e.insert(e, bound);
            within_e.insert(e, w < bound);
        }
    } else {
        for &e in &spec.e_grid {
            within_e.insert(e, false);
        }
    }
    Ok(TrialRecord {
        trial,
        beta,
        mu,
        full_enum_recoverable: weight.is_some(),
        within_e,
        true_key_weight: weight,
        b_min,
        b_e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub beta: f64,
    pub mu: usize,
    pub rate_full: f64,
    pub rate_e: BTreeMap<u32, f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<GridRow>,
    pub records: Vec<TrialRecord>,
}

/// Runs every trial of every `(beta, mu)` grid point in parallel.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let cipher = spec.cipher();
    let points: Vec<(f64, usize)> = spec
        .beta_grid
        .iter()
        .flat_map(|&b| spec.mu_grid.iter().map(move |&m| (b, m)))
        .collect();
    let jobs: Vec<(f64, usize, usize)> = points
        .iter()
        .flat_map(|&(b, m)| (0..spec.trials).map(move |t| (b, m, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(b, m, t)| run_trial(spec, &cipher, b, m, t))
        .collect::<Result<Vec<_>>>()?;

    let n = spec.trials as f64;
    let rows = records
        .chunks(spec.trials)
        .zip(&points)
        .map(|(recs, &(beta, mu))| {
            let rate = |f: &dyn Fn(&TrialRecord) -> bool| recs.iter().filter(|r| f(r)).count() as f64 / n;
            GridRow {
                beta,
                mu,
                rate_full: rate(&|r| r.full_enum_recoverable),
                rate_e: spec
                    .e_grid
                    .iter()
                    .map(|&e| (e, rate(&|r| r.within_e[&e])))
                    .collect(),
                trials: spec.trials,
            }
        })
        .collect();
    Ok(ExperimentResult { rows, records })
}

impl ExperimentResult {
    /// `beta,mu,rate_full,rate_e<e>...,trials`, one row per grid point.
    pub fn to_csv(&self, e_grid: &[u32]) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        let mut header = vec!["beta".to_string(), "mu".into(), "rate_full".into()];
        header.extend(e_grid.iter().map(|e| format!("rate_e{e}")));
        header.push("trials".into());
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![row.beta.to_string(), row.mu.to_string(), row.rate_full.to_string()];
            rec.extend(e_grid.iter().map(|e| row.rate_e[e].to_string()));
            rec.push(row.trials.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowmc::paramset;

    fn quick(name: &str) -> ExperimentSpec {
        let mut spec = ExperimentSpec::for_paramset(paramset(name).unwrap());
        spec.trials = 4;
        spec.beta_grid = vec![0.001, 0.1];
        spec.mu_grid = vec![16];
        spec.e_grid = vec![4, 8, 12];
        spec
    }

    #[test]
    fn beta_grids() {
        let g = beta_grid(0.4);
        assert_eq!(g.len(), 41);
        assert_eq!((g[0], g[1], g[40]), (0.001, 0.01, 0.4));
        assert_eq!(beta_grid(0.2).len(), 21);
    }

    #[test]
    fn level_configurations() {
        for (name, len, eta) in [
            ("picnic-L1-FS", 128, 2),
            ("picnic-L1-full", 144, 2),
            ("picnic3-L3", 192, 3),
            ("picnic-L5-UR", 256, 4),
            ("picnic3-L5", 256, 4),
        ] {
            let spec = ExperimentSpec::for_paramset(paramset(name).unwrap());
            assert_eq!((spec.key_len(), spec.eta, spec.chunk_bits), (len, eta, 8), "{name}");
            spec.validate().unwrap();
        }
    }

    #[test]
    fn noiseless_trial_sits_at_minimum() {
        let mut spec = quick("picnic-L1-FS");
        spec.alpha = 1e-9;
        let cipher = spec.cipher();
        let r = run_trial(&spec, &cipher, 1e-9, 16, 0).unwrap();
        assert!(r.full_enum_recoverable);
        assert_eq!(r.true_key_weight, Some(r.b_min));
        assert!(r.within_e.values().all(|&x| x));
    }

    #[test]
    fn full_lists_always_recover() {
        let mut spec = quick("picnic-L1-FS");
        spec.chunk_bits = 4;
        spec.eta = 2;
        let cipher = spec.cipher();
        for t in 0..3 {
            let r = run_trial(&spec, &cipher, 0.3, 256, t).unwrap();
            assert!(r.full_enum_recoverable);
        }
    }

    #[test]
    fn records_are_consistent() {
        let spec = quick("picnic-L1-full");
        let result = run_experiment(&spec).unwrap();
        assert_eq!(result.records.len(), 8);
        for r in &result.records {
            let w: Vec<bool> = r.within_e.values().copied().collect();
            assert!(w.windows(2).all(|p| !p[0] || p[1]), "within_e not monotone");
            if w.iter().any(|&x| x) {
                assert!(r.full_enum_recoverable);
            }
        }
    }

    #[test]
    fn rank_check_agrees_with_threshold() {
        let mut spec = quick("picnic-L1-FS");
        spec.e_grid = vec![1, 3, 6, 10, 16];
        let cipher = spec.cipher();
        let mut seen = [false; 2];
        for t in 0..6 {
            let (table, secret) = trial_table(&spec, &cipher, 0.1, 16, t).unwrap();
            let r = record(&spec, &table, &secret, 0.1, 16, t).unwrap();
            let Some(w) = r.true_key_weight else { continue };
            for (&e, &inside) in &r.within_e {
                let by_rank = within_by_rank(&table, r.b_min, w, &(BigUint::one() << e)).unwrap();
                assert_eq!(inside, by_rank, "trial {t} e={e}");
                seen[inside as usize] = true;
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn csv_is_reproducible() {
        let spec = quick("picnic-L1-FS");
        let a = run_experiment(&spec).unwrap().to_csv(&spec.e_grid).unwrap();
        let b = run_experiment(&spec).unwrap().to_csv(&spec.e_grid).unwrap();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next(), Some("beta,mu,rate_full,rate_e4,rate_e8,rate_e12,trials"));
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = quick("picnic-L1-FS");
        spec.trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = quick("picnic-L1-FS");
        spec.beta_grid = vec![1.5];
        assert!(spec.validate().is_err());
    }
}
