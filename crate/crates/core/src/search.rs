//! Key search over weight intervals: classical enumeration and the hybrid
//! interval-by-interval search with a Grover back end.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bits::BitString;
use crate::channel::ChannelParams;
use crate::costs::GateCounts;
use crate::enumeration::{generate_candidates, CandidateTable, EnumerationParams};
use crate::error::{Error, Result};
use crate::grover::{self, Backend, GroverConfig, DEFAULT_SPACE_CAP};
use crate::lowmc::LowMc;
use crate::rankindex::{create, find_bound, get_key, min_weight, RankMatrix, WeightInterval};
use crate::seed;

/// Retries of a Grover run on an interval known to hold a solution.
pub const DEFAULT_MAX_RETRIES: u32 = 10;

/// Accepts a key iff it encrypts every known plaintext to its ciphertext.
///
/// Candidate keys may be longer than the cipher key; the extra bits must be
/// zero.
#[derive(Debug, Clone)]
pub struct TestOracle {
    cipher: LowMc,
    pairs: Vec<(BitString, BitString)>,
}

impl TestOracle {
    pub fn new(cipher: LowMc, plaintext: BitString, ciphertext: BitString) -> Result<Self> {
        Self::with_pairs(cipher, vec![(plaintext, ciphertext)])
    }

    pub fn with_pairs(cipher: LowMc, pairs: Vec<(BitString, BitString)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParams("oracle needs at least one pair".into()));
        }
        let n = cipher.params().block_bits;
        for (m, c) in &pairs {
            m.check_len(n)?;
            c.check_len(n)?;
        }
        Ok(Self { cipher, pairs })
    }

    pub fn key_bits(&self) -> usize {
        self.cipher.params().key_bits
    }

    pub fn test(&self, key: &BitString) -> bool {
        let k = self.key_bits();
        if key.len() < k || key.ones_from(k) != 0 {
            return false;
        }
        let key = key.resized(k);
        self.pairs
            .iter()
            .all(|(m, c)| self.cipher.encrypt(&key, m).is_ok_and(|x| &x == c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchPlan {
    /// Candidates the whole search window should hold.
    #[serde(serialize_with = "ser_big")]
    pub target: BigUint,
    pub backend: Backend,
    pub enumeration: EnumerationParams,
    pub channel: ChannelParams,
    pub precision: f64,
    /// Seed of the Grover measurement streams.
    pub seed: u64,
    pub space_cap: usize,
    pub max_retries: u32,
}

fn ser_big<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl SearchPlan {
    pub fn new(
        target: BigUint,
        backend: Backend,
        enumeration: EnumerationParams,
        channel: ChannelParams,
        precision: f64,
    ) -> Self {
        Self {
            target,
            backend,
            enumeration,
            channel,
            precision,
            seed: 0,
            space_cap: DEFAULT_SPACE_CAP,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }

    /// Plan whose window holds about `2^e` candidates.
    pub fn with_exponent(
        e: u32,
        backend: Backend,
        enumeration: EnumerationParams,
        channel: ChannelParams,
        precision: f64,
    ) -> Self {
        Self::new(BigUint::one() << e, backend, enumeration, channel, precision)
    }
}

/// Result of [`key_search_classical`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalOutcome {
    pub key: Option<BitString>,
    /// 1-based position of the key within the interval.
    pub index: Option<u64>,
    pub oracle_calls: u64,
}

fn classical_scan(table: &CandidateTable, matrix: &RankMatrix, oracle: &TestOracle) -> Result<ClassicalOutcome> {
    let mut r = BigUint::one();
    let mut calls = 0u64;
    while let Some(key) = get_key(table, matrix, &r)? {
        calls += 1;
        if oracle.test(&key) {
            return Ok(ClassicalOutcome {
                key: Some(key),
                index: r.to_u64(),
                oracle_calls: calls,
            });
        }
        r += 1u32;
    }
    Ok(ClassicalOutcome {
        key: None,
        index: None,
        oracle_calls: calls,
    })
}

/// Tests every candidate with weight in `interval` in index order and returns
/// the first one the oracle accepts.
pub fn key_search_classical(
    noisy: &BitString,
    interval: WeightInterval,
    params: &EnumerationParams,
    channel: &ChannelParams,
    precision: f64,
    oracle: &TestOracle,
) -> Result<ClassicalOutcome> {
    let table = generate_candidates(noisy, params, channel, precision)?;
    let matrix = create(&table, interval)?;
    classical_scan(&table, &matrix, oracle)
}

/// Walks the consecutive sub-intervals `[b1, b2)` of `[b_min, b_e)`, the
/// `s`-th holding about `2^s` candidates.
#[derive(Debug)]
pub struct SubIntervals<'a> {
    table: &'a CandidateTable,
    b1: u64,
    b2: u64,
    b_e: u64,
    s: u32,
}

impl<'a> SubIntervals<'a> {
    pub fn new(table: &'a CandidateTable, b_min: u64, b_e: u64) -> Self {
        Self {
            table,
            b1: b_min,
            b2: b_min + 1,
            b_e,
            s: 0,
        }
    }
}

impl Iterator for SubIntervals<'_> {
    type Item = Result<(u32, WeightInterval)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.b1 >= self.b_e {
            return None;
        }
        let b2 = self.b2.min(self.b_e);
        let item = (self.s, WeightInterval::new(self.b1, b2).expect("b1 < b2"));
        self.s += 1;
        self.b1 = b2;
        if self.b1 < self.b_e {
            match find_bound(self.table, self.b1, &(BigUint::one() << self.s)) {
                Ok(b) => self.b2 = b,
                Err(e) => {
                    self.b1 = self.b_e;
                    return Some(Err(e));
                }
            }
        }
        Some(Ok(item))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalReport {
    pub s: u32,
    pub b1: u64,
    pub b2: u64,
    /// `B[0][0]` for the interval, saturated at `u128::MAX`.
    pub candidates: u128,
    /// Oracle queries charged on this interval.
    pub queries: u64,
    /// Classical predicate evaluations outside the charged queries.
    pub prescan_evaluations: u64,
    pub retries: u32,
    pub found_index: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeySearchOutcome {
    pub key: Option<BitString>,
    pub backend: Backend,
    pub b_min: u64,
    pub b_e: u64,
    pub oracle_queries: u64,
    pub prescan_evaluations: u64,
    pub intervals: Vec<IntervalReport>,
}

fn saturate(v: &BigUint) -> u128 {
    v.to_u128().unwrap_or(u128::MAX)
}

/// Interval-by-interval search for the key over the window `[B_min, B_e)`.
///
/// `B_e` is the smallest bound whose window holds at least `plan.target`
/// candidates. The backend decides how each interval is searched: a
/// classical scan, a simulated Grover search over the index space, or a
/// classical scan charged at the Grover query count.
pub fn qks(noisy: &BitString, plan: &SearchPlan, oracle: &TestOracle) -> Result<KeySearchOutcome> {
    let table = generate_candidates(noisy, &plan.enumeration, &plan.channel, plan.precision)?;
    qks_on_table(&table, plan, oracle)
}

/// [`qks`] on a prebuilt table.
pub fn qks_on_table(table: &CandidateTable, plan: &SearchPlan, oracle: &TestOracle) -> Result<KeySearchOutcome> {
    let b_min = min_weight(table);
    let b_e = find_bound(table, b_min, &plan.target)?;
    let mut out = KeySearchOutcome {
        key: None,
        backend: plan.backend,
        b_min,
        b_e,
        oracle_queries: 0,
        prescan_evaluations: 0,
        intervals: Vec::new(),
    };
    for item in SubIntervals::new(table, b_min, b_e) {
        let (s, interval) = item?;
        let matrix = create(table, interval)?;
        let total = matrix.total();
        let mut report = IntervalReport {
            s,
            b1: interval.b1(),
            b2: interval.b2(),
            candidates: saturate(&total),
            queries: 0,
            prescan_evaluations: 0,
            retries: 0,
            found_index: None,
        };
        if !total.is_zero() {
            let key = match plan.backend {
                Backend::Classical => {
                    let scan = classical_scan(table, &matrix, oracle)?;
                    report.queries = scan.oracle_calls;
                    report.found_index = scan.index;
                    scan.key
                }
                Backend::CostOnly => {
                    let scan = classical_scan(table, &matrix, oracle)?;
                    report.prescan_evaluations = scan.oracle_calls;
                    report.queries = grover::iteration_count(report.candidates.min(u64::MAX as u128) as u64, 1)?;
                    report.found_index = scan.index;
                    scan.key
                }
                Backend::GroverSim => grover_interval(table, &matrix, plan, oracle, s, &mut report)?,
            };
            out.oracle_queries += report.queries;
            out.prescan_evaluations += report.prescan_evaluations;
            if key.is_some() {
                out.key = key;
                out.intervals.push(report);
                return Ok(out);
            }
        }
        out.intervals.push(report);
    }
    Ok(out)
}

fn grover_interval(
    table: &CandidateTable,
    matrix: &RankMatrix,
    plan: &SearchPlan,
    oracle: &TestOracle,
    s: u32,
    report: &mut IntervalReport,
) -> Result<Option<BitString>> {
    let too_large = |size: u128| Error::SpaceTooLarge {
        size,
        cap: plan.space_cap,
        interval: Some(s),
    };
    let size = report.candidates;
    if size.next_power_of_two() > plan.space_cap as u128 {
        return Err(too_large(size));
    }
    let size = size as u64;
    let key_at = |r: u64| get_key(table, matrix, &BigUint::from(r)).map(|k| k.expect("r within B[0][0]"));
    let mut mask = Vec::with_capacity(size as usize);
    for r in 1..=size {
        mask.push(oracle.test(&key_at(r)?));
    }
    report.prescan_evaluations = size;

    for attempt in 0..=plan.max_retries {
        let mut cfg = GroverConfig::new(size, seed::derive(plan.seed, s as u64, attempt as u64));
        cfg.cap = plan.space_cap;
        let run = grover::simulate(|r| mask[(r - 1) as usize], &cfg).map_err(|e| match e {
            Error::SpaceTooLarge { size, .. } => too_large(size),
            e => e,
        })?;
        report.queries += run.oracle_queries;
        if let Some(r) = run.found {
            report.found_index = Some(r);
            return Ok(Some(key_at(r)?));
        }
        if run.marked == 0 || attempt == plan.max_retries {
            break;
        }
        report.retries += 1;
    }
    Ok(None)
}

/// Query and gate accounting for searching a whole window without an oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowCost {
    pub b_min: u64,
    pub b_e: u64,
    /// `(s, b1, b2, candidates, queries)` per sub-interval.
    pub intervals: Vec<(u32, u64, u64, u128, u64)>,
    /// Sum of per-interval Grover iteration counts.
    pub total_queries: u64,
    /// `pi/4 * sqrt(window size)`, the single-interval charge.
    pub single_window_queries: f64,
    /// `pi/4 * 2^(S/2) * sqrt(2) / (sqrt(2) - 1)` for the last index `S`.
    pub geometric_estimate: f64,
    pub gates: Option<GateCounts>,
}

/// Charges one Grover run per non-empty sub-interval of `[B_min, B_e)`.
pub fn window_cost(table: &CandidateTable, target: &BigUint, per_query: Option<&GateCounts>) -> Result<WindowCost> {
    let b_min = min_weight(table);
    let b_e = find_bound(table, b_min, target)?;
    let mut intervals = Vec::new();
    let mut total_queries = 0u64;
    let mut window = 0u128;
    for item in SubIntervals::new(table, b_min, b_e) {
        let (s, iv) = item?;
        let size = saturate(&create(table, iv)?.total());
        let q = if size == 0 {
            0
        } else {
            grover::iteration_count(size.min(u64::MAX as u128) as u64, 1)?
        };
        total_queries += q;
        window = window.saturating_add(size);
        intervals.push((s, iv.b1(), iv.b2(), size, q));
    }
    let last = intervals.last().map_or(0, |i| i.0) as f64;
    let sqrt2 = std::f64::consts::SQRT_2;
    Ok(WindowCost {
        b_min,
        b_e,
        intervals,
        total_queries,
        single_window_queries: std::f64::consts::FRAC_PI_4 * (window as f64).sqrt(),
        geometric_estimate: std::f64::consts::FRAC_PI_4 * 2f64.powf(last / 2.0) * sqrt2 / (sqrt2 - 1.0),
        gates: per_query.map(|g| g.times(total_queries)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::perturb;
    use crate::lowmc::{random_bits, LowMcParams};
    use crate::rankindex::rank;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Setup {
        key: BitString,
        oracle: TestOracle,
        params: EnumerationParams,
        channel: ChannelParams,
    }

    fn setup(seed: u64) -> Setup {
        let cipher = LowMc::instantiate(LowMcParams::new(16, 16, 3, 4, 99).unwrap());
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let key = random_bits(16, &mut rng);
        let m1 = random_bits(16, &mut rng);
        let m2 = random_bits(16, &mut rng);
        let c1 = cipher.encrypt(&key, &m1).unwrap();
        let c2 = cipher.encrypt(&key, &m2).unwrap();
        Setup {
            key,
            oracle: TestOracle::with_pairs(cipher, vec![(m1, c1), (m2, c2)]).unwrap(),
            params: EnumerationParams::new(16, 4, 2, 16).unwrap(),
            channel: ChannelParams::new(0.001, 0.05).unwrap(),
        }
    }

    #[test]
    fn oracle_rejects_padding_bits() {
        let s = setup(1);
        assert!(s.oracle.test(&s.key));
        let mut padded = s.key.resized(24);
        assert!(s.oracle.test(&padded));
        padded.set(20, true);
        assert!(!s.oracle.test(&padded));
        assert!(!s.oracle.test(&s.key.resized(15)));
    }

    #[test]
    fn classical_top_candidate() {
        let s = setup(2);
        let table = generate_candidates(&s.key, &s.params, &s.channel, 100.0).unwrap();
        let b = min_weight(&table);
        let out = key_search_classical(
            &s.key,
            WeightInterval::new(b, b + 1).unwrap(),
            &s.params,
            &s.channel,
            100.0,
            &s.oracle,
        )
        .unwrap();
        assert_eq!(out.key.as_ref(), Some(&s.key));
        assert_eq!((out.index, out.oracle_calls), (Some(1), 1));
    }

    #[test]
    fn classical_interval_excluding_key() {
        let s = setup(3);
        let table = generate_candidates(&s.key, &s.params, &s.channel, 100.0).unwrap();
        let b = min_weight(&table);
        let iv = WeightInterval::new(b + 1, b + 2000).unwrap();
        let out = key_search_classical(&s.key, iv, &s.params, &s.channel, 100.0, &s.oracle).unwrap();
        assert_eq!(out.key, None);
        assert_eq!(BigUint::from(out.oracle_calls), rank(&table, iv).unwrap());
    }

    #[test]
    fn noiseless_key_found_first_under_every_backend() {
        let s = setup(4);
        for backend in [Backend::Classical, Backend::GroverSim, Backend::CostOnly] {
            let plan = SearchPlan::with_exponent(12, backend, s.params, s.channel, 100.0);
            let out = qks(&s.key, &plan, &s.oracle).unwrap();
            assert_eq!(out.key.as_ref(), Some(&s.key), "{backend:?}");
            assert_eq!(out.intervals.len(), 1);
            assert_eq!(out.oracle_queries, 1);
        }
    }

    #[test]
    fn sub_intervals_partition_the_window() {
        let s = setup(5);
        let noisy = perturb(&s.key, &ChannelParams::new(0.05, 0.2).unwrap(), 5);
        let table = generate_candidates(&noisy, &s.params, &s.channel, 100.0).unwrap();
        let b_min = min_weight(&table);
        let b_e = find_bound(&table, b_min, &BigUint::from(200u32)).unwrap();
        let ivs: Vec<_> = SubIntervals::new(&table, b_min, b_e).map(|x| x.unwrap()).collect();
        assert_eq!(ivs[0].1.b1(), b_min);
        assert_eq!(ivs.last().unwrap().1.b2(), b_e);
        for pair in ivs.windows(2) {
            assert_eq!(pair[0].1.b2(), pair[1].1.b1());
            assert_eq!(pair[0].0 + 1, pair[1].0);
        }
    }

    #[test]
    fn grover_cap_names_the_interval() {
        let s = setup(6);
        let noisy = perturb(&s.key, &ChannelParams::new(0.2, 0.2).unwrap(), 6);
        let mut plan = SearchPlan::with_exponent(12, Backend::GroverSim, s.params, s.channel, 100.0);
        plan.space_cap = 2;
        let table = generate_candidates(&noisy, &s.params, &s.channel, 100.0).unwrap();
        let wrong = TestOracle::new(
            LowMc::instantiate(LowMcParams::new(16, 16, 3, 4, 1).unwrap()),
            BitString::zeros(16),
            BitString::from_u64(1, 16),
        )
        .unwrap();
        match qks_on_table(&table, &plan, &wrong) {
            Err(Error::SpaceTooLarge { interval: Some(s), .. }) => assert!(s >= 1),
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn window_cost_sums_interval_charges() {
        let s = setup(7);
        let noisy = perturb(&s.key, &ChannelParams::new(0.05, 0.2).unwrap(), 7);
        let table = generate_candidates(&noisy, &s.params, &s.channel, 100.0).unwrap();
        let g = GateCounts::new(3, 2, 1);
        let wc = window_cost(&table, &BigUint::from(100u32), Some(&g)).unwrap();
        let sum: u64 = wc.intervals.iter().map(|i| i.4).sum();
        assert_eq!(sum, wc.total_queries);
        assert_eq!(wc.gates, Some(g.times(sum)));
        let window: u128 = wc.intervals.iter().map(|i| i.3).sum();
        assert!(window >= 100);
    }
}
