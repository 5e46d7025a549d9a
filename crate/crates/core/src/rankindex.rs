//! Counting and indexing full key candidates by weight interval.
//!
//! [`create`] fills the table `B` where `B[i][b]` counts the ways to complete
//! blocks `i..` so that the total weight plus `b` lands in `[b1, b2)`.
//! `B[0][0]` is the interval's candidate count, and [`get_key`] walks the
//! table to turn an index `r` into a unique candidate.
//!
//! Counts are exact. When the product of the list lengths fits in `u128` the
//! table is filled with native integers, otherwise with [`BigUint`].

use std::ops::{AddAssign, SubAssign};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bits::BitString;
use crate::enumeration::CandidateTable;
use crate::error::{Error, Result};

/// Default cap on the number of counters in one table.
pub const DEFAULT_COUNTER_BUDGET: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WeightInterval {
    b1: u64,
    b2: u64,
}

impl WeightInterval {
    pub fn new(b1: u64, b2: u64) -> Result<Self> {
        if b1 >= b2 {
            return Err(Error::InvalidParams(format!("empty weight interval [{b1}, {b2})")));
        }
        Ok(Self { b1, b2 })
    }

    /// Inclusive lower bound.
    pub fn b1(&self) -> u64 {
        self.b1
    }

    /// Exclusive upper bound.
    pub fn b2(&self) -> u64 {
        self.b2
    }

    pub fn contains(&self, weight: u64) -> bool {
        (self.b1..self.b2).contains(&weight)
    }
}

trait Counter: Clone + Ord + Zero + One + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self> {}
impl Counter for u128 {}
impl Counter for BigUint {}

#[derive(Debug, Clone, PartialEq)]
enum Counts {
    Narrow(Vec<u128>),
    Wide(Vec<BigUint>),
}

/// The `blocks x b2` counting table for one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    counts: Counts,
    rows: usize,
    interval: WeightInterval,
}

impl RankMatrix {
    pub fn interval(&self) -> WeightInterval {
        self.interval
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns, equal to `b2`.
    pub fn width(&self) -> usize {
        self.interval.b2 as usize
    }

    /// `B[i][b]`; zero for columns at or beyond `b2`.
    pub fn entry(&self, i: usize, b: u64) -> BigUint {
        if b >= self.interval.b2 {
            return BigUint::zero();
        }
        let at = i * self.width() + b as usize;
        match &self.counts {
            Counts::Narrow(v) => BigUint::from(v[at]),
            Counts::Wide(v) => v[at].clone(),
        }
    }

    /// `B[0][0]`, the number of candidates in the interval.
    pub fn total(&self) -> BigUint {
        self.entry(0, 0)
    }
}

fn fill<C: Counter>(table: &CandidateTable, interval: WeightInterval) -> Vec<C> {
    let lists = table.lists();
    let rows = lists.len();
    let width = interval.b2 as usize;
    let (b1, b2) = (interval.b1, interval.b2);
    let mut m = vec![C::zero(); rows * width];
    let one = C::one();

    let last = rows - 1;
    for b in 0..b2 {
        let cell = &mut m[last * width + b as usize];
        for c in &lists[last] {
            // b1 - b <= s < b2 - b, without going negative.
            if c.weight + b >= b1 && c.weight + b < b2 {
                *cell += &one;
            }
        }
    }
    for i in (0..last).rev() {
        let (head, tail) = m.split_at_mut((i + 1) * width);
        let row = &mut head[i * width..];
        let next = &tail[..width];
        for b in 0..width {
            for c in &lists[i] {
                let t = b as u64 + c.weight;
                if t < b2 {
                    row[b] += &next[t as usize];
                }
            }
        }
    }
    m
}

fn fits_narrow(table: &CandidateTable) -> bool {
    table
        .lists()
        .iter()
        .try_fold(1u128, |acc, l| acc.checked_mul(l.len() as u128))
        .is_some_and(|p| p <= u128::MAX / 2)
}

/// Builds the counting table for `interval` with the default counter budget.
pub fn create(table: &CandidateTable, interval: WeightInterval) -> Result<RankMatrix> {
    create_with_budget(table, interval, DEFAULT_COUNTER_BUDGET)
}

pub fn create_with_budget(table: &CandidateTable, interval: WeightInterval, budget: usize) -> Result<RankMatrix> {
    let rows = table.lists().len();
    let requested = (interval.b2 as u128).saturating_mul(rows as u128);
    if requested > budget as u128 {
        return Err(Error::MemoryBudget {
            requested: requested.min(usize::MAX as u128) as usize,
            budget,
        });
    }
    let counts = if fits_narrow(table) {
        Counts::Narrow(fill::<u128>(table, interval))
    } else {
        Counts::Wide(fill::<BigUint>(table, interval))
    };
    Ok(RankMatrix {
        counts,
        rows,
        interval,
    })
}

/// Number of full candidates with total weight in `interval`.
pub fn rank(table: &CandidateTable, interval: WeightInterval) -> Result<BigUint> {
    Ok(create(table, interval)?.total())
}

fn descend<C: Counter>(table: &CandidateTable, m: &[C], interval: WeightInterval, mut r: C) -> Vec<usize> {
    let lists = table.lists();
    let width = interval.b2 as usize;
    let last = lists.len() - 1;
    let zero = C::zero();
    let at = |i: usize, b: u64| if b < interval.b2 { &m[i * width + b as usize] } else { &zero };

    let mut picks = Vec::with_capacity(lists.len());
    let mut b = 0u64;
    for (i, list) in lists[..last].iter().enumerate() {
        let mut chosen = None;
        for (j, c) in list.iter().enumerate() {
            let completions = at(i + 1, b + c.weight);
            if r <= *completions {
                chosen = Some(j);
                b += c.weight;
                break;
            }
            r -= completions;
        }
        picks.push(chosen.expect("index within B[0][0] always descends"));
    }
    let one = C::one();
    let j = lists[last]
        .iter()
        .position(|c| {
            if interval.contains(c.weight + b) {
                if r <= one {
                    return true;
                }
                r -= &one;
            }
            false
        })
        .expect("index within B[0][0] always descends");
    picks.push(j);
    picks
}

/// List positions of the `r`-th candidate (1-based) in `matrix`'s interval.
pub fn get_indices(table: &CandidateTable, matrix: &RankMatrix, r: &BigUint) -> Result<Option<Vec<usize>>> {
    if r.is_zero() {
        return Err(Error::ZeroIndex);
    }
    if matrix.rows != table.lists().len() {
        return Err(Error::InvalidParams("rank matrix does not match table".into()));
    }
    if *r > matrix.total() {
        return Ok(None);
    }
    let picks = match &matrix.counts {
        Counts::Narrow(m) => descend(table, m, matrix.interval, r.to_u128().expect("r <= total fits")),
        Counts::Wide(m) => descend(table, m, matrix.interval, r.clone()),
    };
    Ok(Some(picks))
}

/// The `r`-th full key candidate (1-based) with weight in the matrix interval,
/// or `None` when `r` exceeds the interval's count.
pub fn get_key(table: &CandidateTable, matrix: &RankMatrix, r: &BigUint) -> Result<Option<BitString>> {
    Ok(get_indices(table, matrix, r)?.map(|idx| table.key_at(&idx)))
}

/// Lowest attainable total weight: the sum of every list head.
pub fn min_weight(table: &CandidateTable) -> u64 {
    table.lists().iter().map(|l| l[0].weight).sum()
}

/// Highest attainable total weight.
pub fn max_weight(table: &CandidateTable) -> u64 {
    table.lists().iter().map(|l| l[l.len() - 1].weight).sum()
}

/// Smallest `b2 > b1` with `rank([b1, b2)) >= target`, or `max_weight + 1`
/// when no such bound exists.
pub fn find_bound(table: &CandidateTable, b1: u64, target: &BigUint) -> Result<u64> {
    let ceiling = (max_weight(table) + 1).max(b1 + 1);
    let count = |b2: u64| rank(table, WeightInterval::new(b1, b2)?);
    if target.is_zero() {
        return Ok(b1 + 1);
    }
    // Gallop upward, then bisect; rank grows monotonically with b2.
    let mut lo = b1;
    let mut hi = b1 + 1;
    loop {
        if count(hi)? >= *target {
            break;
        }
        if hi == ceiling {
            return Ok(ceiling);
        }
        lo = hi;
        hi = (b1 + 2 * (hi - b1)).min(ceiling);
    }
    // rank(lo) < target <= rank(hi), where lo == b1 stands for the empty interval.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if count(mid)? >= *target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
