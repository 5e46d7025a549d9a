//! Chunk candidate lists and optimal key enumeration.
//!
//! A `W`-bit noisy key is cut into `N = W / w` chunks. Every chunk value gets
//! an integer weight from the channel model, and each run of `eta` consecutive
//! chunks is merged into a block whose `mu` lowest-weight combinations form one
//! list of the [`CandidateTable`].

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::bits::BitString;
use crate::channel::{to_weight, ChannelParams, PairCounts};
use crate::error::{Error, Result};

/// Largest supported chunk width; a chunk list holds `2^w` entries.
pub const MAX_CHUNK_BITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnumerationParams {
    /// Total key bits `W`, including forced-zero padding.
    pub key_len: usize,
    /// Chunk width `w`.
    pub chunk_bits: usize,
    /// Chunks per block.
    pub eta: usize,
    /// Candidates kept per block.
    pub mu: usize,
    /// Bits at index `>= free_bits` are known to be zero.
    pub free_bits: usize,
}

impl EnumerationParams {
    pub fn new(key_len: usize, chunk_bits: usize, eta: usize, mu: usize) -> Result<Self> {
        Self::with_free_bits(key_len, chunk_bits, eta, mu, key_len)
    }

    pub fn with_free_bits(
        key_len: usize,
        chunk_bits: usize,
        eta: usize,
        mu: usize,
        free_bits: usize,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if chunk_bits == 0 || chunk_bits > MAX_CHUNK_BITS {
            return bad(format!("chunk width {chunk_bits} outside 1..={MAX_CHUNK_BITS}"));
        }
        if key_len == 0 || !key_len.is_multiple_of(chunk_bits) {
            return bad(format!("chunk width {chunk_bits} does not divide key length {key_len}"));
        }
        let chunks = key_len / chunk_bits;
        if eta == 0 || !chunks.is_multiple_of(eta) {
            return bad(format!("eta {eta} does not divide chunk count {chunks}"));
        }
        if chunk_bits * eta > 64 {
            return bad(format!("block of {} bits exceeds 64", chunk_bits * eta));
        }
        let max_mu = 1u128 << (chunk_bits * eta);
        if mu == 0 || mu as u128 > max_mu {
            return bad(format!("mu {mu} outside 1..=2^{}", chunk_bits * eta));
        }
        if free_bits == 0 || free_bits > key_len {
            return bad(format!("free bits {free_bits} outside 1..={key_len}"));
        }
        Ok(Self {
            key_len,
            chunk_bits,
            eta,
            mu,
            free_bits,
        })
    }

    /// Number of chunks `N`.
    pub fn chunks(&self) -> usize {
        self.key_len / self.chunk_bits
    }

    /// Number of blocks (lists in the table).
    pub fn blocks(&self) -> usize {
        self.chunks() / self.eta
    }

    pub fn block_bits(&self) -> usize {
        self.chunk_bits * self.eta
    }

    /// Mask of forced-zero bits within chunk `i`.
    fn forced_mask(&self, chunk: usize) -> u64 {
        let start = chunk * self.chunk_bits;
        (0..self.chunk_bits)
            .filter(|b| start + b >= self.free_bits)
            .fold(0, |m, b| m | 1 << b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChunkCandidate {
    pub weight: u64,
    pub value: BitString,
}

impl ChunkCandidate {
    /// Canonical order: weight, then value as an unsigned integer.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.weight
            .cmp(&other.weight)
            .then_with(|| self.value.cmp_numeric(&other.value))
    }
}

/// Scores every value of every chunk. List `i` covers key bits `i*w .. (i+1)*w`.
pub fn build_chunk_lists(
    noisy: &BitString,
    params: &EnumerationParams,
    channel: &ChannelParams,
    precision: f64,
) -> Result<Vec<Vec<ChunkCandidate>>> {
    noisy.check_len(params.key_len)?;
    let w = params.chunk_bits;
    (0..params.chunks())
        .map(|i| {
            let observed = noisy.extract(i * w, w).to_u64().expect("chunk fits in u64");
            let forced = params.forced_mask(i);
            let mut list = (0..1u64 << w)
                .filter(|v| v & forced == 0)
                .map(|v| {
                    let score = channel.score_counts(&PairCounts::of_words(v, observed, w as u32));
                    Ok(ChunkCandidate {
                        weight: to_weight(score, precision)?,
                        value: BitString::from_u64(v, w),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            list.sort_by(ChunkCandidate::canonical_cmp);
            Ok(list)
        })
        .collect()
}

/// Optimal key enumeration over the cartesian product of sorted lists.
///
/// Combinations come out in non-decreasing total weight, ties broken by the
/// lexicographic order of the index tuple. The emitted value concatenates the
/// chosen entries with list 0 in the lowest bits.
#[derive(Debug, Clone)]
pub struct Okea {
    lists: Vec<Vec<ChunkCandidate>>,
    frontier: BinaryHeap<Reverse<(u64, Vec<usize>)>>,
    seen: HashSet<Vec<usize>>,
}

impl Okea {
    pub fn new(lists: Vec<Vec<ChunkCandidate>>) -> Result<Self> {
        if lists.is_empty() {
            return Err(Error::InvalidParams("no lists to enumerate".into()));
        }
        for (i, list) in lists.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::EmptyList(i));
            }
            if list.windows(2).any(|p| p[0].weight > p[1].weight) {
                return Err(Error::InvalidParams(format!("list {i} is not sorted by weight")));
            }
        }
        let start = vec![0; lists.len()];
        let weight = lists.iter().map(|l| l[0].weight).sum();
        let mut seen = HashSet::new();
        seen.insert(start.clone());
        let mut frontier = BinaryHeap::new();
        frontier.push(Reverse((weight, start)));
        Ok(Self {
            lists,
            frontier,
            seen,
        })
    }

    /// Pops the next lightest combination, returning its weight and index tuple.
    pub fn next_indices(&mut self) -> Option<(u64, Vec<usize>)> {
        let Reverse((weight, idx)) = self.frontier.pop()?;
        for d in 0..idx.len() {
            if idx[d] + 1 < self.lists[d].len() {
                let mut succ = idx.clone();
                succ[d] += 1;
                if self.seen.insert(succ.clone()) {
                    let w = weight - self.lists[d][idx[d]].weight + self.lists[d][succ[d]].weight;
                    self.frontier.push(Reverse((w, succ)));
                }
            }
        }
        Some((weight, idx))
    }

    pub fn combine(&self, idx: &[usize]) -> BitString {
        BitString::concat(idx.iter().zip(&self.lists).map(|(&j, l)| &l[j].value))
    }
}

impl Iterator for Okea {
    type Item = ChunkCandidate;

    fn next(&mut self) -> Option<ChunkCandidate> {
        let (weight, idx) = self.next_indices()?;
        Some(ChunkCandidate {
            weight,
            value: self.combine(&idx),
        })
    }
}

/// The table of block candidate lists searched by the rank index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateTable {
    lists: Vec<Vec<ChunkCandidate>>,
    params: EnumerationParams,
    channel: ChannelParams,
    precision: f64,
}

impl CandidateTable {
    /// Validates and wraps prebuilt lists.
    pub fn new(
        lists: Vec<Vec<ChunkCandidate>>,
        params: EnumerationParams,
        channel: ChannelParams,
        precision: f64,
    ) -> Result<Self> {
        if lists.len() != params.blocks() {
            return Err(Error::InvalidParams(format!(
                "{} lists for {} blocks",
                lists.len(),
                params.blocks()
            )));
        }
        for (i, list) in lists.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::EmptyList(i));
            }
            if list.len() > params.mu {
                return Err(Error::InvalidParams(format!("list {i} longer than mu")));
            }
            if let Some(c) = list.iter().find(|c| c.value.len() != params.block_bits()) {
                return Err(Error::LengthMismatch {
                    expected: params.block_bits(),
                    actual: c.value.len(),
                });
            }
            if list
                .windows(2)
                .any(|p| p[0].canonical_cmp(&p[1]) != Ordering::Less)
            {
                return Err(Error::InvalidParams(format!(
                    "list {i} not in canonical order or has duplicate values"
                )));
            }
        }
        Ok(Self {
            lists,
            params,
            channel,
            precision,
        })
    }

    pub fn lists(&self) -> &[Vec<ChunkCandidate>] {
        &self.lists
    }

    pub fn params(&self) -> &EnumerationParams {
        &self.params
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.channel
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    /// Total number of full candidates the table can produce.
    pub fn candidate_count(&self) -> num_bigint::BigUint {
        self.lists.iter().map(|l| num_bigint::BigUint::from(l.len())).product()
    }

    /// Position of each block of `key` in its list, if every block is present.
    pub fn positions_of(&self, key: &BitString) -> Option<Vec<usize>> {
        if key.len() != self.params.key_len {
            return None;
        }
        let bb = self.params.block_bits();
        self.lists
            .iter()
            .enumerate()
            .map(|(i, list)| {
                let block = key.extract(i * bb, bb);
                list.iter().position(|c| c.value == block)
            })
            .collect()
    }

    /// Table weight of `key`, if it can be built from the lists.
    pub fn weight_of(&self, key: &BitString) -> Option<u64> {
        let pos = self.positions_of(key)?;
        Some(pos.iter().zip(&self.lists).map(|(&j, l)| l[j].weight).sum())
    }

    /// Full key for a choice of one index per list.
    pub fn key_at(&self, indices: &[usize]) -> BitString {
        BitString::concat(indices.iter().zip(&self.lists).map(|(&j, l)| &l[j].value))
    }

    /// Line-oriented text: a header then `list-index weight hex-value` lines.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = format!(
            "coldboot-candidates W={} w={} eta={} mu={} precision={} alpha={} beta={} free_bits={}\n",
            p.key_len,
            p.chunk_bits,
            p.eta,
            p.mu,
            self.precision,
            self.channel.alpha(),
            self.channel.beta(),
            p.free_bits
        );
        for (i, list) in self.lists.iter().enumerate() {
            for c in list {
                let _ = writeln!(out, "{i} {} {}", c.weight, c.value.to_hex());
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty table".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("coldboot-candidates") {
            return Err(Error::Parse("missing table header".into()));
        }
        let mut get = std::collections::HashMap::new();
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field {f:?}")))?;
            get.insert(k, v);
        }
        fn field<T: std::str::FromStr>(
            map: &std::collections::HashMap<&str, &str>,
            key: &str,
        ) -> Result<T> {
            map.get(key)
                .ok_or_else(|| Error::Parse(format!("header lacks {key}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad value for {key}")))
        }
        let key_len: usize = field(&get, "W")?;
        let params = EnumerationParams::with_free_bits(
            key_len,
            field(&get, "w")?,
            field(&get, "eta")?,
            field(&get, "mu")?,
            get.get("free_bits").map_or(Ok(key_len), |_| field(&get, "free_bits"))?,
        )?;
        let channel = ChannelParams::new(field(&get, "alpha")?, field(&get, "beta")?)?;
        let precision: f64 = field(&get, "precision")?;

        let mut lists = vec![Vec::new(); params.blocks()];
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [i, w, v] = parts[..] else {
                return Err(Error::Parse(format!("bad candidate line {line:?}")));
            };
            let i: usize = i.parse().map_err(|_| Error::Parse(format!("bad index {i:?}")))?;
            let weight = w.parse().map_err(|_| Error::Parse(format!("bad weight {w:?}")))?;
            let value = BitString::from_hex(v, Some(params.block_bits()))?;
            lists
                .get_mut(i)
                .ok_or_else(|| Error::Parse(format!("list index {i} out of range")))?
                .push(ChunkCandidate { weight, value });
        }
        Self::new(lists, params, channel, precision)
    }
}

/// Builds the candidate table: the `mu` best combinations of each block of
/// `eta` chunk lists, in canonical order.
pub fn generate_candidates(
    noisy: &BitString,
    params: &EnumerationParams,
    channel: &ChannelParams,
    precision: f64,
) -> Result<CandidateTable> {
    let chunk_lists = build_chunk_lists(noisy, params, channel, precision)?;
    let lists = chunk_lists
        .chunks(params.eta)
        .map(|group| {
            let mut block: Vec<ChunkCandidate> = Okea::new(group.to_vec())?.take(params.mu).collect();
            block.sort_by(ChunkCandidate::canonical_cmp);
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    CandidateTable::new(lists, *params, *channel, precision)
}
