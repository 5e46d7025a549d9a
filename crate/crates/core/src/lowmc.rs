//! A parametric LowMC-style block cipher and Picnic-shaped key generation.
//!
//! Linear layers, round constants and key matrices are drawn from a seeded
//! ChaCha20 stream. They are not the Picnic reference constants, so outputs
//! are not interoperable with Picnic test vectors.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Rounds used for desk-scale experiments.
pub const DEFAULT_ROUNDS: usize = 4;

/// Dense matrix over GF(2), rows packed into 64-bit words (bit `j` of a row
/// is column `j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Vec<u64>>,
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![vec![0; words(cols)]; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn random<R: RngCore>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for row in &mut m.data {
            for w in row.iter_mut() {
                *w = rng.next_u64();
            }
            if !cols.is_multiple_of(64) {
                *row.last_mut().unwrap() &= (1u64 << (cols % 64)) - 1;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r][c / 64] >> (c % 64)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, bit: bool) {
        if bit {
            self.data[r][c / 64] |= 1 << (c % 64);
        } else {
            self.data[r][c / 64] &= !(1 << (c % 64));
        }
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.data.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let Some(p) = (rank..self.rows).find(|&r| (m[r][c / 64] >> (c % 64)) & 1 == 1) else {
                continue;
            };
            m.swap(rank, p);
            let pivot = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && (row[c / 64] >> (c % 64)) & 1 == 1 {
                    row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        for c in 0..n {
            let p = (c..n).find(|&r| (a[r][c / 64] >> (c % 64)) & 1 == 1)?;
            a.swap(c, p);
            inv.swap(c, p);
            let (pa, pi) = (a[c].clone(), inv[c].clone());
            for r in 0..n {
                if r != c && (a[r][c / 64] >> (c % 64)) & 1 == 1 {
                    a[r].iter_mut().zip(&pa).for_each(|(x, y)| *x ^= y);
                    inv[r].iter_mut().zip(&pi).for_each(|(x, y)| *x ^= y);
                }
            }
        }
        Some(Self {
            rows: n,
            cols: n,
            data: inv,
        })
    }

    pub fn mul(&self, other: &Gf2Matrix) -> Gf2Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for (r, row) in out.data.iter_mut().enumerate() {
            for k in 0..self.cols {
                if self.get(r, k) {
                    row.iter_mut().zip(&other.data[k]).for_each(|(x, y)| *x ^= y);
                }
            }
        }
        out
    }

    /// Matrix-vector product on packed words.
    fn apply(&self, v: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; words(self.rows)];
        for (r, row) in self.data.iter().enumerate() {
            let parity = row.iter().zip(v).fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones()) & 1;
            out[r / 64] |= (parity as u64) << (r % 64);
        }
        out
    }
}

fn pack(bits: &BitString) -> Vec<u64> {
    let mut out = vec![0u64; words(bits.len())];
    for (i, &b) in bits.as_bytes().iter().enumerate() {
        out[i / 8] |= (b as u64) << (8 * (i % 8));
    }
    out
}

fn unpack(v: &[u64], len: usize) -> BitString {
    let bytes = (0..len.div_ceil(8)).map(|i| (v[i / 8] >> (8 * (i % 8))) as u8).collect();
    BitString::from_bytes_truncated(bytes, len)
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    dst.iter_mut().zip(src).for_each(|(a, b)| *a ^= b);
}

/// `(a, b, c) -> (a ^ bc, a ^ b ^ ac, a ^ b ^ c ^ ab)` with `a` the lowest bit.
pub fn sbox(a: bool, b: bool, c: bool) -> (bool, bool, bool) {
    (a ^ (b & c), a ^ b ^ (a & c), a ^ b ^ c ^ (a & b))
}

const fn sbox_table() -> [u8; 8] {
    let mut t = [0u8; 8];
    let mut x = 0;
    while x < 8 {
        let (a, b, c) = (x & 1, (x >> 1) & 1, (x >> 2) & 1);
        let y0 = a ^ (b & c);
        let y1 = a ^ b ^ (a & c);
        let y2 = a ^ b ^ c ^ (a & b);
        t[x] = (y0 | y1 << 1 | y2 << 2) as u8;
        x += 1;
    }
    t
}

const SBOX: [u8; 8] = sbox_table();

const fn invert(t: [u8; 8]) -> [u8; 8] {
    let mut inv = [0u8; 8];
    let mut x = 0;
    while x < 8 {
        inv[t[x] as usize] = x as u8;
        x += 1;
    }
    inv
}

const SBOX_INV: [u8; 8] = invert(SBOX);

/// Applies `table` to each 3-bit group `3j..3j+2` for `j < boxes`.
fn sbox_layer(state: &mut [u64], boxes: usize, table: &[u8; 8]) {
    let get = |s: &[u64], i: usize| ((s[i / 64] >> (i % 64)) & 1) as u8;
    for j in 0..boxes {
        let base = 3 * j;
        let x = get(state, base) | get(state, base + 1) << 1 | get(state, base + 2) << 2;
        let y = table[x as usize];
        for k in 0..3 {
            let i = base + k;
            state[i / 64] = (state[i / 64] & !(1 << (i % 64))) | (((y >> k) & 1) as u64) << (i % 64);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LowMcParams {
    /// Block size in bits.
    pub block_bits: usize,
    /// Key size in bits.
    pub key_bits: usize,
    /// S-boxes per round.
    pub sboxes: usize,
    pub rounds: usize,
    /// Seed of the constant-generation stream.
    pub seed: u64,
}

impl LowMcParams {
    pub fn new(block_bits: usize, key_bits: usize, sboxes: usize, rounds: usize, seed: u64) -> Result<Self> {
        if block_bits == 0 || key_bits == 0 {
            return Err(Error::InvalidParams("block and key sizes must be positive".into()));
        }
        if 3 * sboxes > block_bits {
            return Err(Error::InvalidParams(format!(
                "{sboxes} S-boxes do not fit a {block_bits}-bit block"
            )));
        }
        Ok(Self {
            block_bits,
            key_bits,
            sboxes,
            rounds,
            seed,
        })
    }
}

/// Round constants and matrices of one cipher instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LowMc {
    params: LowMcParams,
    linear: Vec<Gf2Matrix>,
    linear_inv: Vec<Gf2Matrix>,
    constants: Vec<Vec<u64>>,
    key_matrices: Vec<Gf2Matrix>,
}

impl LowMc {
    /// Draws the instance deterministically from `params.seed`, rejecting
    /// singular linear layers and rank-deficient key matrices.
    pub fn instantiate(params: LowMcParams) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
        let n = params.block_bits;
        let k = params.key_bits;
        let mut linear = Vec::with_capacity(params.rounds);
        let mut linear_inv = Vec::with_capacity(params.rounds);
        let mut constants = Vec::with_capacity(params.rounds);
        for _ in 0..params.rounds {
            let (l, inv) = loop {
                let l = Gf2Matrix::random(n, n, &mut rng);
                if let Some(inv) = l.inverse() {
                    break (l, inv);
                }
            };
            linear.push(l);
            linear_inv.push(inv);
            constants.push(Gf2Matrix::random(1, n, &mut rng).data.remove(0));
        }
        let key_matrices = (0..=params.rounds)
            .map(|_| loop {
                let m = Gf2Matrix::random(n, k, &mut rng);
                if m.rank() == n.min(k) {
                    break m;
                }
            })
            .collect();
        Self {
            params,
            linear,
            linear_inv,
            constants,
            key_matrices,
        }
    }

    pub fn params(&self) -> &LowMcParams {
        &self.params
    }

    pub fn linear_layers(&self) -> &[Gf2Matrix] {
        &self.linear
    }

    pub fn inverse_linear_layers(&self) -> &[Gf2Matrix] {
        &self.linear_inv
    }

    pub fn key_matrices(&self) -> &[Gf2Matrix] {
        &self.key_matrices
    }

    pub fn round_constant(&self, round: usize) -> BitString {
        unpack(&self.constants[round], self.params.block_bits)
    }

    fn round_keys(&self, key: &BitString) -> Result<Vec<Vec<u64>>> {
        key.check_len(self.params.key_bits)?;
        let k = pack(key);
        Ok(self.key_matrices.iter().map(|m| m.apply(&k)).collect())
    }

    pub fn encrypt(&self, key: &BitString, plaintext: &BitString) -> Result<BitString> {
        plaintext.check_len(self.params.block_bits)?;
        let round_keys = self.round_keys(key)?;
        let mut state = pack(plaintext);
        xor_into(&mut state, &round_keys[0]);
        for i in 0..self.params.rounds {
            sbox_layer(&mut state, self.params.sboxes, &SBOX);
            state = self.linear[i].apply(&state);
            xor_into(&mut state, &self.constants[i]);
            xor_into(&mut state, &round_keys[i + 1]);
        }
        Ok(unpack(&state, self.params.block_bits))
    }

    pub fn decrypt(&self, key: &BitString, ciphertext: &BitString) -> Result<BitString> {
        ciphertext.check_len(self.params.block_bits)?;
        let round_keys = self.round_keys(key)?;
        let mut state = pack(ciphertext);
        for i in (0..self.params.rounds).rev() {
            xor_into(&mut state, &round_keys[i + 1]);
            xor_into(&mut state, &self.constants[i]);
            state = self.linear_inv[i].apply(&state);
            sbox_layer(&mut state, self.params.sboxes, &SBOX_INV);
        }
        xor_into(&mut state, &round_keys[0]);
        Ok(unpack(&state, self.params.block_bits))
    }
}

/// A named Picnic parameter set with its state size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PicnicParamSet {
    pub name: &'static str,
    pub state_size_bits: usize,
    pub state_size_bytes: usize,
    /// S-boxes per round of the cipher instance used with this set.
    pub sboxes: usize,
}

impl PicnicParamSet {
    pub fn lowmc_params(&self, rounds: usize, seed: u64) -> LowMcParams {
        LowMcParams {
            block_bits: self.state_size_bits,
            key_bits: self.state_size_bits,
            sboxes: self.sboxes,
            rounds,
            seed,
        }
    }

    /// Security level family: 1, 3 or 5.
    pub fn level(&self) -> u8 {
        match self.state_size_bits {
            0..=129 => 1,
            130..=192 => 3,
            _ => 5,
        }
    }
}

const fn ps(name: &'static str, bits: usize, bytes: usize, sboxes: usize) -> PicnicParamSet {
    PicnicParamSet {
        name,
        state_size_bits: bits,
        state_size_bytes: bytes,
        sboxes,
    }
}

/// State sizes of the twelve Picnic parameter sets.
pub const PICNIC_PARAMSETS: [PicnicParamSet; 12] = [
    ps("picnic-L1-FS", 128, 16, 10),
    ps("picnic-L1-UR", 128, 16, 10),
    ps("picnic-L1-full", 129, 17, 43),
    ps("picnic3-L1", 129, 17, 43),
    ps("picnic-L3-FS", 192, 24, 10),
    ps("picnic-L3-UR", 192, 24, 10),
    ps("picnic-L3-full", 192, 24, 64),
    ps("picnic3-L3", 192, 24, 64),
    ps("picnic-L5-FS", 256, 32, 10),
    ps("picnic-L5-UR", 256, 32, 10),
    ps("picnic-L5-full", 255, 32, 85),
    ps("picnic3-L5", 255, 32, 85),
];

pub fn paramset_table() -> &'static [PicnicParamSet] {
    &PICNIC_PARAMSETS
}

pub fn paramset(name: &str) -> Result<PicnicParamSet> {
    PICNIC_PARAMSETS
        .iter()
        .find(|p| p.name == name)
        .copied()
        .ok_or_else(|| Error::Unknown(name.to_string()))
}

/// Output of [`keygen`]. `secret` keeps the full byte storage with trailing
/// bits zeroed; `plaintext` and `ciphertext` are `stateSizeBits` long.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyPair {
    pub secret: BitString,
    pub plaintext: BitString,
    pub ciphertext: BitString,
}

fn rand_state<R: RngCore>(set: &PicnicParamSet, rng: &mut R) -> BitString {
    let mut bytes = vec![0u8; set.state_size_bytes];
    rng.fill_bytes(&mut bytes);
    BitString::from_bytes_truncated(bytes, set.state_size_bits).resized(8 * set.state_size_bytes)
}

/// Random secret key and plaintext over `stateSizeBytes`, trailing bits
/// zeroed, with the ciphertext under `cipher`.
pub fn keygen(set: &PicnicParamSet, cipher: &LowMc, seed: u64) -> Result<KeyPair> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let secret = rand_state(set, &mut rng);
    let plaintext = rand_state(set, &mut rng).resized(set.state_size_bits);
    let ciphertext = cipher.encrypt(&secret.resized(set.state_size_bits), &plaintext)?;
    Ok(KeyPair {
        secret,
        plaintext,
        ciphertext,
    })
}

/// A uniformly random bit string.
pub fn random_bits<R: Rng>(len: usize, rng: &mut R) -> BitString {
    let mut bytes = vec![0u8; len.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    BitString::from_bytes_truncated(bytes, len)
}
