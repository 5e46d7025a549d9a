//! Binary asymmetric channel model of cold-boot decay.
//!
//! A stored 0 reads back as 1 with probability `alpha`, a stored 1 reads back
//! as 0 with probability `beta`. Candidates are scored by the natural-log
//! likelihood of the observed noisy bits and the score is quantized to an
//! integer weight where smaller is more likely.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Floor used for flip rates that were never observed.
pub const MIN_PROBABILITY: f64 = 1e-6;

/// Default score-to-weight scale.
pub const DEFAULT_PRECISION: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    alpha: f64,
    beta: f64,
}

impl ChannelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for p in [alpha, beta] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidProbability(p));
            }
        }
        Ok(Self { alpha, beta })
    }

    /// Probability of a 0 bit decaying to 1.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Probability of a 1 bit decaying to 0.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Log-likelihood of the joint counts `n[x][y]` (candidate bit x, noisy bit y).
    pub fn score_counts(&self, counts: &PairCounts) -> f64 {
        counts.n00 as f64 * (-self.alpha).ln_1p()
            + counts.n01 as f64 * self.alpha.ln()
            + counts.n10 as f64 * self.beta.ln()
            + counts.n11 as f64 * (-self.beta).ln_1p()
    }
}

/// Joint bit counts between a candidate and the noisy observation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl PairCounts {
    pub fn between(candidate: &BitString, noisy: &BitString) -> Result<Self> {
        noisy.check_len(candidate.len())?;
        let mut c = PairCounts::default();
        for (x, y) in candidate.as_bytes().iter().zip(noisy.as_bytes()) {
            c.n01 += (!x & y).count_ones() as u64;
            c.n10 += (x & !y).count_ones() as u64;
            c.n11 += (x & y).count_ones() as u64;
        }
        c.n00 = candidate.len() as u64 - c.n01 - c.n10 - c.n11;
        Ok(c)
    }

    /// Counts over the low `bits` bits of two packed values.
    pub fn of_words(candidate: u64, noisy: u64, bits: u32) -> Self {
        let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
        let (x, y) = (candidate & mask, noisy & mask);
        let n01 = (!x & y).count_ones() as u64;
        let n10 = (x & !y).count_ones() as u64;
        let n11 = (x & y).count_ones() as u64;
        PairCounts {
            n00: bits as u64 - n01 - n10 - n11,
            n01,
            n10,
            n11,
        }
    }

    pub fn total(&self) -> u64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }
}

/// Flips every bit independently: 0 with probability alpha, 1 with probability beta.
pub fn perturb(key: &BitString, params: &ChannelParams, seed: u64) -> BitString {
    perturb_with(key, params, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// [`perturb`] drawing one uniform sample per bit from `rng`.
pub fn perturb_with<R: Rng + ?Sized>(key: &BitString, params: &ChannelParams, rng: &mut R) -> BitString {
    let mut out = key.clone();
    for i in 0..key.len() {
        let p = if key.get(i) { params.beta } else { params.alpha };
        if rng.gen::<f64>() < p {
            out.flip(i);
        }
    }
    out
}

/// `ln P(noisy | candidate)` under the channel.
pub fn log_likelihood(candidate: &BitString, noisy: &BitString, params: &ChannelParams) -> Result<f64> {
    Ok(params.score_counts(&PairCounts::between(candidate, noisy)?))
}

/// Quantizes a log-likelihood to `round(-score * precision)`.
pub fn to_weight(score: f64, precision: f64) -> Result<u64> {
    if !(precision > 0.0 && precision.is_finite()) {
        return Err(Error::InvalidParams(format!("precision {precision} must be positive")));
    }
    if score > 0.0 || score.is_nan() {
        return Err(Error::PositiveScore(score));
    }
    Ok((-score * precision).round() as u64)
}

/// Estimates flip rates by comparing a known original with its decayed copy.
pub fn estimate_params(original: &BitString, noisy: &BitString) -> Result<ChannelParams> {
    let c = PairCounts::between(original, noisy)?;
    let zeros = c.n00 + c.n01;
    let ones = c.n10 + c.n11;
    if zeros == 0 {
        return Err(Error::UndefinedRate(0));
    }
    if ones == 0 {
        return Err(Error::UndefinedRate(1));
    }
    let rate = |flips: u64, total: u64| {
        (flips as f64 / total as f64).clamp(MIN_PROBABILITY, 1.0 - MIN_PROBABILITY)
    };
    ChannelParams::new(rate(c.n01, zeros), rate(c.n10, ones))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::mock::StepRng;

    fn bits(s: &str) -> BitString {
        BitString::from_bit_str(s).unwrap()
    }

    #[test]
    fn params_are_strict_probabilities() {
        assert!(ChannelParams::new(0.0, 0.1).is_err());
        assert!(ChannelParams::new(0.1, 1.0).is_err());
        assert!(ChannelParams::new(f64::NAN, 0.1).is_err());
        assert!(ChannelParams::new(1e-12, 0.999).is_ok());
    }

    #[test]
    fn exact_match_all_zero() {
        let p = ChannelParams::new(0.001, 0.01).unwrap();
        let ll = log_likelihood(&bits("0000"), &bits("0000"), &p).unwrap();
        assert!((ll - 4.0 * 0.999f64.ln()).abs() < 1e-15);
        assert!((ll - -0.0040020).abs() < 1e-7);
    }

    #[test]
    fn four_term_formula() {
        let p = ChannelParams::new(0.001, 0.01).unwrap();
        let ll = log_likelihood(&bits("01"), &bits("11"), &p).unwrap();
        assert!((ll - (0.001f64.ln() + 0.99f64.ln())).abs() < 1e-12);
        assert!((ll - -6.91776).abs() < 1e-4);
    }

    #[test]
    fn length_mismatch_rejected() {
        let p = ChannelParams::new(0.1, 0.1).unwrap();
        assert!(matches!(
            log_likelihood(&bits("01"), &bits("011"), &p),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn weights() {
        assert_eq!(to_weight(0.0, 100.0).unwrap(), 0);
        assert_eq!(to_weight(-6.91776, 100.0).unwrap(), 692);
        assert!(matches!(to_weight(0.5, 100.0), Err(Error::PositiveScore(_))));
        assert!(to_weight(-1.0, 0.0).is_err());
    }

    #[test]
    fn no_flip_stream_is_identity() {
        let p = ChannelParams::new(1e-12, 1e-12).unwrap();
        let key = BitString::from_u64(0xdead_beef, 32);
        let mut never = StepRng::new(u64::MAX, 0);
        assert_eq!(perturb_with(&key, &p, &mut never), key);
        assert_eq!(perturb(&key, &p, 1), key);
    }

    #[test]
    fn perturb_is_deterministic() {
        let p = ChannelParams::new(0.2, 0.3).unwrap();
        let key = BitString::from_u64(0x0123_4567_89ab_cdef, 64);
        assert_eq!(perturb(&key, &p, 9), perturb(&key, &p, 9));
        assert_ne!(perturb(&key, &p, 9), perturb(&key, &p, 10));
    }

    #[test]
    fn zero_key_flip_count_concentrates() {
        // Binomial(1e6, 0.01): mean 10000, sd 99.5.
        let p = ChannelParams::new(0.01, 0.3).unwrap();
        let out = perturb(&BitString::zeros(1_000_000), &p, 42);
        let ones = out.count_ones() as i64;
        assert!((ones - 10_000).abs() <= 300, "{ones}");
    }

    #[test]
    fn estimate_direct_count() {
        let est = estimate_params(&bits("0011"), &bits("0111")).unwrap();
        assert_eq!(est.alpha(), 0.5);
        assert_eq!(est.beta(), MIN_PROBABILITY);
    }

    #[test]
    fn estimate_without_flips_clamps() {
        let k = bits("0101100");
        let est = estimate_params(&k, &k).unwrap();
        assert_eq!((est.alpha(), est.beta()), (MIN_PROBABILITY, MIN_PROBABILITY));
    }

    #[test]
    fn estimate_needs_both_symbols() {
        assert_eq!(estimate_params(&bits("000"), &bits("010")), Err(Error::UndefinedRate(1)));
        assert_eq!(estimate_params(&bits("111"), &bits("010")), Err(Error::UndefinedRate(0)));
    }

    #[test]
    fn noisy_observation_maximizes_likelihood() {
        let p = ChannelParams::new(0.3, 0.45).unwrap();
        for len in 1..=12usize {
            let bits = len as u32;
            for noisy in 0..(1u64 << len) {
                let at_y = p.score_counts(&PairCounts::of_words(noisy, noisy, bits));
                for cand in (0..(1u64 << len)).filter(|&c| c != noisy) {
                    assert!(p.score_counts(&PairCounts::of_words(cand, noisy, bits)) < at_y);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn counts_partition_length(a in any::<u64>(), b in any::<u64>(), len in 0usize..=64) {
            let x = BitString::from_u64(a, len);
            let y = BitString::from_u64(b, len);
            let c = PairCounts::between(&x, &y).unwrap();
            prop_assert_eq!(c.total(), len as u64);
            prop_assert_eq!(c, PairCounts::of_words(a, b, len as u32));
        }

        #[test]
        fn chunk_scores_add_up(a in any::<u32>(), b in any::<u32>(),
                               alpha in 0.0001f64..0.5, beta in 0.0001f64..0.5) {
            let p = ChannelParams::new(alpha, beta).unwrap();
            let x = BitString::from_u64(a as u64, 32);
            let y = BitString::from_u64(b as u64, 32);
            let whole = log_likelihood(&x, &y, &p).unwrap();
            let parts: f64 = (0..4)
                .map(|i| log_likelihood(&x.extract(8 * i, 8), &y.extract(8 * i, 8), &p).unwrap())
                .sum();
            prop_assert!((whole - parts).abs() < 1e-9 * whole.abs().max(1.0));
        }

        #[test]
        fn weight_order_follows_score(s1 in -1000.0f64..0.0, s2 in -1000.0f64..0.0) {
            let (w1, w2) = (to_weight(s1, 100.0).unwrap(), to_weight(s2, 100.0).unwrap());
            if s1 < s2 { prop_assert!(w1 >= w2); }
            if w1 < w2 { prop_assert!(s1 > s2); }
        }
    }
}
