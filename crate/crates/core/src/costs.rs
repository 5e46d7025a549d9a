//! Gate-count model for Grover key search.
//!
//! Per-query counts are published totals for full encryption circuits. A
//! search over `2^e` candidates is charged `pi/4 * 2^(e/2)` queries.

use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub cnot: u64,
    /// Single-qubit Clifford gates.
    pub cliff1q: u64,
    pub t: u64,
}

impl GateCounts {
    pub const fn new(cnot: u64, cliff1q: u64, t: u64) -> Self {
        Self { cnot, cliff1q, t }
    }

    /// Counts for `queries` sequential circuit applications.
    pub fn times(&self, queries: u64) -> GateCounts {
        GateCounts::new(self.cnot * queries, self.cliff1q * queries, self.t * queries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CipherCircuitEntry {
    pub cipher_id: &'static str,
    pub gates: GateCounts,
}

const fn entry(cipher_id: &'static str, cnot: u64, cliff1q: u64, t: u64) -> CipherCircuitEntry {
    CipherCircuitEntry {
        cipher_id,
        gates: GateCounts::new(cnot, cliff1q, t),
    }
}

/// Per-query gate counts of full encryption circuits.
pub const CIPHER_CIRCUITS: [CipherCircuitEntry; 10] = [
    entry("aes-128", 291_150, 83_116, 54_400),
    entry("aes-192", 328_612, 93_160, 60_928),
    entry("aes-256", 402_878, 114_778, 75_072),
    entry("present-64/80", 18_892, 67_456, 59_024),
    entry("present-64/128", 19_608, 71_424, 62_496),
    entry("gift-64/128", 7_424, 57_344, 50_176),
    entry("gift-128/128", 12_288, 98_304, 86_016),
    entry("lowmc-L1", 689_944, 4_932, 8_400),
    entry("lowmc-L3", 2_271_870, 9_398, 12_600),
    entry("lowmc-L5", 5_070_324, 14_274, 15_960),
];

pub fn builtin_gate_counts(cipher_id: &str) -> Result<GateCounts> {
    CIPHER_CIRCUITS
        .iter()
        .find(|e| e.cipher_id == cipher_id)
        .map(|e| e.gates)
        .ok_or_else(|| Error::Unknown(cipher_id.to_string()))
}

/// Counts a circuit given as Toffoli and CNOT gates, charging each Toffoli
/// 8 Cliffords and 7 T gates (an upper bound on T).
pub fn toffoli_decompose(toffoli: u64, cnot: u64) -> GateCounts {
    GateCounts::new(cnot, 8 * toffoli, 7 * toffoli)
}

/// Real-valued gate totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateTotals {
    pub cnot: f64,
    pub cliff1q: f64,
    pub t: f64,
}

impl GateTotals {
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GateTotals {
        GateTotals {
            cnot: f(self.cnot),
            cliff1q: f(self.cliff1q),
            t: f(self.t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroverCost {
    pub exponent: f64,
    /// `pi/4 * 2^(e/2)`.
    pub queries: f64,
    pub exact: GateTotals,
    /// `exact` rounded to three significant figures.
    pub reported: GateTotals,
}

/// Rounds to `digits` significant figures.
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let p = digits - 1 - x.abs().log10().floor() as i32;
    if p >= 0 {
        let scale = 10f64.powi(p);
        (x * scale).round() / scale
    } else {
        let scale = 10f64.powi(-p);
        (x / scale).round() * scale
    }
}

/// Gate totals for a Grover search over `2^e` candidates.
pub fn grover_cost(per_query: &GateCounts, e: f64) -> Result<GroverCost> {
    if e.is_nan() || e < 0.0 {
        return Err(Error::InvalidParams(format!("exponent {e} must be non-negative")));
    }
    let queries = FRAC_PI_4 * 2f64.powf(e / 2.0);
    let exact = GateTotals {
        cnot: per_query.cnot as f64 * queries,
        cliff1q: per_query.cliff1q as f64 * queries,
        t: per_query.t as f64 * queries,
    };
    Ok(GroverCost {
        exponent: e,
        queries,
        exact,
        reported: exact.map(|x| round_sig(x, 3)),
    })
}

/// Published Grover totals against LowMC: `(level, e, totals)`.
pub const PUBLISHED_LOWMC_TOTALS: [(&str, u32, GateTotals); 9] = [
    ("lowmc-L1", 30, GateTotals { cnot: 1.78e10, cliff1q: 1.1e8, t: 2.16e8 }),
    ("lowmc-L3", 30, GateTotals { cnot: 5.85e10, cliff1q: 2.42e8, t: 3.24e8 }),
    ("lowmc-L5", 30, GateTotals { cnot: 1.3e11, cliff1q: 3.67e8, t: 4.11e8 }),
    ("lowmc-L1", 40, GateTotals { cnot: 5.68e11, cliff1q: 3.24e9, t: 6.9e9 }),
    ("lowmc-L3", 40, GateTotals { cnot: 1.87e12, cliff1q: 7.74e9, t: 1.04e10 }),
    ("lowmc-L5", 40, GateTotals { cnot: 4.18e12, cliff1q: 1.18e10, t: 1.31e10 }),
    ("lowmc-L1", 50, GateTotals { cnot: 1.82e13, cliff1q: 1.04e11, t: 2.21e11 }),
    ("lowmc-L3", 50, GateTotals { cnot: 5.99e13, cliff1q: 2.48e11, t: 3.32e11 }),
    ("lowmc-L5", 50, GateTotals { cnot: 1.34e14, cliff1q: 3.76e11, t: 4.21e11 }),
];

pub fn published_lowmc_totals(cipher_id: &str, e: u32) -> Option<GateTotals> {
    PUBLISHED_LOWMC_TOTALS
        .iter()
        .find(|(id, ee, _)| *id == cipher_id && *ee == e)
        .map(|(_, _, t)| *t)
}

/// Comparison of a computed total against a published figure.
#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub column: &'static str,
    pub computed: f64,
    pub published: f64,
    /// `computed / published`.
    pub ratio: f64,
    pub note: String,
}

/// Columns whose computed value differs from the published one by more than 1%.
pub fn discrepancies(cipher_id: &str, e: u32, cost: &GroverCost) -> Vec<Discrepancy> {
    let Some(published) = published_lowmc_totals(cipher_id, e) else {
        return Vec::new();
    };
    [
        ("cnot", cost.exact.cnot, published.cnot),
        ("cliff1q", cost.exact.cliff1q, published.cliff1q),
        ("t", cost.exact.t, published.t),
    ]
    .into_iter()
    .filter(|(_, c, p)| ((c - p) / p).abs() > 0.01)
    .map(|(column, computed, published)| Discrepancy {
        column,
        computed,
        published,
        ratio: computed / published,
        note: format!(
            "{column}: per-query count x pi/4 x 2^(e/2) gives {computed:.3e}, published total is {published:.3e}"
        ),
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        assert_eq!(builtin_gate_counts("gift-64/128").unwrap(), GateCounts::new(7424, 57344, 50176));
        assert_eq!(builtin_gate_counts("lowmc-L5").unwrap(), GateCounts::new(5_070_324, 14_274, 15_960));
        assert_eq!(builtin_gate_counts("aes-256").unwrap(), GateCounts::new(402_878, 114_778, 75_072));
        assert!(builtin_gate_counts("des").is_err());
    }

    #[test]
    fn toffoli_rule() {
        assert_eq!(toffoli_decompose(1, 0), GateCounts::new(0, 8, 7));
        assert_eq!(toffoli_decompose(0, 5), GateCounts::new(5, 0, 0));
        assert_eq!(toffoli_decompose(3, 12), GateCounts::new(12, 24, 21));
    }

    #[test]
    fn sig_figs() {
        assert_eq!(round_sig(17_756_290_000.0, 3), 1.78e10);
        assert_eq!(round_sig(0.0012345, 2), 0.0012);
        assert_eq!(round_sig(0.0, 3), 0.0);
    }

    #[test]
    fn grover_totals() {
        let l1 = builtin_gate_counts("lowmc-L1").unwrap();
        let c = grover_cost(&l1, 30.0).unwrap();
        assert_eq!(c.reported.cnot, 1.78e10);
        assert_eq!(c.reported.t, 2.16e8);
        let l5 = grover_cost(&builtin_gate_counts("lowmc-L5").unwrap(), 50.0).unwrap();
        assert!((l5.exact.cnot - 5_070_324.0 * FRAC_PI_4 * 2f64.powi(25)).abs() < 1.0);
        assert_eq!(l5.reported.cnot, 1.34e14);
        assert!(grover_cost(&l1, -1.0).is_err());
    }

    #[test]
    fn cost_doubles_every_two_exponent_steps() {
        let g = builtin_gate_counts("aes-128").unwrap();
        for e in [0.0, 7.0, 30.0] {
            let a = grover_cost(&g, e).unwrap().exact;
            let b = grover_cost(&g, e + 2.0).unwrap().exact;
            assert!((b.cnot / a.cnot - 2.0).abs() < 1e-12);
            assert!((b.t / a.t - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clifford_column_is_flagged() {
        let l1 = builtin_gate_counts("lowmc-L1").unwrap();
        let d = discrepancies("lowmc-L1", 30, &grover_cost(&l1, 30.0).unwrap());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].column, "cliff1q");
        assert!(d[0].ratio > 1.1 && d[0].ratio < 1.3);
    }
}
