//! Counting the neighbour-set configurations consistent with a revealed
//! intersection size.
//!
//! Learning `|A ∩ B| = k` over a universe of `n` candidate nodes narrows the
//! intersection down to one of `C(n, k)` subsets instead of `2^n`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

/// Largest universe for which [`log10_possibilities`] goes through the exact
/// big-integer binomial.
pub const EXACT_UNIVERSE_LIMIT: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LeakageError {
    #[error("cardinality {cardinality} exceeds universe {universe}")]
    CardinalityExceedsUniverse { universe: u64, cardinality: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeakageQuery {
    /// Candidate nodes: total node count minus the two query endpoints.
    pub universe: u64,
    pub cardinality: u64,
}

impl LeakageQuery {
    pub fn new(universe: u64, cardinality: u64) -> Result<Self, LeakageError> {
        if cardinality > universe {
            return Err(LeakageError::CardinalityExceedsUniverse { universe, cardinality });
        }
        Ok(LeakageQuery { universe, cardinality })
    }

    /// Builds a query from a graph's node count, excluding the endpoints.
    pub fn from_node_count(nodes: u64, cardinality: u64) -> Result<Self, LeakageError> {
        Self::new(nodes.saturating_sub(2), cardinality)
    }
}

/// Exact `C(universe, cardinality)`.
pub fn possibilities(q: LeakageQuery) -> Result<BigUint, LeakageError> {
    let LeakageQuery { universe: n, cardinality: k } = LeakageQuery::new(q.universe, q.cardinality)?;
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // Exact at every step: the running product is C(n, i + 1).
        acc = acc * (n - i) / (i + 1);
    }
    Ok(acc)
}

/// `log10 C(universe, cardinality)`; exact up to [`EXACT_UNIVERSE_LIMIT`],
/// log-gamma beyond.
pub fn log10_possibilities(q: LeakageQuery) -> Result<f64, LeakageError> {
    let q = LeakageQuery::new(q.universe, q.cardinality)?;
    if q.cardinality == 0 || q.cardinality == q.universe {
        return Ok(0.0);
    }
    if q.universe <= EXACT_UNIVERSE_LIMIT {
        return Ok(log10_biguint(&possibilities(q)?));
    }
    let (n, k) = (q.universe as f64, q.cardinality as f64);
    let ln = ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0);
    Ok(ln / std::f64::consts::LN_10)
}

/// `log10` of an arbitrary-precision integer from its leading 64 bits.
pub fn log10_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    let shift = bits.saturating_sub(64);
    let top = (v >> shift).to_f64().expect("fits in 64 bits");
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// `(k, C(universe, k))` for `k = 0..=universe`.
pub fn leakage_curve(universe: u64) -> Vec<(u64, BigUint)> {
    let mut out = Vec::with_capacity(universe as usize + 1);
    let mut c = BigUint::one();
    for k in 0..=universe {
        out.push((k, c.clone()));
        c = c * (universe - k) / (k + 1);
    }
    out
}
