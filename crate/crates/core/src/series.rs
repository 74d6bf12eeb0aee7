//! Entire functions stored as monomial coefficients.
//!
//! Under a radial weight distinct monomials are orthogonal, so a function is
//! fully described for norm purposes by `|a_α|` per multi-index.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreal::LogReal;

/// Exponent vector `α` of the monomial `z^α`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidArgument("multi-index needs at least one component".into()));
        }
        Ok(Self(exponents))
    }

    /// `k·e₁` in ℂⁿ, the monomial `z₁^k`.
    pub fn first_axis(n: usize, k: u32) -> Self {
        assert!(n >= 1);
        let mut e = vec![0; n];
        e[0] = k;
        Self(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α|`.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&a| u64::from(a)).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// All multi-indices of dimension `n` and total degree `d`, in
    /// lexicographic order.
    pub fn with_degree(n: usize, d: u32) -> Vec<Self> {
        fn rec(prefix: &mut Vec<u32>, left: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
            if left == 1 {
                prefix.push(remaining);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=remaining).rev() {
                prefix.push(a);
                rec(prefix, left - 1, remaining - a, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::with_capacity(n), n, d, &mut out);
        out
    }
}

/// Graded order: total degree first, then lexicographic on the exponents.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Finite monomial expansion `Σ a_α z^α` with real coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries", into = "RawSeries")]
pub struct ModeSeries {
    n: usize,
    coeffs: BTreeMap<MultiIndex, LogReal>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawTerm {
    alpha: MultiIndex,
    coeff: LogReal,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawSeries {
    n: usize,
    terms: Vec<RawTerm>,
}

impl TryFrom<RawSeries> for ModeSeries {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<Self> {
        let mut s = ModeSeries::zero(raw.n)?;
        for t in raw.terms {
            s.add_term(t.alpha, t.coeff)?;
        }
        Ok(s)
    }
}

impl From<ModeSeries> for RawSeries {
    fn from(s: ModeSeries) -> Self {
        RawSeries {
            n: s.n,
            terms: s
                .coeffs
                .into_iter()
                .map(|(alpha, coeff)| RawTerm { alpha, coeff })
                .collect(),
        }
    }
}

impl ModeSeries {
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension n must be at least 1".into()));
        }
        Ok(Self {
            n,
            coeffs: BTreeMap::new(),
        })
    }

    /// `Σ a_k z₁^k` from `(k, a_k)` pairs.
    pub fn first_axis<I>(n: usize, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, LogReal)>,
    {
        let mut s = Self::zero(n)?;
        for (k, a) in coeffs {
            s.add_term(MultiIndex::first_axis(n, k), a)?;
        }
        Ok(s)
    }

    /// Adds `a·z^α`; zero results are removed.
    pub fn add_term(&mut self, alpha: MultiIndex, a: LogReal) -> Result<()> {
        if alpha.dim() != self.n {
            return Err(Error::InvalidArgument(format!(
                "multi-index {alpha} does not live in dimension {}",
                self.n
            )));
        }
        let entry = self.coeffs.entry(alpha).or_insert(LogReal::ZERO);
        *entry = *entry + a;
        self.coeffs.retain(|_, c| !c.is_zero());
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> LogReal {
        self.coeffs.get(alpha).copied().unwrap_or(LogReal::ZERO)
    }

    /// Nonzero terms in graded order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, LogReal)> {
        self.coeffs.iter().map(|(a, c)| (a, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}
