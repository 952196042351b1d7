//! The discretized family of candidate complexity basis functions g(n).
//!
//! A measured metric series is modelled as `f(n) = r * g(n) + X` where g is
//! drawn from a fixed grid of 50 candidates spanning six function families,
//! from iterated logarithms up to the gamma function.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The six symbolic function families, with fixed ordinal codes used in
/// embeddings. Ordered by asymptotic growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    /// g(n) = log2^p(log2 n)
    LoglogPolynomial,
    /// g(n) = log2^p(n)
    LogPolynomial,
    /// g(n) = p^n with 0 < p < 1
    FractionalPower,
    /// g(n) = n^p
    Polynomial,
    /// g(n) = p^n with p > 1
    Power,
    /// g(n) = Gamma(n)
    Factorial,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::LoglogPolynomial,
        FamilyKind::LogPolynomial,
        FamilyKind::FractionalPower,
        FamilyKind::Polynomial,
        FamilyKind::Power,
        FamilyKind::Factorial,
    ];

    /// Fixed ordinal code, stable across releases: this value is written
    /// verbatim into the FEATURE_TYPE slot of embeddings.
    pub fn ordinal(self) -> u8 {
        match self {
            FamilyKind::LoglogPolynomial => 0,
            FamilyKind::LogPolynomial => 1,
            FamilyKind::FractionalPower => 2,
            FamilyKind::Polynomial => 3,
            FamilyKind::Power => 4,
            FamilyKind::Factorial => 5,
        }
    }

    pub fn from_ordinal(code: u8) -> Option<FamilyKind> {
        FamilyKind::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FamilyKind::LoglogPolynomial => "LOGLOG_POLYNOMIAL",
            FamilyKind::LogPolynomial => "LOG_POLYNOMIAL",
            FamilyKind::FractionalPower => "FRACTIONAL_POWER",
            FamilyKind::Polynomial => "POLYNOMIAL",
            FamilyKind::Power => "POWER",
            FamilyKind::Factorial => "FACTORIAL",
        };
        f.write_str(s)
    }
}

/// One member of the candidate family: a kind plus its exponent/base
/// parameter. The parameter is fixed to 1.0 for `Factorial`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateBasis {
    pub kind: FamilyKind,
    pub param: f64,
}

/// Errors from evaluating a basis at a concrete size.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("n = {n} is below the domain minimum {min} of the basis")]
    Domain { n: u64, min: u64 },
    #[error("value exceeds the floating-point range")]
    Overflow,
}

const LN_F64_MAX: f64 = 709.782712893384;

impl CandidateBasis {
    pub fn new(kind: FamilyKind, param: f64) -> CandidateBasis {
        debug_assert!(param >= 0.0 && param.is_finite());
        CandidateBasis { kind, param }
    }

    /// Smallest n at which the basis is defined.
    pub fn min_n(&self) -> u64 {
        match self.kind {
            FamilyKind::LoglogPolynomial => 2,
            _ => 1,
        }
    }

    /// True when the basis denotes the constant function g(n) = 1. Both
    /// LOGLOG p=0 and LOG p=0 qualify; they are canonicalized to LOG p=0
    /// at selection time.
    pub fn is_constant(&self) -> bool {
        self.param == 0.0
            && matches!(
                self.kind,
                FamilyKind::LoglogPolynomial | FamilyKind::LogPolynomial
            )
    }

    /// The canonical representative of the constant function.
    pub fn constant() -> CandidateBasis {
        CandidateBasis::new(FamilyKind::LogPolynomial, 0.0)
    }

    /// Evaluates g(n). Large POWER and FACTORIAL values are accumulated in
    /// log space; results outside the f64 range are an `Overflow` error
    /// rather than infinity so callers can reject the candidate cleanly.
    pub fn evaluate(&self, n: u64) -> Result<f64, EvalError> {
        let min = self.min_n();
        if n < min {
            return Err(EvalError::Domain { n, min });
        }
        let nf = n as f64;
        let p = self.param;
        let value = match self.kind {
            FamilyKind::LoglogPolynomial => nf.log2().log2().powf(p),
            FamilyKind::LogPolynomial => nf.log2().powf(p),
            FamilyKind::FractionalPower => (nf * p.ln()).exp(),
            FamilyKind::Polynomial => nf.powf(p),
            FamilyKind::Power => {
                let ln_val = nf * p.ln();
                if ln_val > LN_F64_MAX {
                    return Err(EvalError::Overflow);
                }
                ln_val.exp()
            }
            FamilyKind::Factorial => return gamma_int(n),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EvalError::Overflow)
        }
    }
}

impl fmt::Display for CandidateBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(p={})", self.kind, self.param)
    }
}

/// Gamma(n) for integer n >= 1, i.e. (n-1)!. Exact integer product while it
/// fits in u64, log-space accumulation beyond that.
fn gamma_int(n: u64) -> Result<f64, EvalError> {
    if n <= 21 {
        let mut acc: u64 = 1;
        for k in 2..n {
            acc *= k;
        }
        return Ok(acc as f64);
    }
    let mut ln_acc = 0.0f64;
    for k in 2..n {
        ln_acc += (k as f64).ln();
        if ln_acc > LN_F64_MAX {
            return Err(EvalError::Overflow);
        }
    }
    Ok(ln_acc.exp())
}

/// The full discretized candidate grid, 50 members, in canonical order.
pub fn candidate_grid() -> Vec<CandidateBasis> {
    let mut grid = Vec::with_capacity(50);
    for p in [0.0, 1.0, 2.0, 3.0] {
        grid.push(CandidateBasis::new(FamilyKind::LoglogPolynomial, p));
    }
    for p in 0..=10 {
        grid.push(CandidateBasis::new(FamilyKind::LogPolynomial, p as f64));
    }
    for i in 1..=9 {
        grid.push(CandidateBasis::new(FamilyKind::FractionalPower, i as f64 / 10.0));
    }
    for p in [
        1.0, 1.3, 1.5, 1.7, 2.0, 2.5, 2.7, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0, 9.0, 10.0,
    ] {
        grid.push(CandidateBasis::new(FamilyKind::Polynomial, p));
    }
    for p in [1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0] {
        grid.push(CandidateBasis::new(FamilyKind::Power, p));
    }
    grid.push(CandidateBasis::new(FamilyKind::Factorial, 1.0));
    grid
}

/// Total "simplicity" order used for tie-breaking in model selection:
/// kind ordinal first, then parameter. The two constant representations
/// compare equal.
pub fn compare_simplicity(a: &CandidateBasis, b: &CandidateBasis) -> Ordering {
    if a.is_constant() && b.is_constant() {
        return Ordering::Equal;
    }
    a.kind
        .ordinal()
        .cmp(&b.kind.ordinal())
        .then(a.param.partial_cmp(&b.param).unwrap_or(Ordering::Equal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_has_fifty_members_in_canonical_order() {
        let grid = candidate_grid();
        assert_eq!(grid.len(), 50);
        assert_eq!(grid[0], CandidateBasis::new(FamilyKind::LoglogPolynomial, 0.0));
        assert_eq!(grid[49], CandidateBasis::new(FamilyKind::Factorial, 1.0));
        // section sizes: 4 + 11 + 9 + 18 + 7 + 1
        let counts: Vec<usize> = FamilyKind::ALL
            .iter()
            .map(|k| grid.iter().filter(|b| b.kind == *k).count())
            .collect();
        assert_eq!(counts, vec![4, 11, 9, 18, 7, 1]);
    }

    #[test]
    fn grid_duplicate_free_except_constant_pair() {
        let grid = candidate_grid();
        let mut dupes = 0;
        for i in 0..grid.len() {
            for j in (i + 1)..grid.len() {
                if grid[i] == grid[j] {
                    panic!("exact duplicate at {i}/{j}");
                }
                if compare_simplicity(&grid[i], &grid[j]) == Ordering::Equal {
                    dupes += 1;
                }
            }
        }
        // the documented LOGLOG p=0 / LOG p=0 pair
        assert_eq!(dupes, 1);
    }

    #[test]
    fn ordinal_round_trip() {
        for kind in FamilyKind::ALL {
            assert_eq!(FamilyKind::from_ordinal(kind.ordinal()), Some(kind));
        }
        assert_eq!(FamilyKind::from_ordinal(6), None);
    }

    #[test]
    fn evaluate_known_values() {
        let poly2 = CandidateBasis::new(FamilyKind::Polynomial, 2.0);
        assert_relative_eq!(poly2.evaluate(10).unwrap(), 100.0);
        let log1 = CandidateBasis::new(FamilyKind::LogPolynomial, 1.0);
        assert_relative_eq!(log1.evaluate(8).unwrap(), 3.0);
        let fact = CandidateBasis::new(FamilyKind::Factorial, 1.0);
        assert_relative_eq!(fact.evaluate(5).unwrap(), 24.0);
    }

    #[test]
    fn loglog_domain_error_below_two() {
        let b = CandidateBasis::new(FamilyKind::LoglogPolynomial, 1.0);
        assert_eq!(b.evaluate(1), Err(EvalError::Domain { n: 1, min: 2 }));
        assert_relative_eq!(b.evaluate(2).unwrap(), 0.0);
    }

    #[test]
    fn power_and_factorial_overflow() {
        let pow5 = CandidateBasis::new(FamilyKind::Power, 5.0);
        assert_eq!(pow5.evaluate(1000), Err(EvalError::Overflow));
        let fact = CandidateBasis::new(FamilyKind::Factorial, 1.0);
        assert!(fact.evaluate(170).is_ok());
        assert_eq!(fact.evaluate(180), Err(EvalError::Overflow));
    }

    #[test]
    fn factorial_dominates_power_five_from_twenty() {
        let fact = CandidateBasis::new(FamilyKind::Factorial, 1.0);
        let pow5 = CandidateBasis::new(FamilyKind::Power, 5.0);
        for n in 20..=60 {
            assert!(fact.evaluate(n).unwrap() > pow5.evaluate(n).unwrap(), "n={n}");
        }
    }

    #[test]
    fn simplicity_order() {
        let log2 = CandidateBasis::new(FamilyKind::LogPolynomial, 2.0);
        let poly1 = CandidateBasis::new(FamilyKind::Polynomial, 1.0);
        assert_eq!(compare_simplicity(&log2, &poly1), Ordering::Less);
        let p13 = CandidateBasis::new(FamilyKind::Polynomial, 1.3);
        let p2 = CandidateBasis::new(FamilyKind::Polynomial, 2.0);
        assert_eq!(compare_simplicity(&p13, &p2), Ordering::Less);
        let loglog0 = CandidateBasis::new(FamilyKind::LoglogPolynomial, 0.0);
        let log0 = CandidateBasis::constant();
        assert_eq!(compare_simplicity(&loglog0, &log0), Ordering::Equal);
    }

    proptest! {
        #[test]
        fn monotone_in_n_over_grid(idx in 0usize..50, n in 2u64..60) {
            let basis = candidate_grid()[idx];
            let a = basis.evaluate(n).unwrap();
            let b = basis.evaluate(n + 1).unwrap();
            if basis.kind == FamilyKind::FractionalPower {
                prop_assert!(b < a);
            } else {
                prop_assert!(b >= a);
            }
        }

        #[test]
        fn polynomial_matches_powf(pi in 0usize..18, n in 1u64..1_000_000) {
            let p = [1.0, 1.3, 1.5, 1.7, 2.0, 2.5, 2.7, 3.0, 3.5, 4.0,
                     4.5, 5.0, 5.5, 6.0, 7.0, 8.0, 9.0, 10.0][pi];
            let b = CandidateBasis::new(FamilyKind::Polynomial, p);
            let got = b.evaluate(n).unwrap();
            let want = (n as f64).powf(p);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
}
