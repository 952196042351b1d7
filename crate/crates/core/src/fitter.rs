//! Closed-form least-squares fitting of metric series against the candidate
//! grid, with model selection by normalized RMSE.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::complexity_model::{
    candidate_grid, compare_simplicity, CandidateBasis, FamilyKind,
};
use crate::par;

/// One (input size, metric reading) observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub n: u64,
    pub value: f64,
}

impl Sample {
    pub fn new(n: u64, value: f64) -> Sample {
        Sample { n, value }
    }
}

/// The per-metric fit result: (FEATURE_TYPE, FEATURE_CONFIG, INTERCEPT, R-VAL).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitQuadruple {
    pub feature_type: FamilyKind,
    pub feature_config: f64,
    pub intercept: f64,
    pub r_val: f64,
}

/// Goodness of fit: RMS residual divided by the mean absolute observation
/// (0 when the observations are all zero), plus the number of points used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitScore {
    pub nrmse: f64,
    pub n_points: usize,
}

/// Why a candidate was discarded for a series.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FitReject {
    #[error("fewer than 3 usable samples with distinct sizes in the basis domain")]
    TooFewSamples,
    #[error("basis is constant over the sampled sizes")]
    ZeroVariance,
    #[error("basis evaluation overflowed")]
    Overflow,
    #[error("fitted slope is not positive")]
    NonPositiveSlope,
    #[error("fitted slope is not significantly positive")]
    InsignificantSlope,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 3 samples with distinct sizes, got {0}")]
    InsufficientData(usize),
}

/// A successful per-candidate fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateFit {
    pub r: f64,
    pub intercept: f64,
    pub score: FitScore,
}

/// Absolute nRMSE difference under which two candidates are considered tied
/// and the simpler one wins.
pub const NRMSE_TIE_EPS: f64 = 1e-9;

/// One-sided critical values of Student's t at alpha = 0.005, indexed by
/// degrees of freedom 1..=30; the asymptotic normal quantile beyond.
const T_CRIT_0005: [f64; 30] = [
    63.657, 9.925, 5.841, 4.604, 4.032, 3.707, 3.499, 3.355, 3.250, 3.169,
    3.106, 3.055, 3.012, 2.977, 2.947, 2.921, 2.898, 2.878, 2.861, 2.845,
    2.831, 2.819, 2.807, 2.797, 2.787, 2.779, 2.771, 2.763, 2.756, 2.750,
];

fn t_crit(df: usize) -> f64 {
    if df == 0 {
        f64::INFINITY
    } else if df <= 30 {
        T_CRIT_0005[df - 1]
    } else {
        2.576
    }
}

/// Collapses repeated measurements at the same size to their median and
/// returns the series sorted by size.
pub fn aggregate_repeats(samples: &[Sample]) -> Vec<Sample> {
    let mut by_n: std::collections::BTreeMap<u64, Vec<f64>> = Default::default();
    for s in samples {
        by_n.entry(s.n).or_default().push(s.value);
    }
    by_n.into_iter()
        .map(|(n, mut vs)| {
            vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = vs.len();
            let value = if m % 2 == 1 {
                vs[m / 2]
            } else {
                (vs[m / 2 - 1] + vs[m / 2]) / 2.0
            };
            Sample { n, value }
        })
        .collect()
}

/// Ordinary least squares of `value` on `g(n)` for one candidate.
///
/// Samples below the basis domain are skipped; at least 3 samples with
/// distinct sizes must remain. The constant basis uses the convention
/// r = mean(value), X = 0. Non-constant candidates are rejected when the
/// slope is non-positive or, on noisy series, not significantly positive
/// (one-sided t-test at alpha = 0.005); without that gate any two-parameter
/// candidate with a randomly positive slope would beat the constant model
/// in-sample on pure-noise series.
pub fn fit_candidate(samples: &[Sample], basis: &CandidateBasis) -> Result<CandidateFit, FitReject> {
    let mut gs = Vec::with_capacity(samples.len());
    let mut vs = Vec::with_capacity(samples.len());
    for s in samples {
        match basis.evaluate(s.n) {
            Ok(g) => {
                gs.push(g);
                vs.push(s.value);
            }
            Err(crate::complexity_model::EvalError::Domain { .. }) => continue,
            Err(crate::complexity_model::EvalError::Overflow) => return Err(FitReject::Overflow),
        }
    }
    let usable: std::collections::BTreeSet<u64> = samples
        .iter()
        .filter(|s| s.n >= basis.min_n())
        .map(|s| s.n)
        .collect();
    if usable.len() < 3 {
        return Err(FitReject::TooFewSamples);
    }
    let n = gs.len() as f64;
    let mean_v = vs.iter().sum::<f64>() / n;
    let mean_abs = vs.iter().map(|v| v.abs()).sum::<f64>() / n;

    if basis.is_constant() {
        // f(n) = r*1 + X is unidentifiable; convention r = mean, X = 0.
        if mean_v <= 0.0 {
            return Err(FitReject::NonPositiveSlope);
        }
        let rss: f64 = vs.iter().map(|v| (v - mean_v).powi(2)).sum();
        let nrmse = normalized_rmse(rss, n, mean_abs);
        return Ok(CandidateFit {
            r: mean_v,
            intercept: 0.0,
            score: FitScore { nrmse, n_points: gs.len() },
        });
    }

    let mean_g = gs.iter().sum::<f64>() / n;
    let sxx: f64 = gs.iter().map(|g| (g - mean_g).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitReject::ZeroVariance);
    }
    let sxy: f64 = gs
        .iter()
        .zip(&vs)
        .map(|(g, v)| (g - mean_g) * (v - mean_v))
        .sum();
    let r = sxy / sxx;
    let intercept = mean_v - r * mean_g;
    if r <= 0.0 {
        return Err(FitReject::NonPositiveSlope);
    }
    let rss: f64 = gs
        .iter()
        .zip(&vs)
        .map(|(g, v)| (v - (r * g + intercept)).powi(2))
        .sum();
    let nrmse = normalized_rmse(rss, n, mean_abs);
    // Slope significance gate; exact fits (residual at noise floor) pass.
    if nrmse > NRMSE_TIE_EPS && gs.len() > 2 {
        let df = gs.len() - 2;
        let se = (rss / df as f64 / sxx).sqrt();
        if se > 0.0 && r / se < t_crit(df) {
            return Err(FitReject::InsignificantSlope);
        }
    }
    Ok(CandidateFit {
        r,
        intercept,
        score: FitScore { nrmse, n_points: gs.len() },
    })
}

fn normalized_rmse(rss: f64, n: f64, mean_abs: f64) -> f64 {
    let rmse = (rss / n).sqrt();
    if mean_abs == 0.0 {
        if rmse == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        rmse / mean_abs
    }
}

/// Fits every grid candidate and selects the minimum-nRMSE survivor.
///
/// Ties within [`NRMSE_TIE_EPS`] go to the simpler basis; constant winners
/// are canonicalized to LOG p=0. If every candidate rejects (e.g. an
/// all-zero series) the degenerate constant quadruple
/// (LOG_POLYNOMIAL, 0, 0, mean) is returned, the only case where r may be 0.
pub fn select_best(samples: &[Sample]) -> Result<(FitQuadruple, FitScore), FitError> {
    let distinct: std::collections::BTreeSet<u64> = samples.iter().map(|s| s.n).collect();
    if distinct.len() < 3 {
        return Err(FitError::InsufficientData(distinct.len()));
    }
    // Canonicalize to a sorted, repeat-collapsed series so the result does
    // not depend on sample order (floating-point sums are order-sensitive).
    let samples = &aggregate_repeats(samples)[..];
    let grid = candidate_grid();
    // Parallel map, sequential reduce in canonical grid order so the
    // tie-break is deterministic regardless of scheduling.
    let fits = par::map_slice(&grid, |basis| fit_candidate(samples, basis).ok());

    let mut best: Option<(CandidateBasis, CandidateFit)> = None;
    for (basis, fit) in grid.iter().zip(fits) {
        let Some(fit) = fit else { continue };
        best = Some(match best {
            None => (*basis, fit),
            Some((bb, bf)) => {
                let diff = fit.score.nrmse - bf.score.nrmse;
                let challenger_wins = if diff.abs() <= NRMSE_TIE_EPS {
                    compare_simplicity(basis, &bb) == Ordering::Less
                } else {
                    diff < 0.0
                };
                if challenger_wins {
                    (*basis, fit)
                } else {
                    (bb, bf)
                }
            }
        });
    }

    // Effect-size gate: on a near-flat series a slope can be statistically
    // significant yet practically meaningless (it explains little of the
    // scatter). Require a non-constant winner to at least halve the constant
    // fit's error; otherwise call the series constant.
    if let Some((basis, fit)) = &best {
        if !basis.is_constant() && fit.score.nrmse > NRMSE_TIE_EPS {
            if let Ok(cf) = fit_candidate(samples, &CandidateBasis::constant()) {
                if fit.score.nrmse > 0.5 * cf.score.nrmse {
                    best = Some((CandidateBasis::constant(), cf));
                }
            }
        }
    }

    match best {
        Some((basis, fit)) => {
            let canonical = if basis.is_constant() {
                CandidateBasis::constant()
            } else {
                basis
            };
            Ok((
                FitQuadruple {
                    feature_type: canonical.kind,
                    feature_config: canonical.param,
                    intercept: fit.intercept,
                    r_val: fit.r,
                },
                fit.score,
            ))
        }
        None => {
            let n = samples.len() as f64;
            let mean = samples.iter().map(|s| s.value).sum::<f64>() / n;
            let rss: f64 = samples.iter().map(|s| (s.value - mean).powi(2)).sum();
            let mean_abs = samples.iter().map(|s| s.value.abs()).sum::<f64>() / n;
            Ok((
                FitQuadruple {
                    feature_type: FamilyKind::LogPolynomial,
                    feature_config: 0.0,
                    intercept: 0.0,
                    r_val: mean,
                },
                FitScore {
                    nrmse: normalized_rmse(rss, n, mean_abs),
                    n_points: samples.len(),
                },
            ))
        }
    }
}
