//! Value-at-risk over a finite scenario distribution.
//!
//! The alpha-quantile of a weighted sample is the value at the first
//! position of the ascending ordering whose cumulative probability reaches
//! `alpha`. The ordering itself (and the prefix of scenarios it selects) is
//! reused by the preprocessing bounds and the solvers.

use crate::error::{Error, Result};
use crate::mdp::{expected_cost, Policy, UncertainMdp};
use crate::scalar::Scalar;

/// One value and one probability per scenario, plus the confidence level.
#[derive(Debug, Clone)]
pub struct WeightedSample<T> {
    values: Vec<T>,
    probs: Vec<T>,
    alpha: T,
}

impl<T: Scalar> WeightedSample<T> {
    /// Validates matching lengths, a probability vector summing to 1, and
    /// `alpha` in `(0, 1]`.
    pub fn new(values: Vec<T>, probs: Vec<T>, alpha: T) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        check_alpha(alpha)?;
        let tol = T::prob_tol();
        let mut sum = T::zero();
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < T::zero() || p > T::one() + tol {
                return Err(Error::ProbabilityEntry {
                    name: "probs",
                    index: i,
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
            sum = sum + p;
        }
        if (sum - T::one()).abs() > tol {
            return Err(Error::ProbabilityVectorSum {
                name: "probs",
                sum: sum.to_f64().unwrap_or(f64::NAN),
                tol: tol.to_f64().unwrap_or(1e-9),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("sample value {i}")));
            }
        }
        Ok(Self { values, probs, alpha })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
}

pub(crate) fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::AlphaOutOfRange(alpha.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// Result of a quantile scan: the alpha-quantile value, the number of
/// scenarios in the covering prefix, and the full ascending ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct VarResult<T> {
    /// The alpha-quantile of the sample.
    pub value: T,
    /// Smallest `k` such that the first `k` ordered scenarios cover `alpha`.
    pub cut: usize,
    /// Permutation of scenario indices, ascending by value (ties by index).
    pub order: Vec<usize>,
}

impl<T: Scalar> VarResult<T> {
    /// Scenario indices of the covering prefix, in ascending index order.
    pub fn satisfied_set(&self) -> Vec<usize> {
        let mut set: Vec<usize> = self.order[..self.cut].to_vec();
        set.sort_unstable();
        set
    }
}

/// The alpha-quantile of a weighted sample.
///
/// Sorts values ascending (ties broken by scenario index, so the result is
/// deterministic), then takes the value at the smallest prefix whose
/// probability reaches `alpha`. `alpha = 1` short-circuits to the maximum,
/// sidestepping cumulative rounding at the top of the scan.
pub fn var_alpha<T: Scalar>(sample: &WeightedSample<T>) -> Result<VarResult<T>> {
    let n = sample.values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        sample.values[a]
            .partial_cmp(&sample.values[b])
            .expect("sample values are finite")
            .then(a.cmp(&b))
    });

    if sample.alpha == T::one() {
        return Ok(VarResult { value: sample.values[order[n - 1]], cut: n, order });
    }

    let mut cumulative = T::zero();
    for (pos, &s) in order.iter().enumerate() {
        cumulative = cumulative + sample.probs[s];
        if cumulative >= sample.alpha {
            return Ok(VarResult { value: sample.values[s], cut: pos + 1, order });
        }
    }
    // Cumulative rounding left the total a hair under alpha; the full set is
    // the only valid cover.
    Ok(VarResult { value: sample.values[order[n - 1]], cut: n, order })
}

/// Per-scenario expected costs of a policy and their alpha-quantile.
///
/// Returns the quantile value and the satisfied set: the ordered prefix of
/// scenarios whose costs are covered by the quantile (the scenarios a
/// feasible indicator vector would select).
pub fn var_of_policy<T: Scalar>(
    mdp: &UncertainMdp<T>,
    pol: &Policy<T>,
    alpha: T,
) -> Result<(T, Vec<usize>)> {
    check_alpha(alpha)?;
    let mut values = Vec::with_capacity(mdp.n_scenarios());
    for s in 0..mdp.n_scenarios() {
        values.push(expected_cost(mdp, s, pol)?);
    }
    let sample = WeightedSample::new(values, mdp.probs().to_vec(), alpha)?;
    let result = var_alpha(&sample)?;
    Ok((result.value, result.satisfied_set()))
}
