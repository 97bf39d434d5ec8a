//! Forward recursion for the state-0 probability of the anomalous chain.

use crate::error::{Result, SearchError};
use crate::obs::{check_probability, DistributionSpec, HmmParams};
use crate::scalar::Scalar;

/// One filtering-plus-prediction step after observing `y`:
/// `N/D` with `N = p0(1 − α)f(y) + (1 − p0)β g(y)` and
/// `D = p0 f(y) + (1 − p0) g(y)`.
pub fn belief_update_observed<T: Scalar>(
    params: &HmmParams<T>,
    p0: T,
    f: &DistributionSpec<T>,
    g: &DistributionSpec<T>,
    y: T,
) -> Result<T> {
    check_probability("p0", p0)?;
    update_from_logs(params, p0, f.ln_density(y)?, g.ln_density(y)?, y)
}

pub(crate) fn update_from_logs<T: Scalar>(
    params: &HmmParams<T>,
    p0: T,
    ln_f: T,
    ln_g: T,
    y: T,
) -> Result<T> {
    // scale both likelihoods by the larger one
    let top = ln_f.max(ln_g);
    if top == T::neg_infinity() {
        return Err(SearchError::ZeroEvidence { value: y.as_f64() });
    }
    let fy = (ln_f - top).exp();
    let gy = (ln_g - top).exp();
    let one = T::one();
    let numerator = p0 * (one - params.alpha) * fy + (one - p0) * params.beta * gy;
    let denominator = p0 * fy + (one - p0) * gy;
    if denominator <= T::zero() {
        return Err(SearchError::ZeroEvidence { value: y.as_f64() });
    }
    Ok((numerator / denominator).max(T::zero()).min(one))
}

/// Prediction step alone: `p0(1 − α) + (1 − p0)β`.
pub fn belief_update_transition_only<T: Scalar>(params: &HmmParams<T>, p0: T) -> T {
    let one = T::one();
    (p0 * (one - params.alpha) + (one - p0) * params.beta)
        .max(T::zero())
        .min(one)
}
