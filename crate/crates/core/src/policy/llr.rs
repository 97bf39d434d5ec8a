use crate::error::{Result, SearchError};
use crate::obs::{check_probability, DistributionSpec, Law};
use crate::scalar::{log_add_exp, Scalar};

/// Default magnitude cap on a single-sample LLR.
pub const DEFAULT_LLR_CLAMP: f64 = 50.0;

/// `ln(g̃_r(y) / f(y))` from the two log densities, in log space.
pub(crate) fn mixture_llr_from_logs<T: Scalar>(r: T, ln_f: T, ln_g: T, y: T) -> Result<T> {
    if ln_f == T::neg_infinity() && ln_g == T::neg_infinity() {
        return Err(SearchError::ZeroEvidence { value: y.as_f64() });
    }
    // ln(r·f + (1 − r)·g) − ln f = ln(r + (1 − r)·g/f)
    Ok(log_add_exp(r.ln(), (T::one() - r).ln() + (ln_g - ln_f)))
}

/// LLR of one observation under the belief-`r` mixture against the normal
/// law. Unclamped: `+∞` when `f(y) = 0 < g(y)`.
pub fn llr<T: Scalar>(
    f: &DistributionSpec<T>,
    g: &DistributionSpec<T>,
    r: T,
    y: T,
) -> Result<T> {
    check_probability("r", r)?;
    mixture_llr_from_logs(r, f.ln_density(y)?, g.ln_density(y)?, y)
}

/// LLR of a static anomalous law against the normal one.
pub fn static_llr<T: Scalar>(anomalous: &Law<T>, f: &DistributionSpec<T>, y: T) -> Result<T> {
    let ln_f = f.ln_density(y)?;
    let ln_g = anomalous.ln_density(y)?;
    match (ln_f == T::neg_infinity(), ln_g == T::neg_infinity()) {
        (true, true) => Err(SearchError::ZeroEvidence { value: y.as_f64() }),
        _ => Ok(ln_g - ln_f),
    }
}

/// Clamp to `[−cap, cap]`; the flag reports whether clamping happened.
pub fn clamp_llr<T: Scalar>(value: T, cap: T) -> (T, bool) {
    if value > cap {
        (cap, true)
    } else if value < -cap {
        (-cap, true)
    } else {
        (value, false)
    }
}
