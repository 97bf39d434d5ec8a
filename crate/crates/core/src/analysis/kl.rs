//! Kullback–Leibler divergences between observation laws.
//!
//! Exponential/exponential and geometric/geometric pairs have closed forms.
//! Everything else, mixtures in particular, goes through adaptive quadrature
//! (continuous laws) or truncated summation (discrete laws). The numeric
//! route is also exposed on its own so the closed forms can be cross-checked.

use std::cell::Cell;

use serde::Serialize;

use super::quadrature::integrate;
use crate::error::{Result, SearchError};
use crate::obs::{DistributionSpec, Law, SupportKind};
use crate::scalar::Scalar;

/// Both tails beyond the integration range carry less than this mass.
const TAIL_LOG_MASS: f64 = 46.0; // e^{-46} ≈ 1e-20
/// Discrete summation stops once both tail masses fall below this.
pub const SUMMATION_TAIL: f64 = 1e-14;
const MAX_INTERVALS: usize = 4000;
const MAX_TERMS: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KlMethod {
    ClosedForm,
    Quadrature,
    Summation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KlValue<T> {
    pub value: T,
    /// Absolute error estimate; zero for closed forms.
    pub abs_err: T,
    pub method: KlMethod,
    /// `p` puts mass where `q` has none; `value` is then `+∞`.
    pub support_violation: bool,
}

impl<T: Scalar> KlValue<T> {
    fn infinite(method: KlMethod) -> Self {
        Self {
            value: T::infinity(),
            abs_err: T::zero(),
            method,
            support_violation: true,
        }
    }
}

/// `D(p‖q)` for two base laws of the same family, when a closed form exists.
pub fn kl_closed_form<T: Scalar>(p: &DistributionSpec<T>, q: &DistributionSpec<T>) -> Option<T> {
    use DistributionSpec::*;
    match (p, q) {
        // ln(a/b) + b/a − 1
        (Exponential { rate: a }, Exponential { rate: b }) => Some((*a / *b).ln() + *b / *a - T::one()),
        // ln(p/q) + ((1 − p)/p)·ln((1 − p)/(1 − q))
        (Geometric { success: a }, Geometric { success: b }) => {
            let one = T::one();
            Some((*a / *b).ln() + (one - *a) / *a * ((one - *a) / (one - *b)).ln())
        }
        _ => None,
    }
}

/// `D(p‖q)`, by closed form when available and numerically otherwise.
pub fn kl_divergence<T: Scalar>(p: &Law<T>, q: &Law<T>) -> Result<KlValue<T>> {
    if let (Law::Base(a), Law::Base(b)) = (p, q) {
        if let Some(value) = kl_closed_form(a, b) {
            return Ok(KlValue {
                value,
                abs_err: T::zero(),
                method: KlMethod::ClosedForm,
                support_violation: false,
            });
        }
    }
    kl_numeric(p, q)
}

/// `D(p‖q)` by quadrature or summation, never by closed form.
pub fn kl_numeric<T: Scalar>(p: &Law<T>, q: &Law<T>) -> Result<KlValue<T>> {
    match (p.support_kind(), q.support_kind()) {
        (SupportKind::Continuous, SupportKind::Continuous) => kl_quadrature(p, q),
        (SupportKind::Discrete, SupportKind::Discrete) => kl_summation(p, q),
        _ => Err(SearchError::MixedSupport("KL between continuous and discrete laws".into())),
    }
}

fn rates<T: Scalar>(law: &Law<T>) -> Result<Vec<T>> {
    law.bases()
        .into_iter()
        .map(|d| match d {
            DistributionSpec::Exponential { rate } => Ok(*rate),
            other => Err(SearchError::MixedSupport(format!(
                "no quadrature support for continuous {} law",
                other.name()
            ))),
        })
        .collect()
}

fn kl_quadrature<T: Scalar>(p: &Law<T>, q: &Law<T>) -> Result<KlValue<T>> {
    let p_rates = rates(p)?;
    let q_rates = rates(q)?;
    let slowest = p_rates.iter().copied().fold(T::infinity(), T::min);
    let upper = T::lit(TAIL_LOG_MASS) / slowest;

    let multipliers = [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let mut points = vec![T::zero(), upper];
    for rate in p_rates.iter().chain(&q_rates) {
        for m in multipliers {
            let x = T::lit(m) / *rate;
            if x > T::zero() && x < upper {
                points.push(x);
            }
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    points.dedup();

    let violation = Cell::new(false);
    let integrand = |y: T| -> T {
        let lp = p.ln_density(y).unwrap_or(T::neg_infinity());
        if lp == T::neg_infinity() {
            return T::zero();
        }
        let lq = q.ln_density(y).unwrap_or(T::neg_infinity());
        if lq == T::neg_infinity() {
            violation.set(true);
            return T::zero();
        }
        lp.exp() * (lp - lq)
    };

    let eps = T::epsilon().as_f64();
    let abs_tol = T::lit((1e-11_f64).max(eps * 1e3));
    let rel_tol = T::lit((1e-13_f64).max(eps * 10.0));
    let result = integrate(&integrand, &points, abs_tol, rel_tol, MAX_INTERVALS)?;
    if violation.get() {
        return Ok(KlValue::infinite(KlMethod::Quadrature));
    }
    // mass beyond `upper` decays at least like e^{-slowest·y}
    let tail = integrand(upper).abs() * T::lit(2.0) / slowest;
    Ok(KlValue {
        value: result.value,
        abs_err: result.abs_err + tail,
        method: KlMethod::Quadrature,
        support_violation: false,
    })
}

fn kl_summation<T: Scalar>(p: &Law<T>, q: &Law<T>) -> Result<KlValue<T>> {
    let cutoff = T::lit(SUMMATION_TAIL);
    let mut sum = T::zero();
    let mut compensation = T::zero();
    let mut last_term = T::zero();
    for k in 0..MAX_TERMS {
        let y = T::from_usize_lossy(k);
        let lp = if p.in_domain(y) { p.ln_density(y)? } else { T::neg_infinity() };
        if lp > T::neg_infinity() {
            let lq = if q.in_domain(y) { q.ln_density(y)? } else { T::neg_infinity() };
            if lq == T::neg_infinity() {
                return Ok(KlValue::infinite(KlMethod::Summation));
            }
            // Neumaier summation
            let term = lp.exp() * (lp - lq);
            let t = sum + term;
            if sum.abs() >= term.abs() {
                compensation = compensation + ((sum - t) + term);
            } else {
                compensation = compensation + ((term - t) + sum);
            }
            sum = t;
            last_term = term;
        }
        let next = T::from_usize_lossy(k + 1);
        let p_tail = p.tail_mass(next);
        if p_tail < cutoff && q.tail_mass(next) < cutoff {
            let abs_err = p_tail * (last_term.abs() + T::one()) + T::epsilon() * sum.abs();
            return Ok(KlValue {
                value: sum + compensation,
                abs_err,
                method: KlMethod::Summation,
                support_violation: false,
            });
        }
    }
    Err(SearchError::Quadrature {
        lo: 0.0,
        hi: MAX_TERMS as f64,
        estimate: (sum + compensation).as_f64(),
        error: f64::NAN,
        intervals: MAX_TERMS,
    })
}
