//! Two-state hidden Markov chain of the anomalous cell.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SearchError};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HiddenState {
    Normal,
    Abnormal,
}

/// Transition matrix `[[1 − α, α], [β, 1 − β]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmParams<T> {
    /// P(0 → 1)
    pub alpha: T,
    /// P(1 → 0)
    pub beta: T,
}

impl<T: Scalar> HmmParams<T> {
    /// Ergodic chain: both probabilities strictly inside (0, 1).
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// Any transition probabilities in `[0, 1]`, including absorbing and
    /// deterministic chains. The stationary law is undefined when
    /// `α + β = 0`.
    pub fn degenerate(alpha: T, beta: T) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(SearchError::invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > T::zero() && v < T::one()) {
                return Err(SearchError::invalid(
                    name,
                    format!("must lie strictly inside (0, 1), got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// `β / (α + β)`.
    pub fn stationary_p0(&self) -> T {
        self.beta / (self.alpha + self.beta)
    }

    pub fn stationary_state<R: Rng + ?Sized>(&self, rng: &mut R) -> HiddenState {
        if T::open01(rng) < self.stationary_p0() {
            HiddenState::Normal
        } else {
            HiddenState::Abnormal
        }
    }

    pub fn cast<U: Scalar>(&self) -> HmmParams<U> {
        HmmParams {
            alpha: U::lit(self.alpha.as_f64()),
            beta: U::lit(self.beta.as_f64()),
        }
    }
}

/// One transition of the chain.
pub fn hmm_step<T: Scalar, R: Rng + ?Sized>(
    params: &HmmParams<T>,
    state: HiddenState,
    rng: &mut R,
) -> HiddenState {
    let u = T::open01(rng);
    match state {
        HiddenState::Normal if u < params.alpha => HiddenState::Abnormal,
        HiddenState::Normal => HiddenState::Normal,
        HiddenState::Abnormal if u < params.beta => HiddenState::Normal,
        HiddenState::Abnormal => HiddenState::Abnormal,
    }
}
