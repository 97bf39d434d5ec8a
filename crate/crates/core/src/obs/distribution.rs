//! Univariate observation laws and finite mixtures of them.
//!
//! Continuous laws live on `[0, ∞)`; discrete laws on the nonnegative
//! integers. Observations are carried as the scalar type in both cases, a
//! discrete observation being an integral value.
//!
//! Geometric convention: support `k ∈ {0, 1, 2, …}` (failures before the first
//! success) with pmf `θ(1 − θ)^k`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SearchError};
use crate::scalar::{log_add_exp, Scalar};

/// Tolerance on the total mass of a tabulated pmf.
pub const TABULATED_MASS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportKind {
    Continuous,
    Discrete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec<T> {
    /// Density `λ e^{−λy}` on `y ≥ 0`.
    Exponential { rate: T },
    /// Pmf `θ(1 − θ)^k` on `k ≥ 0`.
    Geometric { success: T },
    /// Pmf given by `probs[k]` on `k = 0..probs.len()`.
    Tabulated { probs: Vec<T> },
}

impl<T: Scalar> DistributionSpec<T> {
    pub fn exponential(rate: T) -> Result<Self> {
        let d = Self::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn geometric(success: T) -> Result<Self> {
        let d = Self::Geometric { success };
        d.validate()?;
        Ok(d)
    }

    pub fn tabulated(probs: Vec<T>) -> Result<Self> {
        let d = Self::Tabulated { probs };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Exponential { rate } => {
                if !(rate.is_finite() && *rate > T::zero()) {
                    return Err(SearchError::invalid("rate", format!("must be > 0, got {rate}")));
                }
            }
            Self::Geometric { success } => {
                if !(*success > T::zero() && *success < T::one()) {
                    return Err(SearchError::invalid(
                        "success",
                        format!("must lie strictly inside (0, 1), got {success}"),
                    ));
                }
            }
            Self::Tabulated { probs } => {
                if probs.is_empty() {
                    return Err(SearchError::invalid("probs", "must not be empty"));
                }
                if let Some((k, p)) = probs
                    .iter()
                    .enumerate()
                    .find(|(_, p)| !(p.is_finite() && **p >= T::zero()))
                {
                    return Err(SearchError::invalid(
                        format!("probs[{k}]"),
                        format!("must be a nonnegative number, got {p}"),
                    ));
                }
                let total: T = probs.iter().copied().sum();
                if (total - T::one()).abs().as_f64() > TABULATED_MASS_TOL {
                    return Err(SearchError::invalid(
                        "probs",
                        format!("must sum to 1 (within {TABULATED_MASS_TOL:e}), got {total}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Geometric { .. } => "geometric",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    pub fn support_kind(&self) -> SupportKind {
        match self {
            Self::Exponential { .. } => SupportKind::Continuous,
            Self::Geometric { .. } | Self::Tabulated { .. } => SupportKind::Discrete,
        }
    }

    /// Whether `y` is a point of the sample space (not necessarily of
    /// positive density).
    pub fn in_domain(&self, y: T) -> bool {
        if !y.is_finite() || y < T::zero() {
            return false;
        }
        match self {
            Self::Exponential { .. } => true,
            Self::Geometric { .. } => y.fract() == T::zero(),
            Self::Tabulated { probs } => {
                y.fract() == T::zero() && y < T::from_usize_lossy(probs.len())
            }
        }
    }

    /// Log density (or log pmf). `-∞` where the density vanishes inside the
    /// sample space; an error outside it.
    pub fn ln_density(&self, y: T) -> Result<T> {
        if !self.in_domain(y) {
            return Err(SearchError::OutsideSupport {
                value: y.as_f64(),
                law: self.name(),
            });
        }
        Ok(match self {
            Self::Exponential { rate } => rate.ln() - *rate * y,
            Self::Geometric { success } => success.ln() + y * (T::one() - *success).ln(),
            Self::Tabulated { probs } => {
                let k = y.to_usize().expect("integral observation");
                probs[k].ln()
            }
        })
    }

    pub fn density(&self, y: T) -> Result<T> {
        self.ln_density(y).map(T::exp)
    }

    pub fn mean(&self) -> T {
        match self {
            Self::Exponential { rate } => rate.recip(),
            Self::Geometric { success } => (T::one() - *success) / *success,
            Self::Tabulated { probs } => probs
                .iter()
                .enumerate()
                .map(|(k, p)| T::from_usize_lossy(k) * *p)
                .sum(),
        }
    }

    /// `P(X > y)` for continuous laws, `P(X ≥ y)` for discrete ones.
    pub fn tail_mass(&self, y: T) -> T {
        if y <= T::zero() {
            return T::one();
        }
        match self {
            Self::Exponential { rate } => (-*rate * y).exp(),
            Self::Geometric { success } => (y.ceil() * (T::one() - *success).ln()).exp(),
            Self::Tabulated { probs } => {
                let start = y.ceil().to_usize().unwrap_or(usize::MAX);
                probs.iter().skip(start).copied().sum()
            }
        }
    }

    /// Characteristic length scale used to place quadrature breakpoints.
    pub fn scale(&self) -> T {
        match self {
            Self::Exponential { rate } => rate.recip(),
            _ => self.mean().max(T::one()),
        }
    }

    /// Draw one observation by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u = T::open01(rng);
        match self {
            Self::Exponential { rate } => -u.ln() / *rate,
            Self::Geometric { success } => (u.ln() / (T::one() - *success).ln()).floor(),
            Self::Tabulated { probs } => {
                let mut acc = T::zero();
                for (k, p) in probs.iter().enumerate() {
                    acc = acc + *p;
                    if u < acc {
                        return T::from_usize_lossy(k);
                    }
                }
                // rounding left u above the accumulated mass: last positive cell
                let last = probs.iter().rposition(|p| *p > T::zero()).unwrap_or(0);
                T::from_usize_lossy(last)
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> DistributionSpec<U> {
        let c = |v: T| U::lit(v.as_f64());
        match self {
            Self::Exponential { rate } => DistributionSpec::Exponential { rate: c(*rate) },
            Self::Geometric { success } => DistributionSpec::Geometric { success: c(*success) },
            Self::Tabulated { probs } => DistributionSpec::Tabulated {
                probs: probs.iter().map(|p| c(*p)).collect(),
            },
        }
    }
}

/// `r·f(y) + (1 − r)·g(y)`: the anomalous-cell law given state-0 belief `r`.
pub fn mixture_density<T: Scalar>(
    r: T,
    f: &DistributionSpec<T>,
    g: &DistributionSpec<T>,
    y: T,
) -> Result<T> {
    check_probability("r", r)?;
    let lf = f.ln_density(y)?;
    let lg = g.ln_density(y)?;
    Ok(r * lf.exp() + (T::one() - r) * lg.exp())
}

pub(crate) fn check_probability<T: Scalar>(field: &str, p: T) -> Result<()> {
    if p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(SearchError::invalid(field, format!("must lie in [0, 1], got {p}")))
    }
}

/// A base law or a finite mixture of laws; mixtures may nest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law<T> {
    Base(DistributionSpec<T>),
    Mixture(Vec<(T, Law<T>)>),
}

impl<T: Scalar> From<DistributionSpec<T>> for Law<T> {
    fn from(d: DistributionSpec<T>) -> Self {
        Law::Base(d)
    }
}

impl<T: Scalar> Law<T> {
    /// `g̃_r = r·f + (1 − r)·g`, collapsed to a base law at `r ∈ {0, 1}`.
    pub fn anomalous(r: T, f: &DistributionSpec<T>, g: &DistributionSpec<T>) -> Self {
        if r >= T::one() {
            Law::Base(f.clone())
        } else if r <= T::zero() {
            Law::Base(g.clone())
        } else {
            Law::Mixture(vec![
                (r, Law::Base(f.clone())),
                (T::one() - r, Law::Base(g.clone())),
            ])
        }
    }

    /// Mixture of arbitrary components. Zero-weight components are dropped
    /// and a single survivor is returned unwrapped.
    pub fn mixture(components: Vec<(T, Law<T>)>) -> Result<Self> {
        let total: T = components.iter().map(|(w, _)| *w).sum();
        if let Some((i, (w, _))) = components
            .iter()
            .enumerate()
            .find(|(_, (w, _))| !(w.is_finite() && *w >= T::zero()))
        {
            return Err(SearchError::invalid(
                format!("components[{i}].weight"),
                format!("must be nonnegative, got {w}"),
            ));
        }
        if (total - T::one()).abs().as_f64() > 1e-9 {
            return Err(SearchError::invalid(
                "components",
                format!("weights must sum to 1, got {total}"),
            ));
        }
        let kept: Vec<_> = components.into_iter().filter(|(w, _)| *w > T::zero()).collect();
        let kinds: Vec<SupportKind> = kept.iter().map(|(_, l)| l.support_kind()).collect();
        if kinds.windows(2).any(|w| w[0] != w[1]) {
            return Err(SearchError::MixedSupport("mixture components".into()));
        }
        match kept.len() {
            0 => Err(SearchError::Empty("mixture with no positive-weight component")),
            1 => Ok(kept.into_iter().next().map(|(_, l)| l).expect("one component")),
            _ => Ok(Law::Mixture(kept)),
        }
    }

    pub fn support_kind(&self) -> SupportKind {
        match self {
            Law::Base(d) => d.support_kind(),
            Law::Mixture(c) => c[0].1.support_kind(),
        }
    }

    pub fn in_domain(&self, y: T) -> bool {
        match self {
            Law::Base(d) => d.in_domain(y),
            Law::Mixture(c) => c.iter().all(|(_, l)| l.in_domain(y)),
        }
    }

    pub fn ln_density(&self, y: T) -> Result<T> {
        match self {
            Law::Base(d) => d.ln_density(y),
            Law::Mixture(c) => {
                let mut acc = T::neg_infinity();
                for (w, l) in c {
                    acc = log_add_exp(acc, w.ln() + l.ln_density(y)?);
                }
                Ok(acc)
            }
        }
    }

    pub fn density(&self, y: T) -> Result<T> {
        self.ln_density(y).map(T::exp)
    }

    pub fn tail_mass(&self, y: T) -> T {
        match self {
            Law::Base(d) => d.tail_mass(y),
            Law::Mixture(c) => c.iter().map(|(w, l)| *w * l.tail_mass(y)).sum(),
        }
    }

    /// All base laws reachable through the mixture tree.
    pub fn bases(&self) -> Vec<&DistributionSpec<T>> {
        match self {
            Law::Base(d) => vec![d],
            Law::Mixture(c) => c.iter().flat_map(|(_, l)| l.bases()).collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            Law::Base(d) => d.sample(rng),
            Law::Mixture(c) => {
                let u = T::open01(rng);
                let mut acc = T::zero();
                for (w, l) in c {
                    acc = acc + *w;
                    if u < acc {
                        return l.sample(rng);
                    }
                }
                c.last().expect("nonempty mixture").1.sample(rng)
            }
        }
    }
}
