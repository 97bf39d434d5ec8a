//! Oracle rate functions and the asymptotic predictors built on them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kl::{kl_divergence, kl_numeric};
use crate::error::{Result, SearchError};
use crate::obs::{check_probability, DistributionSpec, Law};
use crate::scalar::Scalar;

/// Belief levels `P_d` revealed by the oracle, together with the stationary
/// weight of each level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OraclePalette<T> {
    pub levels: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> OraclePalette<T> {
    pub fn new(levels: Vec<T>, weights: Vec<T>) -> Result<Self> {
        let p = Self { levels, weights };
        p.validate()?;
        Ok(p)
    }

    pub fn single(level: T) -> Result<Self> {
        Self::new(vec![level], vec![T::one()])
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(SearchError::invalid("levels", "palette must not be empty"));
        }
        if self.levels.len() != self.weights.len() {
            return Err(SearchError::invalid(
                "weights",
                format!("{} weights for {} levels", self.weights.len(), self.levels.len()),
            ));
        }
        for (i, p) in self.levels.iter().enumerate() {
            check_probability(&format!("levels[{i}]"), *p)?;
        }
        for (i, w) in self.weights.iter().enumerate() {
            check_probability(&format!("weights[{i}]"), *w)?;
        }
        let total: T = self.weights.iter().copied().sum();
        if (total - T::one()).abs().as_f64() > 1e-12 {
            return Err(SearchError::invalid(
                "weights",
                format!("must sum to 1 within 1e-12, got {total}"),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `Σ_d w_d P_d`: the level of the marginal anomalous law.
    pub fn mean_level(&self) -> T {
        self.levels.iter().zip(&self.weights).map(|(p, w)| *p * *w).sum()
    }

    /// Index drawn with probability `weights[d]`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = T::open01(rng);
        let mut acc = T::zero();
        for (d, w) in self.weights.iter().enumerate() {
            acc = acc + *w;
            if u < acc {
                return d;
            }
        }
        self.weights.iter().rposition(|w| *w > T::zero()).unwrap_or(0)
    }

    /// Marginal anomalous law `Σ_d w_d g̃_d`, which is `g̃` at the mean level.
    pub fn marginal_law(&self, f: &DistributionSpec<T>, g: &DistributionSpec<T>) -> Law<T> {
        Law::anomalous(self.mean_level(), f, g)
    }

    pub fn cast<U: Scalar>(&self) -> OraclePalette<U> {
        OraclePalette {
            levels: self.levels.iter().map(|v| U::lit(v.as_f64())).collect(),
            weights: self.weights.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport<T> {
    /// `I*_d(M, K)` for each palette level.
    pub per_level: Vec<T>,
    pub weights: Vec<T>,
    /// `I*(M, K) = Σ_d w_d I*_d(M, K)`.
    pub i_star: T,
}

impl<T: Scalar> RateReport<T> {
    /// Asymptotic expected stopping time `−ln c / I*`.
    pub fn predicted_delay(&self, c: T) -> T {
        -c.ln() / self.i_star
    }

    /// Asymptotic Bayes risk `−c ln c / I*`.
    pub fn predicted_risk(&self, c: T) -> T {
        -c * c.ln() / self.i_star
    }
}

fn check_counts(cells: usize, probes: usize) -> Result<()> {
    if cells < 2 {
        return Err(SearchError::invalid("cells", format!("need at least 2 cells, got {cells}")));
    }
    if probes == 0 || probes > cells {
        return Err(SearchError::invalid(
            "probes",
            format!("must lie in 1..={cells}, got {probes}"),
        ));
    }
    Ok(())
}

/// Rate of a single anomalous law `ĝ`: `D(ĝ‖f) + ((K−1)/(M−1))·D(f‖ĝ)`.
pub fn rate_for_law<T: Scalar>(
    f: &DistributionSpec<T>,
    anomalous: &Law<T>,
    cells: usize,
    probes: usize,
) -> Result<T> {
    check_counts(cells, probes)?;
    let normal = Law::Base(f.clone());
    let forward = kl_divergence(anomalous, &normal)?.value;
    if probes == 1 {
        return Ok(forward);
    }
    let share = T::from_usize_lossy(probes - 1) / T::from_usize_lossy(cells - 1);
    Ok(forward + share * kl_divergence(&normal, anomalous)?.value)
}

/// `I*_d(M, K)` for belief level `P_d`, with `g̃_d = P_d·f + (1 − P_d)·g`.
pub fn rate_i_d<T: Scalar>(
    f: &DistributionSpec<T>,
    g: &DistributionSpec<T>,
    level: T,
    cells: usize,
    probes: usize,
) -> Result<T> {
    check_probability("level", level)?;
    rate_for_law(f, &Law::anomalous(level, f, g), cells, probes)
}

/// Weighted rate over an oracle palette.
pub fn rate_i_star<T: Scalar>(
    f: &DistributionSpec<T>,
    g: &DistributionSpec<T>,
    palette: &OraclePalette<T>,
    cells: usize,
    probes: usize,
) -> Result<RateReport<T>> {
    palette.validate()?;
    let per_level = palette
        .levels
        .iter()
        .map(|p| rate_i_d(f, g, *p, cells, probes))
        .collect::<Result<Vec<_>>>()?;
    let i_star = per_level.iter().zip(&palette.weights).map(|(i, w)| *i * *w).sum();
    Ok(RateReport {
        per_level,
        weights: palette.weights.clone(),
        i_star,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixtureKlCheck<T> {
    /// `Σ_d w_d D(g_d‖f)`
    pub lhs: T,
    /// `D(Σ_d w_d g_d ‖ f)`
    pub rhs: T,
    /// `lhs − rhs`
    pub slack: T,
    /// `Σ_d w_d D(g_d‖ḡ)`, the expected posterior divergence, computed
    /// directly. Equals `slack` up to numerical error.
    pub posterior_term: T,
    pub tol: T,
    pub holds: bool,
}

/// Checks `Σ_d w_d D(g_d‖f) ≥ D(Σ_d w_d g_d ‖ f)` numerically.
pub fn verify_mixture_kl_inequality<T: Scalar>(
    f: &Law<T>,
    components: &[(T, Law<T>)],
    tol: T,
) -> Result<MixtureKlCheck<T>> {
    if components.is_empty() {
        return Err(SearchError::Empty("mixture inequality needs at least one component"));
    }
    let mixture = Law::mixture(components.to_vec())?;
    let mut lhs = T::zero();
    let mut posterior_term = T::zero();
    for (w, g_d) in components {
        if *w == T::zero() {
            continue;
        }
        lhs = lhs + *w * kl_divergence(g_d, f)?.value;
        posterior_term = posterior_term + *w * kl_numeric(g_d, &mixture)?.value;
    }
    let rhs = kl_divergence(&mixture, f)?.value;
    let slack = lhs - rhs;
    Ok(MixtureKlCheck {
        lhs,
        rhs,
        slack,
        posterior_term,
        tol,
        holds: slack >= -tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem2Gap<T> {
    /// Palette-weighted rate of the belief-tracking policy.
    pub i_adhm: T,
    /// Rate of an i.i.d. policy that models the anomaly by the marginal law.
    pub i_chernoff: T,
    pub gap: T,
    pub tol: T,
    pub holds: bool,
}

/// Compares the oracle rate with the rate achievable when the anomalous
/// stream is treated as i.i.d. from its marginal law.
pub fn theorem2_gap<T: Scalar>(
    f: &DistributionSpec<T>,
    g: &DistributionSpec<T>,
    palette: &OraclePalette<T>,
    cells: usize,
    probes: usize,
    tol: T,
) -> Result<Theorem2Gap<T>> {
    let i_adhm = rate_i_star(f, g, palette, cells, probes)?.i_star;
    let i_chernoff = rate_for_law(f, &palette.marginal_law(f, g), cells, probes)?;
    let gap = i_adhm - i_chernoff;
    Ok(Theorem2Gap {
        i_adhm,
        i_chernoff,
        gap,
        tol,
        holds: gap >= -tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(rate: f64) -> DistributionSpec<f64> {
        DistributionSpec::exponential(rate).unwrap()
    }

    // Closed-form KL between exponentials, written out independently of the
    // module under test.
    fn kl_exp(a: f64, b: f64) -> f64 {
        (a / b).ln() + b / a - 1.0
    }

    #[test]
    fn rate_vanishes_when_anomaly_looks_normal() {
        assert_eq!(rate_i_d(&exp(0.5), &exp(10.0), 1.0, 10, 2).unwrap(), 0.0);
    }

    #[test]
    fn single_probe_rate_is_forward_kl() {
        let r = rate_i_d(&exp(0.5), &exp(10.0), 0.0, 10, 1).unwrap();
        assert!((r - kl_exp(10.0, 0.5)).abs() < 1e-15);
    }

    #[test]
    fn rate_for_pure_anomalous_law() {
        let expected = kl_exp(10.0, 0.5) + kl_exp(0.5, 10.0) / 9.0;
        let r = rate_i_d(&exp(0.5), &exp(10.0), 0.0, 10, 2).unwrap();
        assert!((r - expected).abs() < 1e-13);
        assert!((r - 3.82399).abs() < 2e-5, "{r}");
    }

    #[test]
    fn weighted_rate_over_two_levels() {
        let palette = OraclePalette::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let report = rate_i_star(&exp(0.5), &exp(10.0), &palette, 10, 2).unwrap();
        let expected = 0.5 * (kl_exp(10.0, 0.5) + kl_exp(0.5, 10.0) / 9.0);
        assert!((report.i_star - expected).abs() < 1e-13);
        assert!((report.i_star - 1.91200).abs() < 1e-5);
        let c = (-20.0f64).exp();
        assert!((report.predicted_delay(c) - 20.0 / expected).abs() < 1e-10);
        assert!((report.predicted_risk(c) - c * 20.0 / expected).abs() < 1e-20);
    }

    #[test]
    fn degenerate_palettes_collapse_to_one_level() {
        let (f, g) = (exp(0.5), exp(10.0));
        let one = rate_i_star(&f, &g, &OraclePalette::single(0.3).unwrap(), 5, 2).unwrap();
        let direct = rate_i_d(&f, &g, 0.3, 5, 2).unwrap();
        assert_eq!(one.i_star, direct);
        let same = OraclePalette::new(vec![0.3; 3], vec![0.2, 0.3, 0.5]).unwrap();
        let rep = rate_i_star(&f, &g, &same, 5, 2).unwrap();
        assert!((rep.i_star - direct).abs() < 1e-12);
    }

    #[test]
    fn palette_validation() {
        assert!(OraclePalette::new(vec![0.5], vec![0.9]).is_err());
        assert!(OraclePalette::new(vec![1.5], vec![1.0]).is_err());
        assert!(OraclePalette::new(vec![0.5, 0.2], vec![1.0]).is_err());
        assert!(OraclePalette::<f64>::new(vec![], vec![]).is_err());
    }

    #[test]
    fn rate_rejects_bad_counts() {
        assert!(rate_i_d(&exp(0.5), &exp(10.0), 0.5, 1, 1).is_err());
        assert!(rate_i_d(&exp(0.5), &exp(10.0), 0.5, 4, 5).is_err());
        assert!(rate_i_d(&exp(0.5), &exp(10.0), 0.5, 4, 0).is_err());
    }

    #[test]
    fn mixture_inequality_equality_cases() {
        let f = Law::Base(exp(0.5));
        let g = Law::Base(exp(3.0));
        let same = verify_mixture_kl_inequality(&f, &[(0.4, g.clone()), (0.6, g.clone())], 1e-6)
            .unwrap();
        assert!(same.slack.abs() < 1e-6 && same.holds);
        let one = verify_mixture_kl_inequality(&f, &[(1.0, g)], 1e-6).unwrap();
        assert!(one.slack.abs() < 1e-12);
    }

    #[test]
    fn mixture_inequality_strict_case_matches_posterior_term() {
        let f = Law::Base(exp(0.5));
        let check = verify_mixture_kl_inequality(
            &f,
            &[(0.5, Law::Base(exp(10.0))), (0.5, Law::Base(exp(0.5)))],
            1e-6,
        )
        .unwrap();
        assert!(check.holds);
        assert!(check.slack > 0.1, "{check:?}");
        assert!((check.slack - check.posterior_term).abs() < 1e-7, "{check:?}");
    }

    #[test]
    fn theorem2_gap_cases() {
        let (f, g) = (exp(0.5), exp(10.0));
        let single = theorem2_gap(&f, &g, &OraclePalette::single(0.4).unwrap(), 10, 2, 1e-6).unwrap();
        assert!(single.gap.abs() < 1e-6);
        let equal =
            theorem2_gap(&f, &g, &OraclePalette::new(vec![0.4, 0.4], vec![0.3, 0.7]).unwrap(), 10, 2, 1e-6)
                .unwrap();
        assert!(equal.gap.abs() < 1e-6);
        let spread =
            theorem2_gap(&f, &g, &OraclePalette::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap(), 10, 2, 1e-6)
                .unwrap();
        assert!(spread.holds && spread.gap > 0.5, "{spread:?}");
        // the Chernoff side is the rate of the half/half mixture
        let marginal = rate_i_d(&f, &g, 0.5, 10, 2).unwrap();
        assert!((spread.i_chernoff - marginal).abs() < 1e-12);
    }
}
