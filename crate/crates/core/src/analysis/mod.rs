//! KL divergences, oracle rate functions and numerical verifiers for the
//! asymptotic claims about the search policies.

mod kl;
mod quadrature;
mod rates;

pub use kl::{kl_closed_form, kl_divergence, kl_numeric, KlMethod, KlValue, SUMMATION_TAIL};
pub use quadrature::{integrate, Integral};
pub use rates::{
    rate_for_law, rate_i_d, rate_i_star, theorem2_gap, verify_mixture_kl_inequality,
    MixtureKlCheck, OraclePalette, RateReport, Theorem2Gap,
};
