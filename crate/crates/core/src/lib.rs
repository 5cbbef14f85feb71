//! Congruent Bayesian testing and estimation for two-model problems.
//!
//! A Bayes factor between two models and the model-averaged posterior for
//! the shared parameter are computed from the same prior model odds, so the
//! test and the estimate can never disagree. The crate covers:
//!
//! * [`numeric`]: log-space special functions, adaptive quadrature, seeded
//!   random streams.
//! * [`priors`]: point masses, Beta, region-indicator and Cauchy priors, and
//!   the two-model space with its prior model probability.
//! * [`evidence`]: marginal likelihoods, Bayes factors, posterior model
//!   probabilities and odds, implied prior model odds.
//! * [`mixture`]: the model-averaged posterior with an exact quantile
//!   function across point masses, and credible intervals that report how
//!   much mass they actually hold.
//! * [`sampling`]: composition and product-space samplers.
//! * [`effect`]: default (Cauchy prior) Bayes factors and posteriors for a
//!   standardized two-sample effect size.
//! * [`calibration`]: the many-coins simulation that checks stratum means
//!   and interval coverage against the analytic posterior.
//!
//! ```
//! use congruent::prelude::*;
//!
//! let space = TwoModelSpace::new(
//!     PriorComponent::point(0.5)?,
//!     PriorComponent::uniform(),
//!     Probability::HALF,
//! );
//! let data = BinomialData::new(60, 100)?;
//! let report = evidence_report(&space, data)?;
//! assert!((report.bf10 - 0.913).abs() < 5e-4);
//!
//! let posterior = bma_posterior(&space, data)?;
//! assert_eq!(posterior.quantile(0.5)?, 0.5);
//! # Ok::<(), congruent::Error>(())
//! ```

pub mod calibration;
pub mod effect;
mod error;
pub mod evidence;
pub mod mixture;
pub mod numeric;
pub mod priors;
pub mod sampling;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::calibration::{
        analytic_oracle, run_calibration, CalibrationConfig, CalibrationReport,
    };
    pub use crate::effect::{
        effect_mixture_estimates, effect_posterior_m1, jzs_bayes_factor, t_statistic, Contrast,
        EffectModelSpec, TwoSampleSummary,
    };
    pub use crate::evidence::{
        bayes_factor, evidence_report, implied_prior_model_odds, marginal_likelihood,
        posterior_model_probs, posterior_odds, BinomialData, EvidenceReport,
    };
    pub use crate::mixture::{bma_posterior, ComponentPosterior, IntervalReport, MixturePosterior};
    pub use crate::numeric::{Probability, QuadratureSpec, Seed};
    pub use crate::priors::{Interval, PriorComponent, Region, TwoModelSpace};
    pub use crate::sampling::{
        composition_sample, estimates_from_draws, product_space_sample, DrawSet, SamplerEstimates,
    };
    pub use crate::Error;
}

// Compiles and runs every snippet in the guide under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/evidence.md")]
    mod evidence {}
    #[doc = include_str!("../../../book/src/mixture-posterior.md")]
    mod mixture_posterior {}
    #[doc = include_str!("../../../book/src/interval-null.md")]
    mod interval_null {}
    #[doc = include_str!("../../../book/src/product-space.md")]
    mod product_space {}
    #[doc = include_str!("../../../book/src/effect-size.md")]
    mod effect_size {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
}
