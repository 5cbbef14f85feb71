//! Marginal likelihoods, Bayes factors, posterior model probabilities and
//! odds, and the prior model odds implied by a single encompassing prior.
//!
//! Marginal likelihoods stay in log space until a report is assembled, so a
//! Bayes factor of 10^20 passes through without overflow.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{ln_beta, ln_binom_pmf, ln_choose, round_to, Probability};
use crate::priors::{PriorComponent, Region, TwoModelSpace};

/// `x` successes out of `n` Bernoulli trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinomialData {
    pub x: u64,
    pub n: u64,
}

impl BinomialData {
    pub fn new(x: u64, n: u64) -> Result<Self> {
        if x > n {
            return Err(domain(format!("observed {x} successes in only {n} trials")));
        }
        Ok(BinomialData { x, n })
    }
}

/// `ln Pr(data | M)` for a binomial likelihood under `prior`.
pub fn log_marginal_likelihood(prior: &PriorComponent, data: BinomialData) -> Result<f64> {
    let BinomialData { x, n } = data;
    match prior {
        PriorComponent::PointMass { theta0 } => ln_binom_pmf(x, n, *theta0),
        PriorComponent::Beta { alpha, beta } => Ok(ln_choose(n, x)
            + ln_beta(x as f64 + alpha, (n - x) as f64 + beta)
            - ln_beta(*alpha, *beta)),
        PriorComponent::ScaledIndicator { region, height } => {
            // ∫_R h·C(n,x) t^x (1−t)^(n−x) dt = h/(n+1) · Pr_{Beta(x+1, n−x+1)}(R)
            let posterior = PriorComponent::Beta {
                alpha: x as f64 + 1.0,
                beta: (n - x) as f64 + 1.0,
            };
            let mass = posterior.region_mass(region)?;
            Ok(height.ln() - ((n + 1) as f64).ln() + mass.ln())
        }
        PriorComponent::Cauchy { .. } => Err(Error::UnsupportedModel(
            "a Cauchy prior has no binomial marginal likelihood; use the effect-size module".into(),
        )),
    }
}

/// `Pr(data | M)`.
pub fn marginal_likelihood(prior: &PriorComponent, data: BinomialData) -> Result<f64> {
    log_marginal_likelihood(prior, data).map(f64::exp)
}

/// `ln BF10 = ln m1 − ln m0`.
pub fn log_bayes_factor(space: &TwoModelSpace, data: BinomialData) -> Result<f64> {
    let log_m0 = log_marginal_likelihood(&space.prior0, data)?;
    if log_m0 == f64::NEG_INFINITY {
        return Err(Error::UndefinedEvidence(
            "the data are impossible under M0".into(),
        ));
    }
    Ok(log_marginal_likelihood(&space.prior1, data)? - log_m0)
}

/// `BF10 = Pr(data | M1) / Pr(data | M0)`.
pub fn bayes_factor(space: &TwoModelSpace, data: BinomialData) -> Result<f64> {
    log_bayes_factor(space, data).map(f64::exp)
}

/// Raised when prior model odds of 1:0 or 0:1 make the data irrelevant to
/// the model comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OddsWarning {
    /// `Pr(M0) = 1`: no data can move the posterior away from M0.
    PriorExcludesM1,
    /// `Pr(M0) = 0`: M0 was ruled out before seeing data.
    PriorExcludesM0,
}

impl std::fmt::Display for OddsWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OddsWarning::PriorExcludesM1 => {
                write!(f, "prior model odds are 0:1; M1 can never gain support")
            }
            OddsWarning::PriorExcludesM0 => {
                write!(f, "prior model odds are 1:0; M0 can never gain support")
            }
        }
    }
}

/// Posterior model probabilities with any degeneracy flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelProbabilities {
    pub m0: Probability,
    pub m1: Probability,
    pub warning: Option<OddsWarning>,
}

impl ModelProbabilities {
    pub fn pair(&self) -> (Probability, Probability) {
        (self.m0, self.m1)
    }

    /// From `ln BF10`, stable for Bayes factors far outside f64 range.
    pub fn from_log_bf(log_bf10: f64, prob_m0: Probability) -> Result<Self> {
        if log_bf10.is_nan() {
            return Err(domain("log Bayes factor is NaN"));
        }
        if let Some(degenerate) = Self::degenerate(prob_m0) {
            return Ok(degenerate);
        }
        let p0 = prob_m0.get();
        // logit Pr(M1 | data) = ln BF10 + ln(Pr(M1)/Pr(M0))
        let logit = log_bf10 + prob_m0.complement().get().ln() - p0.ln();
        let (m0, m1) = if logit >= 0.0 {
            let e = (-logit).exp();
            (e / (1.0 + e), 1.0 / (1.0 + e))
        } else {
            let e = logit.exp();
            (1.0 / (1.0 + e), e / (1.0 + e))
        };
        Ok(ModelProbabilities {
            m0: Probability::saturating(m0),
            m1: Probability::saturating(m1),
            warning: None,
        })
    }

    fn degenerate(prob_m0: Probability) -> Option<Self> {
        if prob_m0.get() == 1.0 {
            Some(ModelProbabilities {
                m0: Probability::ONE,
                m1: Probability::ZERO,
                warning: Some(OddsWarning::PriorExcludesM1),
            })
        } else if prob_m0.get() == 0.0 {
            Some(ModelProbabilities {
                m0: Probability::ZERO,
                m1: Probability::ONE,
                warning: Some(OddsWarning::PriorExcludesM0),
            })
        } else {
            None
        }
    }
}

/// `Pr(M0 | data)` and `Pr(M1 | data)` from a Bayes factor and `Pr(M0)`.
pub fn posterior_model_probs(bf10: f64, prob_m0: Probability) -> Result<ModelProbabilities> {
    if !(bf10 >= 0.0) {
        return Err(domain(format!("Bayes factor {bf10} must be nonnegative")));
    }
    if let Some(degenerate) = ModelProbabilities::degenerate(prob_m0) {
        return Ok(degenerate);
    }
    if bf10.is_infinite() {
        return Ok(ModelProbabilities {
            m0: Probability::ZERO,
            m1: Probability::ONE,
            warning: None,
        });
    }
    let p0 = prob_m0.get();
    let p1 = 1.0 - p0;
    let denom = p0 + bf10 * p1;
    let m0 = Probability::saturating(p0 / denom);
    let m1 = Probability::saturating(bf10 * p1 / denom);
    Ok(ModelProbabilities {
        m0,
        m1,
        warning: None,
    })
}

/// `PO10 = (Pr(M1)/Pr(M0)) · BF10`.
pub fn posterior_odds(bf10: f64, prob_m0: Probability) -> Result<f64> {
    if !(bf10 >= 0.0) {
        return Err(domain(format!("Bayes factor {bf10} must be nonnegative")));
    }
    if prob_m0.get() == 0.0 {
        return Err(Error::DegenerateOdds(
            "Pr(M0) = 0 makes the posterior odds infinite".into(),
        ));
    }
    Ok(prob_m0.complement().get() / prob_m0.get() * bf10)
}

/// `Pr(θ ∈ region1) / Pr(θ ∈ region0)` under one encompassing prior: the
/// prior model odds someone estimating with that prior has implicitly
/// adopted for the two regions.
pub fn implied_prior_model_odds(
    encompassing: &PriorComponent,
    region0: &Region,
    region1: &Region,
) -> Result<f64> {
    let mass0 = encompassing.region_mass(region0)?;
    let mass1 = encompassing.region_mass(region1)?;
    if mass0 <= 0.0 || mass1 <= 0.0 {
        return Err(Error::DegenerateOdds(format!(
            "region masses {mass0} and {mass1} must both be positive"
        )));
    }
    Ok(mass1 / mass0)
}

/// Everything the two-model comparison produces for one data set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceReport {
    pub m0: f64,
    pub m1: f64,
    pub log_m0: f64,
    pub log_m1: f64,
    pub bf10: f64,
    pub log10_bf10: f64,
    pub prob_m0_post: Probability,
    pub prob_m1_post: Probability,
    /// `None` when `Pr(M0) = 0`.
    pub po10: Option<f64>,
    pub warning: Option<OddsWarning>,
}

impl EvidenceReport {
    pub fn from_log_marginals(log_m0: f64, log_m1: f64, prob_m0: Probability) -> Result<Self> {
        if log_m0 == f64::NEG_INFINITY {
            return Err(Error::UndefinedEvidence(
                "the data are impossible under M0".into(),
            ));
        }
        let log_bf = log_m1 - log_m0;
        let probs = ModelProbabilities::from_log_bf(log_bf, prob_m0)?;
        let bf10 = log_bf.exp();
        let po10 = posterior_odds(bf10, prob_m0).ok();
        Ok(EvidenceReport {
            m0: log_m0.exp(),
            m1: log_m1.exp(),
            log_m0,
            log_m1,
            bf10,
            log10_bf10: log_bf / std::f64::consts::LN_10,
            prob_m0_post: probs.m0,
            prob_m1_post: probs.m1,
            po10,
            warning: probs.warning,
        })
    }
}

pub fn evidence_report(space: &TwoModelSpace, data: BinomialData) -> Result<EvidenceReport> {
    let log_m0 = log_marginal_likelihood(&space.prior0, data)?;
    let log_m1 = log_marginal_likelihood(&space.prior1, data)?;
    EvidenceReport::from_log_marginals(log_m0, log_m1, space.prob_m0)
}

#[derive(Serialize)]
struct EvidenceDisplay {
    m0: String,
    m1: String,
    bf10: String,
    log10_bf10: String,
    prob_m0_post: String,
    prob_m1_post: String,
    po10: Option<String>,
}

#[derive(Serialize)]
struct EvidenceJson<'a> {
    m0: f64,
    m1: f64,
    log_m0: f64,
    log_m1: f64,
    bf10: f64,
    log10_bf10: f64,
    prob_m0_post: f64,
    prob_m1_post: f64,
    po10: Option<f64>,
    warning: &'a Option<OddsWarning>,
    display: EvidenceDisplay,
}

fn three(v: f64) -> String {
    format!("{:.3}", round_to(v, 3))
}

impl Serialize for EvidenceReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EvidenceJson {
            m0: self.m0,
            m1: self.m1,
            log_m0: self.log_m0,
            log_m1: self.log_m1,
            bf10: self.bf10,
            log10_bf10: self.log10_bf10,
            prob_m0_post: self.prob_m0_post.get(),
            prob_m1_post: self.prob_m1_post.get(),
            po10: self.po10,
            warning: &self.warning,
            display: EvidenceDisplay {
                m0: format!("{:.4}", self.m0),
                m1: format!("{:.4}", self.m1),
                bf10: three(self.bf10),
                log10_bf10: three(self.log10_bf10),
                prob_m0_post: three(self.prob_m0_post.get()),
                prob_m1_post: three(self.prob_m1_post.get()),
                po10: self.po10.map(three),
            },
        }
        .serialize(s)
    }
}
