//! Standardized effect size for two groups summarized by n, mean and SD.
//!
//! The model is `Y_i ~ Normal(μ + X_i·σθ/2, σ²)` with `X_i = −1` for the
//! first group and `+1` for the second, Jeffreys priors on μ and σ², and
//! either θ = 0 (M0) or θ ~ Cauchy(0, r) (M1). Integrating out μ and σ²
//! leaves the pooled two-sample t statistic, which is noncentral t with
//! `df = n1 + n2 − 2` and noncentrality `θ·√n_eff`, `n_eff = n1·n2/(n1+n2)`.
//!
//! ```
//! use congruent::prelude::*;
//!
//! let s = TwoSampleSummary::new(193, 26.0, 4.9, 23, 25.7, 4.4)?;
//! let bf = jzs_bayes_factor(&s, &EffectModelSpec::default())?;
//! assert!((bf - 0.2376).abs() < 1e-4);
//! # Ok::<(), congruent::Error>(())
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::evidence::ModelProbabilities;
use crate::mixture::{ComponentPosterior, GridPosterior, IntervalReport, MixturePosterior};
use crate::numeric::{
    cauchy_ln_pdf, integrate, ln_gamma, student_t_ln_pdf, Probability, QuadratureSpec,
};

/// Default grid resolution for the M1 posterior.
pub const DEFAULT_GRID_SIZE: usize = 4096;

/// Group summaries. Group 1 is coded `X = −1`, group 2 `X = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleSummary {
    pub n1: u64,
    pub mean1: f64,
    pub sd1: f64,
    pub n2: u64,
    pub mean2: f64,
    pub sd2: f64,
}

impl TwoSampleSummary {
    pub fn new(n1: u64, mean1: f64, sd1: f64, n2: u64, mean2: f64, sd2: f64) -> Result<Self> {
        let s = TwoSampleSummary {
            n1,
            mean1,
            sd1,
            n2,
            mean2,
            sd2,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(domain("each group needs at least two observations"));
        }
        if !(self.mean1.is_finite() && self.mean2.is_finite()) {
            return Err(domain("group means must be finite"));
        }
        if !(self.sd1 > 0.0 && self.sd2 > 0.0 && self.sd1.is_finite() && self.sd2.is_finite()) {
            return Err(domain(
                "group standard deviations must be positive and finite",
            ));
        }
        Ok(())
    }
}

/// Which difference θ measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Contrast {
    /// θ > 0 when group 2 (`X = +1`) has the larger mean.
    #[default]
    SecondMinusFirst,
    /// θ > 0 when group 1 has the larger mean.
    FirstMinusSecond,
}

impl Contrast {
    fn sign(self) -> f64 {
        match self {
            Contrast::SecondMinusFirst => 1.0,
            Contrast::FirstMinusSecond => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectModelSpec {
    pub cauchy_scale: f64,
    pub prob_m0: Probability,
    #[serde(default)]
    pub contrast: Contrast,
}

impl EffectModelSpec {
    pub fn new(cauchy_scale: f64, prob_m0: Probability, contrast: Contrast) -> Result<Self> {
        if !(cauchy_scale > 0.0 && cauchy_scale.is_finite()) {
            return Err(domain(format!(
                "Cauchy scale {cauchy_scale} must be positive"
            )));
        }
        Ok(EffectModelSpec {
            cauchy_scale,
            prob_m0,
            contrast,
        })
    }
}

impl Default for EffectModelSpec {
    fn default() -> Self {
        EffectModelSpec {
            cauchy_scale: 0.707,
            prob_m0: Probability::HALF,
            contrast: Contrast::default(),
        }
    }
}

/// Sufficient statistic of the effect-size model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TStatistic {
    pub t: f64,
    pub df: u64,
    pub n_eff: f64,
}

impl TStatistic {
    fn oriented(self, contrast: Contrast) -> Self {
        TStatistic {
            t: contrast.sign() * self.t,
            ..self
        }
    }
}

/// Pooled-variance t for `mean2 − mean1`.
pub fn t_statistic(s: &TwoSampleSummary) -> Result<TStatistic> {
    s.validate()?;
    let (n1, n2) = (s.n1 as f64, s.n2 as f64);
    let df = s.n1 + s.n2 - 2;
    let pooled = ((n1 - 1.0) * s.sd1 * s.sd1 + (n2 - 1.0) * s.sd2 * s.sd2) / df as f64;
    if !(pooled > 0.0) {
        return Err(Error::DegenerateData("pooled variance is zero".into()));
    }
    let n_eff = n1 * n2 / (n1 + n2);
    let t = (s.mean2 - s.mean1) / (pooled.sqrt() * (1.0 / n1 + 1.0 / n2).sqrt());
    Ok(TStatistic { t, df, n_eff })
}

/// Log density of the noncentral t distribution.
///
/// Writes `T = (Z + δ)/S` with `S² ~ χ²_ν/ν` and integrates over `s`:
/// `f(t) = C ∫ s^ν exp(−(ts − δ)²/2 − νs²/2) ds`. The integrand is a
/// single smooth bump, so it is rescaled by its mode and integrated over
/// ±40 curvature widths.
pub fn noncentral_t_ln_pdf(t: f64, df: f64, delta: f64) -> Result<f64> {
    if !(df > 0.0) || !t.is_finite() || !delta.is_finite() {
        return Err(domain(format!(
            "noncentral t needs df > 0 and finite t, δ (got {df}, {t}, {delta})"
        )));
    }
    if delta == 0.0 {
        return Ok(student_t_ln_pdf(t, df));
    }
    let nu = df;
    let log_c = std::f64::consts::LN_2 + 0.5 * nu * nu.ln()
        - 0.5 * nu * std::f64::consts::LN_2
        - ln_gamma(0.5 * nu)
        - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let ell = |s: f64| nu * s.ln() - 0.5 * (t * s - delta).powi(2) - 0.5 * nu * s * s;
    let a = t * t + nu;
    let td = t * delta;
    let mode = (td + (td * td + 4.0 * nu * a).sqrt()) / (2.0 * a);
    let width = 1.0 / (nu / (mode * mode) + a).sqrt();
    let peak = ell(mode);
    let lo = (mode - 40.0 * width).max(0.0);
    let hi = mode + 40.0 * width;
    let spec = QuadratureSpec::new(1e-14, 1e-12, 400)?;
    let body = |s: f64| if s <= 0.0 { 0.0 } else { (ell(s) - peak).exp() };
    let mass = integrate(body, lo, mode, &spec)? + integrate(body, mode, hi, &spec)?;
    Ok(log_c + peak + mass.ln())
}

fn integrand_ln(stat: &TStatistic, scale: f64) -> impl Fn(f64) -> f64 + '_ {
    let root = stat.n_eff.sqrt();
    let df = stat.df as f64;
    move |theta: f64| {
        noncentral_t_ln_pdf(stat.t, df, theta * root).unwrap_or(f64::NEG_INFINITY)
            + cauchy_ln_pdf(theta, 0.0, scale)
    }
}

fn argmax(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .map(|x| (x, f(x)))
        .fold((lo, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
}

/// `ln BF10` of the Cauchy alternative against θ = 0.
pub fn jzs_log_bayes_factor(s: &TwoSampleSummary, spec: &EffectModelSpec) -> Result<f64> {
    let stat = t_statistic(s)?.oriented(spec.contrast);
    log_bayes_factor_from_t(&stat, spec.cauchy_scale)
}

/// `ln BF10` directly from `(t, df, n_eff)`.
pub fn log_bayes_factor_from_t(stat: &TStatistic, scale: f64) -> Result<f64> {
    if stat.df == 0 || !(stat.n_eff > 0.0) {
        return Err(Error::DegenerateData(
            "need df ≥ 1 and a positive effective sample size".into(),
        ));
    }
    let f = integrand_ln(stat, scale);
    let theta_hat = stat.t / stat.n_eff.sqrt();
    let reach = theta_hat.abs() + 10.0 * scale;
    let (peak_at, peak) = argmax(&f, -reach, reach, 400);
    let spec = QuadratureSpec::new(1e-14, 1e-9, 500)?;
    let body = |theta: f64| (f(theta) - peak).exp();
    let mut cuts = vec![-reach, peak_at, reach];
    if (0.0 - peak_at).abs() > 1e-12 && 0.0 > -reach && 0.0 < reach {
        cuts.push(0.0);
    }
    cuts.sort_by(f64::total_cmp);
    let mut mass = 0.0;
    for w in cuts.windows(2) {
        mass += integrate(body, w[0], w[1], &spec)?;
    }
    Ok(peak + mass.ln() - student_t_ln_pdf(stat.t, stat.df as f64))
}

/// `BF10` of the Cauchy alternative against θ = 0; may overflow to ∞ for
/// overwhelming evidence, in which case use [`jzs_log_bayes_factor`].
pub fn jzs_bayes_factor(s: &TwoSampleSummary, spec: &EffectModelSpec) -> Result<f64> {
    Ok(jzs_log_bayes_factor(s, spec)?.exp())
}

/// Grid posterior for θ under M1, `∝ T_df(t; θ√n_eff)·Cauchy(θ; 0, r)`.
///
/// A coarse pass over `±(|θ̂| + 10r)` locates the posterior; the final
/// grid spans its mean ± 12 SDs.
pub fn effect_posterior_m1(
    s: &TwoSampleSummary,
    spec: &EffectModelSpec,
    grid_size: usize,
) -> Result<ComponentPosterior> {
    if grid_size < 512 {
        return Err(domain(format!(
            "grid size {grid_size} is below the minimum of 512"
        )));
    }
    let stat = t_statistic(s)?.oriented(spec.contrast);
    let f = integrand_ln(&stat, spec.cauchy_scale);
    let theta_hat = stat.t / stat.n_eff.sqrt();
    let reach = theta_hat.abs() + 10.0 * spec.cauchy_scale;
    let coarse = tabulate(&f, -reach, reach, 2048)?;
    let mean = coarse.mean();
    let sd = coarse
        .thetas()
        .iter()
        .zip(coarse.densities())
        .map(|(t, d)| (t - mean).powi(2) * d)
        .sum::<f64>()
        * (2.0 * reach / 2047.0);
    let sd = sd.sqrt();
    Ok(ComponentPosterior::Grid(tabulate(
        &f,
        mean - 12.0 * sd,
        mean + 12.0 * sd,
        grid_size,
    )?))
}

fn tabulate(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<GridPosterior> {
    let thetas = crate::mixture::linspace(lo, hi, n);
    let logs: Vec<f64> = thetas.iter().map(|&t| f(t)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(domain("posterior density vanishes on the whole grid"));
    }
    let weights = logs.iter().map(|l| (l - top).exp()).collect();
    GridPosterior::new(thetas, weights)
}

/// Model-averaged effect-size posterior and its headline summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimates {
    pub posterior: MixturePosterior,
    pub interval: IntervalReport,
    pub mean: f64,
    pub median: f64,
    pub log_bf10: f64,
    pub prob_m0_post: Probability,
}

/// Atom at 0 weighted by `Pr(M0 | data)` plus the M1 grid posterior,
/// summarized at the 95% level.
pub fn effect_mixture_estimates(
    s: &TwoSampleSummary,
    spec: &EffectModelSpec,
) -> Result<EffectEstimates> {
    effect_mixture_estimates_with(s, spec, 0.95, DEFAULT_GRID_SIZE)
}

pub fn effect_mixture_estimates_with(
    s: &TwoSampleSummary,
    spec: &EffectModelSpec,
    level: f64,
    grid_size: usize,
) -> Result<EffectEstimates> {
    let log_bf10 = jzs_log_bayes_factor(s, spec)?;
    let probs = ModelProbabilities::from_log_bf(log_bf10, spec.prob_m0)?;
    let m1 = effect_posterior_m1(s, spec, grid_size)?;
    let posterior =
        MixturePosterior::new(probs.m0, ComponentPosterior::PointMass { theta0: 0.0 }, m1);
    let interval = posterior.credible_interval(level)?;
    Ok(EffectEstimates {
        mean: posterior.mean(),
        median: posterior.median()?,
        interval,
        posterior,
        log_bf10,
        prob_m0_post: probs.m0,
    })
}
