//! Monte Carlo draws from the model-averaged posterior.
//!
//! [`composition_sample`] picks a model with probability `Pr(M_k | data)`
//! and then draws θ from that model's posterior. [`product_space_sample`]
//! keeps the product-space state `(ω, θ0, θ1)`: it draws θ under both
//! models, draws the indicator ω from its exact marginal posterior, and
//! reports `θ_ω`. The mean of ω estimates `Pr(M1 | data)`, from which
//! [`estimates_from_draws`] recovers the posterior odds and Bayes factor.
//!
//! Draws are generated in fixed-size blocks, each from its own random
//! stream, and concatenated in block order, so the output depends only on
//! the seed and not on how many threads ran.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::evidence::{evidence_report, BinomialData};
use crate::mixture::{bma_posterior, ComponentPosterior, MixturePosterior};
use crate::numeric::{Probability, Seed, StreamDomain};
use crate::priors::{PriorComponent, TwoModelSpace};

/// Draws per random stream.
pub const BLOCK_SIZE: usize = 1 << 16;

/// Sampled θ values with the model indicator of each draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawSet {
    pub thetas: Vec<f64>,
    /// 1 when the draw came from M1.
    pub omegas: Vec<u8>,
    pub seed: Seed,
    pub n_draws: usize,
    /// SHA-256 of the model and data the draws were made for.
    pub model_hash: String,
}

#[derive(Serialize, Deserialize)]
struct DrawHeader {
    seed: Seed,
    n_draws: usize,
    model_hash: String,
}

impl DrawSet {
    /// Fraction of draws with ω = 1.
    pub fn omega_mean(&self) -> f64 {
        let ones: usize = self.omegas.iter().map(|&o| o as usize).sum();
        ones as f64 / self.n_draws as f64
    }

    /// Columnar `theta,omega` CSV preceded by a `# {json}` header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header = DrawHeader {
            seed: self.seed,
            n_draws: self.n_draws,
            model_hash: self.model_hash.clone(),
        };
        writeln!(out, "# {}", serde_json::to_string(&header)?)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "omega"])?;
        for (t, o) in self.thetas.iter().zip(&self.omegas) {
            w.write_record([t.to_string(), o.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let json = first
            .strip_prefix("# ")
            .ok_or_else(|| Error::Io("draw file is missing its header line".into()))?;
        let header: DrawHeader = serde_json::from_str(json.trim_end())?;
        let mut thetas = Vec::with_capacity(header.n_draws);
        let mut omegas = Vec::with_capacity(header.n_draws);
        let mut r = csv::Reader::from_reader(input);
        for row in r.deserialize() {
            let (theta, omega): (f64, u8) = row?;
            if omega > 1 {
                return Err(Error::Io(format!("omega value {omega} is not 0 or 1")));
            }
            thetas.push(theta);
            omegas.push(omega);
        }
        if thetas.len() != header.n_draws {
            return Err(Error::Io(format!(
                "header promises {} draws, file holds {}",
                header.n_draws,
                thetas.len()
            )));
        }
        Ok(DrawSet {
            thetas,
            omegas,
            seed: header.seed,
            n_draws: header.n_draws,
            model_hash: header.model_hash,
        })
    }
}

/// Model odds recovered from sampled indicators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerEstimates {
    pub omega_hat: Probability,
    pub po10_hat: f64,
    pub bf10_hat: f64,
    pub mc_se_omega: f64,
    /// Delta-method standard error of `bf10_hat`.
    pub mc_se_bf10: f64,
    /// Every ω was identical, or the prior excludes a model, so the odds
    /// are 0, ∞ or undefined.
    pub degenerate: bool,
}

/// `ω̂ = mean(ω)`, `PO10 = ω̂/(1−ω̂)`, `BF10 = PO10 / (Pr(M1)/Pr(M0))`.
pub fn estimates_from_draws(draws: &DrawSet, prob_m0_prior: Probability) -> SamplerEstimates {
    let omega = draws.omega_mean();
    let n = draws.n_draws as f64;
    let prior_odds = prob_m0_prior.complement().get() / prob_m0_prior.get();
    let po10 = omega / (1.0 - omega);
    let bf10 = po10 / prior_odds;
    let mc_se_omega = (omega * (1.0 - omega) / n).sqrt();
    let mc_se_bf10 = mc_se_omega / ((1.0 - omega) * (1.0 - omega)) / prior_odds;
    let degenerate = omega == 0.0 || omega == 1.0 || !prior_odds.is_finite() || prior_odds == 0.0;
    SamplerEstimates {
        omega_hat: Probability::saturating(omega),
        po10_hat: po10,
        bf10_hat: bf10,
        mc_se_omega,
        mc_se_bf10,
        degenerate,
    }
}

enum Draw {
    Fixed(f64),
    Beta(BetaDist<f64>),
    Inverse(ComponentPosterior),
}

impl Draw {
    fn new(post: &ComponentPosterior) -> Result<Self> {
        Ok(match post {
            ComponentPosterior::PointMass { theta0 } => Draw::Fixed(*theta0),
            ComponentPosterior::Beta { alpha, beta } => {
                Draw::Beta(BetaDist::new(*alpha, *beta).map_err(|e| domain(e.to_string()))?)
            }
            other => Draw::Inverse(other.clone()),
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Draw::Fixed(t) => *t,
            Draw::Beta(d) => d.sample(rng),
            Draw::Inverse(c) => c.quantile(rng.random::<f64>()),
        }
    }
}

fn blocks<F>(n_draws: usize, seed: Seed, domain: StreamDomain, fill: F) -> (Vec<f64>, Vec<u8>)
where
    F: Fn(&mut ChaCha8Rng, usize, &mut Vec<f64>, &mut Vec<u8>) + Sync,
{
    let n_blocks = n_draws.div_ceil(BLOCK_SIZE);
    let parts: Vec<(Vec<f64>, Vec<u8>)> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_SIZE.min(n_draws - b * BLOCK_SIZE);
            let mut rng = seed.stream(domain, b as u64);
            let mut thetas = Vec::with_capacity(len);
            let mut omegas = Vec::with_capacity(len);
            fill(&mut rng, len, &mut thetas, &mut omegas);
            (thetas, omegas)
        })
        .collect();
    let mut thetas = Vec::with_capacity(n_draws);
    let mut omegas = Vec::with_capacity(n_draws);
    for (t, o) in parts {
        thetas.extend(t);
        omegas.extend(o);
    }
    (thetas, omegas)
}

fn model_hash<T: Serialize>(model: &T) -> Result<String> {
    let bytes = serde_json::to_vec(model)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn check_count(n_draws: usize) -> Result<()> {
    if n_draws == 0 {
        return Err(domain("at least one draw is required"));
    }
    Ok(())
}

/// Composition draws from the model-averaged posterior of a binomial model.
pub fn composition_sample(
    space: &TwoModelSpace,
    data: BinomialData,
    n_draws: usize,
    seed: Seed,
) -> Result<DrawSet> {
    let mp = bma_posterior(space, data)?;
    let mut set = sample_mixture(&mp, n_draws, seed)?;
    set.model_hash = model_hash(&(space, data))?;
    Ok(set)
}

/// Composition draws from any mixture posterior, including grid components.
pub fn sample_mixture(mp: &MixturePosterior, n_draws: usize, seed: Seed) -> Result<DrawSet> {
    check_count(n_draws)?;
    let w1 = mp.w1().get();
    let d0 = Draw::new(mp.post0())?;
    let d1 = Draw::new(mp.post1())?;
    let (thetas, omegas) = blocks(
        n_draws,
        seed,
        StreamDomain::Composition,
        |rng, len, thetas, omegas| {
            for _ in 0..len {
                let omega = rng.random::<f64>() < w1;
                thetas.push(if omega {
                    d1.sample(rng)
                } else {
                    d0.sample(rng)
                });
                omegas.push(omega as u8);
            }
        },
    );
    Ok(DrawSet {
        thetas,
        omegas,
        seed,
        n_draws,
        model_hash: model_hash(&format!("{mp:?}"))?,
    })
}

/// Product-space draws with the model indicator collapsed onto its exact
/// posterior. Needs conjugate components.
pub fn product_space_sample(
    space: &TwoModelSpace,
    data: BinomialData,
    n_iter: usize,
    seed: Seed,
) -> Result<DrawSet> {
    check_count(n_iter)?;
    for prior in [&space.prior0, &space.prior1] {
        if matches!(prior, PriorComponent::Cauchy { .. }) {
            return Err(Error::UnsupportedModel(
                "product-space sampling needs conjugate components; \
                 use sample_mixture with a grid posterior instead"
                    .into(),
            ));
        }
    }
    // ω | data, with θ integrated out
    let pr_m1 = evidence_report(space, data)?.prob_m1_post.get();
    let d0 = Draw::new(&ComponentPosterior::conjugate(&space.prior0, data)?)?;
    let d1 = Draw::new(&ComponentPosterior::conjugate(&space.prior1, data)?)?;
    let (thetas, omegas) = blocks(
        n_iter,
        seed,
        StreamDomain::ProductSpace,
        |rng, len, thetas, omegas| {
            for _ in 0..len {
                let theta0 = d0.sample(rng);
                let theta1 = d1.sample(rng);
                let omega = rng.random::<f64>() < pr_m1;
                thetas.push(if omega { theta1 } else { theta0 });
                omegas.push(omega as u8);
            }
        },
    );
    Ok(DrawSet {
        thetas,
        omegas,
        seed,
        n_draws: n_iter,
        model_hash: model_hash(&(space, data))?,
    })
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Empirical quantile (lower order statistic) of sorted values.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin_space() -> TwoModelSpace {
        TwoModelSpace::point_null_uniform(0.5, Probability::HALF).unwrap()
    }

    #[test]
    fn composition_is_deterministic() {
        let data = BinomialData::new(60, 100).unwrap();
        let a = composition_sample(&coin_space(), data, 150_000, Seed(3)).unwrap();
        let b = composition_sample(&coin_space(), data, 150_000, Seed(3)).unwrap();
        assert_eq!(a, b);
        let c = composition_sample(&coin_space(), data, 150_000, Seed(4)).unwrap();
        assert_ne!(a.thetas, c.thetas);
        assert_eq!(a.thetas.len(), 150_000);
    }

    #[test]
    fn prefix_stable_across_lengths() {
        let data = BinomialData::new(60, 100).unwrap();
        let short = composition_sample(&coin_space(), data, 1000, Seed(3)).unwrap();
        let long = composition_sample(&coin_space(), data, 70_000, Seed(3)).unwrap();
        assert_eq!(short.thetas[..], long.thetas[..1000]);
    }

    #[test]
    fn degenerate_prior_gives_atom_only() {
        let space = TwoModelSpace::point_null_uniform(0.5, Probability::ONE).unwrap();
        let d =
            composition_sample(&space, BinomialData::new(3, 10).unwrap(), 10_000, Seed(1)).unwrap();
        assert!(d.thetas.iter().all(|&t| t == 0.5));
        assert!(estimates_from_draws(&d, Probability::HALF).degenerate);
    }

    #[test]
    fn estimates_arithmetic() {
        let set = |ones: usize, n: usize| DrawSet {
            thetas: vec![0.0; n],
            omegas: (0..n).map(|i| (i < ones) as u8).collect(),
            seed: Seed(0),
            n_draws: n,
            model_hash: String::new(),
        };
        let e = estimates_from_draws(&set(5, 10), Probability::HALF);
        assert_eq!((e.po10_hat, e.bf10_hat), (1.0, 1.0));
        let e = estimates_from_draws(&set(9, 10), Probability::new(0.9).unwrap());
        assert!((e.bf10_hat - 81.0).abs() < 1e-9);
        assert!(!e.degenerate);
        assert!(estimates_from_draws(&set(0, 10), Probability::HALF).degenerate);
    }

    #[test]
    fn product_space_prior_only() {
        let space = TwoModelSpace::point_null_uniform(0.5, Probability::new(0.3).unwrap()).unwrap();
        let d = product_space_sample(&space, BinomialData::new(0, 0).unwrap(), 200_000, Seed(9))
            .unwrap();
        let e = estimates_from_draws(&d, space.prob_m0);
        assert!((e.omega_hat.get() - 0.7).abs() < 3.0 * e.mc_se_omega);
    }

    #[test]
    fn product_space_rejects_cauchy() {
        let space = TwoModelSpace::new(
            PriorComponent::point(0.0).unwrap(),
            PriorComponent::cauchy(0.0, 0.707).unwrap(),
            Probability::HALF,
        );
        let err = product_space_sample(&space, BinomialData::new(1, 2).unwrap(), 10, Seed(0));
        assert!(matches!(err, Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn csv_roundtrip() {
        let data = BinomialData::new(4, 10).unwrap();
        let d = product_space_sample(&coin_space(), data, 500, Seed(2)).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = DrawSet::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, d);
        assert_eq!(d.model_hash.len(), 64);
    }

    #[test]
    fn ks_distance_basics() {
        assert_eq!(ks_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(ks_distance(&[0.0, 0.0], &[1.0, 1.0]), 1.0);
        assert!((ks_distance(&[1.0, 2.0], &[2.0, 3.0]) - 0.5).abs() < 1e-15);
    }
}
