//! The many-coins experiment.
//!
//! Draw θ from the mixture prior, flip a coin with that bias `n_flips`
//! times, and group the coins by their number of heads x. Within a group
//! the average true θ estimates `E(θ | X = x)`, which is by definition the
//! posterior mean under the mixture prior, and the fraction of true θ values
//! inside the model-averaged credible interval estimates that interval's
//! actual posterior mass. [`analytic_oracle`] gives the exact targets.
//!
//! Coins are simulated in fixed blocks of [`BLOCK_SIZE`], each from its own
//! random stream, and block tallies are combined in block order, so the
//! report is identical for any shard count.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::evidence::{log_marginal_likelihood, BinomialData};
use crate::mixture::{ComponentPosterior, IntervalReport, MixturePosterior};
use crate::numeric::{log_add_exp, Probability, Seed, StreamDomain};
use crate::priors::TwoModelSpace;

/// Coins per random stream.
pub const BLOCK_SIZE: u64 = 1 << 15;

/// Coins whose individual draws are kept for the per-coin table.
pub const KEPT_COINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationConfig {
    pub n_coins: u64,
    pub n_flips: u64,
    pub space: TwoModelSpace,
    pub level: Probability,
    pub seed: Seed,
    /// Worker threads; does not affect the result.
    pub shards: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            n_coins: 1_000_000,
            n_flips: 10,
            space: TwoModelSpace::point_null_uniform(0.5, Probability::HALF)
                .expect("valid default space"),
            level: Probability::new(0.95).expect("valid level"),
            seed: Seed(20_231_017),
            shards: 1,
        }
    }
}

/// Exact posterior quantities for one outcome x.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub x: u64,
    /// `Pr(X = x)` under the mixture prior.
    pub marginal: f64,
    pub prob_m0_post: f64,
    pub theta_hat: f64,
    pub theta_hat_m1: f64,
    pub interval: IntervalReport,
    pub interval_m1: IntervalReport,
}

/// Model-averaged and M1-only posterior for every possible outcome.
pub fn analytic_oracle(
    space: &TwoModelSpace,
    n_flips: u64,
    level: Probability,
) -> Result<Vec<OracleRow>> {
    let (p0, p1) = (space.prob_m0.get(), space.prob_m1().get());
    (0..=n_flips)
        .map(|x| {
            let data = BinomialData::new(x, n_flips)?;
            let lm0 = p0.ln() + log_marginal_likelihood(&space.prior0, data)?;
            let lm1 = p1.ln() + log_marginal_likelihood(&space.prior1, data)?;
            let log_marginal = log_add_exp(lm0, lm1);
            let w0 = Probability::saturating((lm0 - log_marginal).exp());
            let post1 = ComponentPosterior::conjugate(&space.prior1, data)?;
            let post0 = if w0.get() > 0.0 {
                ComponentPosterior::conjugate(&space.prior0, data)?
            } else {
                post1.clone()
            };
            let mix = MixturePosterior::new(w0, post0, post1.clone());
            let m1 = MixturePosterior::only(post1);
            Ok(OracleRow {
                x,
                marginal: log_marginal.exp(),
                prob_m0_post: w0.get(),
                theta_hat: mix.mean(),
                theta_hat_m1: m1.mean(),
                interval: mix.credible_interval(level.get())?,
                interval_m1: m1.credible_interval(level.get())?,
            })
        })
        .collect()
}

/// Simulated and analytic results for one stratum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumRow {
    pub x: u64,
    pub count: u64,
    /// `None` for an empty stratum.
    pub mean_true_theta: Option<f64>,
    pub sd_true_theta: Option<f64>,
    pub theta_hat: f64,
    pub theta_hat_m1: f64,
    pub coverage_m1: Option<f64>,
    pub coverage_mix: Option<f64>,
    pub expected_count: f64,
    pub interval: IntervalReport,
    pub interval_m1: IntervalReport,
}

impl StratumRow {
    /// Monte Carlo standard error of `mean_true_theta`.
    pub fn mean_se(&self) -> Option<f64> {
        self.sd_true_theta.map(|sd| sd / (self.count as f64).sqrt())
    }

    /// Binomial standard error of a coverage estimate around `p`.
    pub fn coverage_se(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.count as f64).sqrt()
    }
}

/// One simulated coin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coin {
    pub theta: f64,
    pub x: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub config: CalibrationConfig,
    pub strata: Vec<StratumRow>,
    /// The first [`KEPT_COINS`] coins, in simulation order.
    pub first_coins: Vec<Coin>,
}

#[derive(Clone)]
struct Tally {
    count: Vec<u64>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    in_mix: Vec<u64>,
    in_m1: Vec<u64>,
}

impl Tally {
    fn new(k: usize) -> Self {
        Tally {
            count: vec![0; k],
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
            in_mix: vec![0; k],
            in_m1: vec![0; k],
        }
    }

    fn absorb(&mut self, other: &Tally) {
        for i in 0..self.count.len() {
            self.count[i] += other.count[i];
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
            self.in_mix[i] += other.in_mix[i];
            self.in_m1[i] += other.in_m1[i];
        }
    }
}

fn validate(cfg: &CalibrationConfig) -> Result<()> {
    if cfg.n_coins == 0 || cfg.n_flips == 0 {
        return Err(domain("need at least one coin and one flip"));
    }
    if !(cfg.level.get() > 0.0 && cfg.level.get() < 1.0) {
        return Err(domain("credible level must lie in (0, 1)"));
    }
    if cfg.shards == 0 {
        return Err(domain("need at least one shard"));
    }
    Ok(())
}

pub fn run_calibration(cfg: &CalibrationConfig) -> Result<CalibrationReport> {
    validate(cfg)?;
    let oracle = analytic_oracle(&cfg.space, cfg.n_flips, cfg.level)?;
    let k = oracle.len();
    let p0 = cfg.space.prob_m0.get();
    let n_blocks = cfg.n_coins.div_ceil(BLOCK_SIZE);

    let simulate_block = |b: u64| -> Result<(Tally, Vec<Coin>)> {
        let mut rng = cfg.seed.stream(StreamDomain::Calibration, b);
        let len = BLOCK_SIZE.min(cfg.n_coins - b * BLOCK_SIZE);
        let mut tally = Tally::new(k);
        let mut kept = Vec::new();
        for _ in 0..len {
            let theta = if rng.random::<f64>() < p0 {
                cfg.space.prior0.sample(&mut rng)?
            } else {
                cfg.space.prior1.sample(&mut rng)?
            };
            let x = Binomial::new(cfg.n_flips, theta.clamp(0.0, 1.0))
                .map_err(|e| domain(e.to_string()))?
                .sample(&mut rng);
            let i = x as usize;
            tally.count[i] += 1;
            tally.sum[i] += theta;
            tally.sum_sq[i] += theta * theta;
            tally.in_mix[i] += oracle[i].interval.contains(theta) as u64;
            tally.in_m1[i] += oracle[i].interval_m1.contains(theta) as u64;
            if b == 0 && kept.len() < KEPT_COINS {
                kept.push(Coin { theta, x });
            }
        }
        Ok((tally, kept))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.shards)
        .build()
        .map_err(|e| domain(e.to_string()))?;
    let blocks: Vec<(Tally, Vec<Coin>)> = pool.install(|| {
        (0..n_blocks)
            .into_par_iter()
            .map(simulate_block)
            .collect::<Result<_>>()
    })?;

    let mut total = Tally::new(k);
    for (tally, _) in &blocks {
        total.absorb(tally);
    }
    let first_coins = blocks
        .into_iter()
        .next()
        .map(|(_, kept)| kept)
        .unwrap_or_default();

    let strata = oracle
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let n = total.count[i];
            let nf = n as f64;
            let mean = (n > 0).then(|| total.sum[i] / nf);
            let sd = (n > 1).then(|| {
                let m = total.sum[i] / nf;
                ((total.sum_sq[i] - nf * m * m).max(0.0) / (nf - 1.0)).sqrt()
            });
            StratumRow {
                x: row.x,
                count: n,
                mean_true_theta: mean,
                sd_true_theta: sd,
                theta_hat: row.theta_hat,
                theta_hat_m1: row.theta_hat_m1,
                coverage_m1: (n > 0).then(|| total.in_m1[i] as f64 / nf),
                coverage_mix: (n > 0).then(|| total.in_mix[i] as f64 / nf),
                expected_count: row.marginal * cfg.n_coins as f64,
                interval: row.interval,
                interval_m1: row.interval_m1,
            }
        })
        .collect();
    Ok(CalibrationReport {
        config: cfg.clone(),
        strata,
        first_coins,
    })
}

fn fmt3(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.3}"))
}

fn interval_text(iv: &IntervalReport) -> String {
    format!("[{:.3}, {:.3}]", iv.lower, iv.upper)
}

impl CalibrationReport {
    /// Pearson chi-square of stratum counts against the analytic marginals,
    /// skipping strata with zero expected count.
    pub fn chi_square(&self) -> (f64, usize) {
        let used: Vec<&StratumRow> = self
            .strata
            .iter()
            .filter(|r| r.expected_count > 0.0)
            .collect();
        let stat = used
            .iter()
            .map(|r| (r.count as f64 - r.expected_count).powi(2) / r.expected_count)
            .sum();
        (stat, used.len().saturating_sub(1))
    }

    /// Per-coin rows: j, θ, X, N, M1 and model-averaged estimates.
    pub fn write_coin_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "j",
            "theta",
            "x",
            "n",
            "theta_hat_m1",
            "cri_m1",
            "theta_hat",
            "cri",
        ])?;
        for (j, coin) in self.first_coins.iter().enumerate() {
            let row = &self.strata[coin.x as usize];
            w.write_record([
                (j + 1).to_string(),
                format!("{:.2}", coin.theta),
                coin.x.to_string(),
                self.config.n_flips.to_string(),
                format!("{:.3}", row.theta_hat_m1),
                interval_text(&row.interval_m1),
                format!("{:.3}", row.theta_hat),
                interval_text(&row.interval),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Stratum means: x, count, x/N, M1 mean, model-averaged mean, average true θ.
    pub fn write_means_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "x",
            "count",
            "x_over_n",
            "theta_hat_m1",
            "theta_hat",
            "mean_true_theta",
        ])?;
        for r in &self.strata {
            w.write_record([
                r.x.to_string(),
                r.count.to_string(),
                format!("{:.1}", r.x as f64 / self.config.n_flips as f64),
                format!("{:.3}", r.theta_hat_m1),
                format!("{:.3}", r.theta_hat),
                fmt3(r.mean_true_theta),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Stratum coverage: x, count, M1-interval and model-averaged-interval coverage.
    pub fn write_coverage_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "count", "coverage_m1", "coverage_mix"])?;
        for r in &self.strata {
            w.write_record([
                r.x.to_string(),
                r.count.to_string(),
                fmt3(r.coverage_m1),
                fmt3(r.coverage_mix),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Analytic targets and Monte Carlo standard errors, as JSON.
    pub fn sidecar(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .strata
            .iter()
            .map(|r| {
                serde_json::json!({
                    "x": r.x,
                    "count": r.count,
                    "expected_count": r.expected_count,
                    "theta_hat": r.theta_hat,
                    "theta_hat_m1": r.theta_hat_m1,
                    "mean_true_theta": r.mean_true_theta,
                    "mean_true_theta_se": r.mean_se(),
                    "interval": r.interval,
                    "interval_m1": r.interval_m1,
                    "coverage_mix": r.coverage_mix,
                    "coverage_mix_se": (r.count > 0).then(|| r.coverage_se(r.interval.actual_mass)),
                    "coverage_m1": r.coverage_m1,
                    "coverage_m1_se": (r.count > 0).then(|| r.coverage_se(r.interval_m1.actual_mass)),
                })
            })
            .collect();
        let (chi2, dof) = self.chi_square();
        serde_json::json!({
            "config": self.config,
            "chi_square": chi2,
            "chi_square_dof": dof,
            "strata": rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::binom_pmf;
    use crate::priors::{PriorComponent, Region};

    fn small(seed: u64, shards: usize) -> CalibrationConfig {
        CalibrationConfig {
            n_coins: 100_000,
            seed: Seed(seed),
            shards,
            ..CalibrationConfig::default()
        }
    }

    #[test]
    fn oracle_marginals() {
        let rows = analytic_oracle(
            &CalibrationConfig::default().space,
            10,
            Probability::new(0.95).unwrap(),
        )
        .unwrap();
        let total: f64 = rows.iter().map(|r| r.marginal).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let want = 0.5 * binom_pmf(4, 10, 0.5).unwrap() + 0.5 / 11.0;
        assert!((rows[4].marginal - want).abs() < 1e-15);
        assert!((rows[4].marginal - 0.1479936).abs() < 1e-7);
        assert!((rows[5].theta_hat - 0.5).abs() < 1e-15);
        assert!((rows[1].interval.actual_mass - 0.96971).abs() < 1e-5);
        assert!((rows[8].interval.actual_mass - 0.95295).abs() < 1e-5);
    }

    #[test]
    fn oracle_without_null_is_uniform() {
        let space = TwoModelSpace::point_null_uniform(0.5, Probability::ZERO).unwrap();
        for r in analytic_oracle(&space, 10, Probability::new(0.95).unwrap()).unwrap() {
            assert!((r.marginal - 1.0 / 11.0).abs() < 1e-14);
        }
    }

    #[test]
    fn oracle_handles_data_impossible_under_null() {
        let space = TwoModelSpace::new(
            PriorComponent::point(0.0).unwrap(),
            PriorComponent::uniform(),
            Probability::HALF,
        );
        let rows = analytic_oracle(&space, 5, Probability::new(0.9).unwrap()).unwrap();
        assert_eq!(rows[3].prob_m0_post, 0.0);
        assert!((rows[3].theta_hat - 4.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn counts_sum_and_strata_are_calibrated() {
        let rep = run_calibration(&small(5, 2)).unwrap();
        assert_eq!(rep.strata.iter().map(|r| r.count).sum::<u64>(), 100_000);
        for r in &rep.strata {
            let se = r.mean_se().unwrap();
            assert!(
                (r.mean_true_theta.unwrap() - r.theta_hat).abs() < 4.0 * se,
                "x={}",
                r.x
            );
        }
        assert_eq!(rep.first_coins.len(), KEPT_COINS);
    }

    #[test]
    fn shard_count_does_not_matter() {
        let a = run_calibration(&small(11, 1)).unwrap();
        let b = run_calibration(&small(11, 7)).unwrap();
        assert_eq!(a.strata, b.strata);
        assert_eq!(a.first_coins, b.first_coins);
    }

    #[test]
    fn interval_null_space_runs() {
        let (t0, t1) = Region::central_split(0.45, 0.55).unwrap();
        let space = TwoModelSpace::new(
            PriorComponent::indicator(t0).unwrap(),
            PriorComponent::indicator(t1).unwrap(),
            Probability::HALF,
        );
        let cfg = CalibrationConfig {
            n_coins: 50_000,
            space,
            ..CalibrationConfig::default()
        };
        let rep = run_calibration(&cfg).unwrap();
        for r in &rep.strata {
            // no atoms, so coverage targets the nominal level
            assert!((r.interval.actual_mass - 0.95).abs() < 1e-9);
        }
    }

    #[test]
    fn tables_have_reference_layout() {
        let rep = run_calibration(&small(1, 1)).unwrap();
        let mut buf = Vec::new();
        rep.write_means_table(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,count,x_over_n,theta_hat_m1,theta_hat,mean_true_theta\n0,"));
        assert_eq!(text.lines().count(), 12);
        let mut buf = Vec::new();
        rep.write_coin_table(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().lines().count(),
            KEPT_COINS + 1
        );
        assert!(
            rep.sidecar()["strata"][4]["expected_count"]
                .as_f64()
                .unwrap()
                > 0.0
        );
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run_calibration(&CalibrationConfig {
            n_coins: 0,
            ..CalibrationConfig::default()
        })
        .is_err());
        assert!(run_calibration(&CalibrationConfig {
            shards: 0,
            ..CalibrationConfig::default()
        })
        .is_err());
    }
}
