use std::path::Path;

use congruent::calibration::{run_calibration, CalibrationConfig, CalibrationReport};
use congruent::effect::{
    effect_mixture_estimates_with, t_statistic, EffectEstimates, EffectModelSpec, TwoSampleSummary,
};
use congruent::evidence::{
    evidence_report, implied_prior_model_odds, marginal_likelihood, BinomialData,
};
use congruent::mixture::{bma_posterior, linspace, ComponentPosterior, MixturePosterior};
use congruent::numeric::Probability;
use congruent::priors::{PriorComponent, Region, TwoModelSpace};
use congruent::sampling::{
    composition_sample, estimates_from_draws, product_space_sample, DrawSet,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::output::{interval_display, posterior_summary, r3, Sink};
use crate::{
    BinomialModelArgs, CalibrateArgs, CliError, CoinArgs, EffectSizeArgs, IntervalNullArgs,
    Outcome, OutputArgs, SampleArgs, SamplerArg, SingleFlipArgs,
};

/// Theta grid for figure panels.
pub const FIGURE_GRID: usize = 1001;

pub(crate) fn probability(v: f64, what: &str) -> Result<Probability, CliError> {
    Probability::new(v).map_err(|_| CliError::Usage(format!("{what} must lie in [0, 1], got {v}")))
}

fn level(v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!(
            "credible level must lie in (0, 1), got {v}"
        )))
    }
}

pub(crate) fn point_null_space(m: &BinomialModelArgs) -> Result<TwoModelSpace, CliError> {
    Ok(TwoModelSpace::new(
        PriorComponent::point(m.theta0)?,
        PriorComponent::beta(m.alpha, m.beta)?,
        probability(m.prob_m0, "--prob-m0")?,
    ))
}

fn finish(summary: Value, sink: Sink) -> Outcome {
    Outcome {
        summary,
        files: sink.written().to_vec(),
    }
}

fn sink(o: &OutputArgs) -> Result<Sink, CliError> {
    Sink::new(o.out.as_deref(), o.format)
}

/// The 3×3 figure layout: priors, prior predictive pmfs over x, and
/// posteriors, for M0, M1 and the model average.
pub fn figure_panels(
    sink: &mut Sink,
    dir: &str,
    space: &TwoModelSpace,
    data: BinomialData,
) -> Result<(), CliError> {
    let grid = linspace(0.0, 1.0, FIGURE_GRID);
    let prior = bma_posterior(space, BinomialData::new(0, 0)?)?;
    let post = bma_posterior(space, data)?;
    let columns = |mp: &MixturePosterior| {
        [
            MixturePosterior::only(mp.post0().clone()),
            MixturePosterior::only(mp.post1().clone()),
            mp.clone(),
        ]
    };
    for (row, mp) in [("prior", &prior), ("posterior", &post)] {
        for (col, m) in ["m0", "m1", "mix"].iter().zip(columns(mp)) {
            sink.density(&format!("{dir}/{row}_{col}"), &m.density_data(&grid)?)?;
        }
    }
    let (p0, p1) = (space.prob_m0.get(), space.prob_m1().get());
    let mut pmf0 = Vec::new();
    let mut pmf1 = Vec::new();
    for x in 0..=data.n {
        let d = BinomialData::new(x, data.n)?;
        pmf0.push(marginal_likelihood(&space.prior0, d)?);
        pmf1.push(marginal_likelihood(&space.prior1, d)?);
    }
    let mix: Vec<f64> = pmf0
        .iter()
        .zip(&pmf1)
        .map(|(a, b)| p0 * a + p1 * b)
        .collect();
    sink.pmf(&format!("{dir}/data_m0"), &pmf0, data.x)?;
    sink.pmf(&format!("{dir}/data_m1"), &pmf1, data.x)?;
    sink.pmf(&format!("{dir}/data_mix"), &mix, data.x)?;
    Ok(())
}

pub fn coin_summary(
    space: &TwoModelSpace,
    data: BinomialData,
    lvl: f64,
) -> Result<Value, CliError> {
    let report = evidence_report(space, data)?;
    let mp = bma_posterior(space, data)?;
    let ci = mp.credible_interval(lvl)?;
    let m1 = MixturePosterior::only(mp.post1().clone());
    let ci1 = m1.credible_interval(lvl)?;
    Ok(json!({
        "data": data,
        "space": space,
        "evidence": report,
        "mixture": posterior_summary(&mp, &ci)?,
        "m1": posterior_summary(&m1, &ci1)?,
    }))
}

pub fn coin(a: &CoinArgs) -> Result<Outcome, CliError> {
    let space = point_null_space(&a.model)?;
    let data = BinomialData::new(a.x, a.n)?;
    let summary =
        json!({ "command": "coin", "result": coin_summary(&space, data, level(a.level)?)? });
    let mut sink = sink(&a.output)?;
    sink.json("coin.json", &summary)?;
    figure_panels(&mut sink, "figure", &space, data)?;
    Ok(finish(summary, sink))
}

pub const JEFFREYS_CAVEAT: &str = "Jeffreys intervals treat the probability of the observed outcome as the \
parameter, with a Beta(0.5, 0.5) prior, and report [Q(1 - level), 1]. This orientation is an interpretation; \
the intervals are not derived from the two-model analysis.";

pub fn single_flip_summary(space: &TwoModelSpace, x: u64) -> Result<Value, CliError> {
    if x > 1 {
        return Err(CliError::Usage(format!(
            "a single flip has x = 0 or 1, got {x}"
        )));
    }
    let data = BinomialData::new(x, 1)?;
    let report = evidence_report(space, data)?;
    let mp = bma_posterior(space, data)?;
    let theta0 = mp.post0().atom();
    let mut intervals = serde_json::Map::new();
    let mut jeffreys = serde_json::Map::new();
    // posterior for the probability of the observed outcome
    let observed = ComponentPosterior::beta(1.5, 0.5)?;
    for lvl in [0.95, 0.66] {
        let ci = mp.credible_interval(lvl)?;
        intervals.insert(
            format!("{lvl}"),
            json!({ "interval": ci, "display": interval_display(&ci) }),
        );
        let lower = observed.quantile(1.0 - lvl);
        jeffreys.insert(
            format!("{lvl}"),
            json!({ "lower": lower, "upper": 1.0, "display": format!("[{:.2}, 1.00]", lower) }),
        );
    }
    let tails = theta0.map(
        |t| json!({ "below": mp.cdf_left(t), "above": mp.sf(t), "at": mp.cdf(t) - mp.cdf_left(t) }),
    );
    Ok(json!({
        "data": data,
        "evidence": report,
        "mixture": { "w0": mp.w0().get(), "mean": mp.mean(), "median": mp.median()?, "intervals": intervals },
        "tails_around_null": tails,
        "jeffreys": { "intervals": jeffreys, "caveat": JEFFREYS_CAVEAT },
    }))
}

pub fn single_flip(a: &SingleFlipArgs) -> Result<Outcome, CliError> {
    let space = point_null_space(&a.model)?;
    let summary = json!({ "command": "single-flip", "result": single_flip_summary(&space, a.x)? });
    let mut sink = sink(&a.output)?;
    sink.json("single_flip.json", &summary)?;
    figure_panels(&mut sink, "figure", &space, BinomialData::new(a.x, 1)?)?;
    Ok(finish(summary, sink))
}

pub fn interval_null_space(
    low: f64,
    high: f64,
    prob_m0: Probability,
) -> Result<(TwoModelSpace, Region, Region), CliError> {
    let (inner, outer) = Region::central_split(low, high)?;
    let space = TwoModelSpace::new(
        PriorComponent::indicator(inner.clone())?,
        PriorComponent::indicator(outer.clone())?,
        prob_m0,
    );
    Ok((space, inner, outer))
}

pub fn interval_null_summary(
    low: f64,
    high: f64,
    prob_m0: Probability,
    data: BinomialData,
    lvl: f64,
) -> Result<Value, CliError> {
    let (space, inner, outer) = interval_null_space(low, high, prob_m0)?;
    let report = evidence_report(&space, data)?;
    let uniform = PriorComponent::uniform();
    let ipmo = implied_prior_model_odds(&uniform, &inner, &outer)?;
    let updated = PriorComponent::beta(data.x as f64 + 1.0, (data.n - data.x) as f64 + 1.0)?;
    let (mass_in, mass_out) = (updated.region_mass(&inner)?, updated.region_mass(&outer)?);
    let mp = bma_posterior(&space, data)?;
    let ci = mp.credible_interval(lvl)?;
    Ok(json!({
        "data": data,
        "space": space,
        "m_null": report.m0,
        "m_alt": report.m1,
        "bf_alt_null": report.bf10,
        "log10_bf_alt_null": report.log10_bf10,
        "implied_prior_model_odds": ipmo,
        "ipmo_times_bf": ipmo * report.bf10,
        "encompassing_posterior": {
            "mass_null_region": mass_in,
            "mass_alt_region": mass_out,
            "odds": mass_out / mass_in,
        },
        "evidence": report,
        "mixture": posterior_summary(&mp, &ci)?,
        "display": {
            "m_null": r3(report.m0),
            "m_alt": r3(report.m1),
            "bf_alt_null": r3(report.bf10),
            "ipmo_times_bf": r3(ipmo * report.bf10),
        },
    }))
}

pub fn interval_null(a: &IntervalNullArgs) -> Result<Outcome, CliError> {
    let data = BinomialData::new(a.x, a.n)?;
    let prob_m0 = probability(a.prob_m0, "--prob-m0")?;
    let summary = json!({
        "command": "interval-null",
        "result": interval_null_summary(a.region_low, a.region_high, prob_m0, data, level(a.level)?)?,
    });
    let mut sink = sink(&a.output)?;
    sink.json("interval_null.json", &summary)?;
    let (space, _, _) = interval_null_space(a.region_low, a.region_high, prob_m0)?;
    figure_panels(&mut sink, "figure", &space, data)?;
    Ok(finish(summary, sink))
}

#[derive(Debug, Deserialize)]
struct GroupRow {
    #[allow(dead_code)]
    group: String,
    n: u64,
    mean: f64,
    sd: f64,
}

pub fn parse_summary(text: &str) -> Result<TwoSampleSummary, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(CliError::Usage(format!(
            "--summary needs six comma-separated numbers, got {}",
            parts.len()
        )));
    }
    let count = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| CliError::Usage(format!("bad group size {s:?}")))
    };
    let real = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad number {s:?}")))
    };
    Ok(TwoSampleSummary::new(
        count(parts[0])?,
        real(parts[1])?,
        real(parts[2])?,
        count(parts[3])?,
        real(parts[4])?,
        real(parts[5])?,
    )?)
}

pub fn read_summary_csv(path: &Path) -> Result<TwoSampleSummary, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Vec<GroupRow> = r.deserialize().collect::<Result<_, _>>()?;
    match rows.as_slice() {
        [g1, g2] => Ok(TwoSampleSummary::new(
            g1.n, g1.mean, g1.sd, g2.n, g2.mean, g2.sd,
        )?),
        _ => Err(CliError::Usage(format!(
            "{} must hold exactly two group rows",
            path.display()
        ))),
    }
}

pub fn effect_summary(
    s: &TwoSampleSummary,
    spec: &EffectModelSpec,
    lvl: f64,
    grid: usize,
) -> Result<(Value, EffectEstimates), CliError> {
    let est = effect_mixture_estimates_with(s, spec, lvl, grid)?;
    let m1 = MixturePosterior::only(est.posterior.post1().clone());
    let ci1 = m1.credible_interval(lvl)?;
    let stat = t_statistic(s)?;
    let log10_bf = est.log_bf10 / std::f64::consts::LN_10;
    let value = json!({
        "summary": s,
        "spec": spec,
        "t_statistic": stat,
        "bf10": est.log_bf10.exp(),
        "log10_bf10": log10_bf,
        "prob_m0_post": est.prob_m0_post.get(),
        "m1": posterior_summary(&m1, &ci1)?,
        "mixture": posterior_summary(&est.posterior, &est.interval)?,
        "display": {
            "bf10": format!("{:.3}", est.log_bf10.exp()),
            "log10_bf10": format!("{log10_bf:.3}"),
            "prob_m0_post": r3(est.prob_m0_post.get()),
        },
    });
    Ok((value, est))
}

pub fn effect_size(a: &EffectSizeArgs) -> Result<Outcome, CliError> {
    let s = match (&a.summary, &a.summary_csv) {
        (Some(text), _) => parse_summary(text)?,
        (None, Some(path)) => read_summary_csv(path)?,
        (None, None) => return Err(CliError::Usage("give --summary or --summary-csv".into())),
    };
    if a.grid_size < 512 {
        return Err(CliError::Usage(format!(
            "--grid-size must be at least 512, got {}",
            a.grid_size
        )));
    }
    let spec = EffectModelSpec::new(
        a.cauchy_scale,
        probability(a.prob_m0, "--prob-m0")?,
        a.contrast.into(),
    )?;
    let (value, est) = effect_summary(&s, &spec, level(a.level)?, a.grid_size)?;
    let summary = json!({ "command": "effect-size", "result": value });
    let mut sink = sink(&a.output)?;
    sink.json("effect_size.json", &summary)?;
    if let ComponentPosterior::Grid(g) = est.posterior.post1() {
        sink.density(
            "figure/posterior_mix",
            &est.posterior.density_data(g.thetas())?,
        )?;
    }
    Ok(finish(summary, sink))
}

pub fn write_calibration(
    sink: &mut Sink,
    report: &CalibrationReport,
    names: [&str; 4],
) -> Result<(), CliError> {
    sink.csv(names[0], |w| report.write_coin_table(w))?;
    sink.csv(names[1], |w| report.write_means_table(w))?;
    sink.csv(names[2], |w| report.write_coverage_table(w))?;
    sink.json_always(names[3], &report.sidecar(), true)
}

pub fn calibrate(a: &CalibrateArgs) -> Result<Outcome, CliError> {
    let cfg = CalibrationConfig {
        n_coins: a.coins,
        n_flips: a.flips,
        space: point_null_space(&a.model)?,
        level: probability(level(a.level)?, "--level")?,
        seed: crate::seed(a.seed),
        shards: a.shards,
    };
    let report = run_calibration(&cfg)?;
    let summary = json!({ "command": "calibrate", "result": report.sidecar() });
    let mut sink = sink(&a.output)?;
    write_calibration(
        &mut sink,
        &report,
        [
            "coins.csv",
            "stratum_means.csv",
            "stratum_coverage.csv",
            "calibration.json",
        ],
    )?;
    Ok(finish(summary, sink))
}

pub fn draws(
    space: &TwoModelSpace,
    data: BinomialData,
    n: usize,
    sampler: SamplerArg,
    seed: u64,
) -> Result<DrawSet, CliError> {
    Ok(match sampler {
        SamplerArg::Composition => composition_sample(space, data, n, crate::seed(seed))?,
        SamplerArg::ProductSpace => product_space_sample(space, data, n, crate::seed(seed))?,
    })
}

pub fn sample(a: &SampleArgs) -> Result<Outcome, CliError> {
    let space = point_null_space(&a.model)?;
    let data = BinomialData::new(a.x, a.n)?;
    let set = draws(&space, data, a.draws, a.sampler, a.seed)?;
    let est = estimates_from_draws(&set, space.prob_m0);
    let report = evidence_report(&space, data)?;
    let summary = json!({
        "command": "sample",
        "result": {
            "sampler": format!("{:?}", a.sampler),
            "n_draws": set.n_draws,
            "seed": set.seed,
            "model_hash": set.model_hash,
            "estimates": est,
            "analytic": { "prob_m1_post": report.prob_m1_post.get(), "bf10": report.bf10 },
        },
    });
    let mut sink = sink(&a.output)?;
    sink.json("sample.json", &summary)?;
    sink.csv("draws.csv", |w| set.write_csv(w))?;
    Ok(finish(summary, sink))
}
