//! `reproduce-paper`: recompute every reference number, compare each with
//! its stored target and tolerance, and write the tables and figure data.

use congruent::calibration::{run_calibration, CalibrationConfig};
use congruent::effect::{Contrast, EffectModelSpec, TwoSampleSummary};
use congruent::evidence::BinomialData;
use congruent::numeric::{chi_square_sf, Probability};
use congruent::priors::TwoModelSpace;
use congruent::sampling::{estimates_from_draws, ks_distance};
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::{
    coin_summary, draws, effect_summary, figure_panels, interval_null_space, interval_null_summary,
    single_flip_summary, write_calibration,
};
use crate::output::{Format, Sink};
use crate::{seed, CliError, Outcome, ReproduceArgs, SamplerArg};

/// Average true θ per stratum in the reference many-coins table.
pub const REFERENCE_STRATUM_MEANS: [f64; 11] = [
    0.087, 0.198, 0.331, 0.427, 0.474, 0.500, 0.526, 0.573, 0.670, 0.801, 0.913,
];

/// Interval mass targets per stratum: the nominal 95% except where the
/// atom at 0.5 sits on an interval endpoint.
pub const COVERAGE_TARGETS: [f64; 11] = [
    0.950, 0.9697, 0.9529, 0.950, 0.950, 0.950, 0.950, 0.950, 0.9529, 0.9697, 0.950,
];

#[derive(Debug, Clone, Serialize)]
pub struct Item {
    pub group: String,
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    /// `abs` compares |value − target|; `max` requires value < target;
    /// `relative` compares |value/target − 1|.
    pub kind: &'static str,
    pub pass: bool,
}

impl Item {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let bound = match self.kind {
            "max" => format!("< {}", self.target),
            "relative" => format!("{} ± {}%", self.target, self.tolerance * 100.0),
            _ => format!("{} ± {}", self.target, self.tolerance),
        };
        format!(
            "{status} {}/{}: {:.6} (target {bound})",
            self.group, self.name, self.value
        )
    }
}

#[derive(Default)]
pub struct Checklist {
    pub items: Vec<Item>,
}

impl Checklist {
    fn push(
        &mut self,
        group: &str,
        name: &str,
        value: f64,
        target: f64,
        tolerance: f64,
        kind: &'static str,
    ) {
        let pass = match kind {
            "max" => value < target,
            "relative" => (value / target - 1.0).abs() <= tolerance,
            _ => (value - target).abs() <= tolerance,
        };
        self.items.push(Item {
            group: group.into(),
            name: name.into(),
            value,
            target,
            tolerance,
            kind,
            pass,
        });
    }

    pub fn abs(&mut self, group: &str, name: &str, value: f64, target: f64, tolerance: f64) {
        self.push(group, name, value, target, tolerance, "abs");
    }

    pub fn below(&mut self, group: &str, name: &str, value: f64, limit: f64) {
        self.push(group, name, value, limit, 0.0, "max");
    }

    pub fn relative(&mut self, group: &str, name: &str, value: f64, target: f64, tolerance: f64) {
        self.push(group, name, value, target, tolerance, "relative");
    }

    pub fn failures(&self) -> Vec<String> {
        self.items
            .iter()
            .filter(|i| !i.pass)
            .map(Item::line)
            .collect()
    }
}

fn f(v: &Value, path: &str) -> f64 {
    v.pointer(path).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

pub fn bmi() -> TwoSampleSummary {
    TwoSampleSummary {
        n1: 193,
        mean1: 26.0,
        sd1: 4.9,
        n2: 23,
        mean2: 25.7,
        sd2: 4.4,
    }
}

pub fn nas() -> TwoSampleSummary {
    TwoSampleSummary {
        n1: 193,
        mean1: 5.5,
        sd1: 4.2,
        n2: 23,
        mean2: 15.4,
        sd2: 3.5,
    }
}

pub fn reproduce(a: &ReproduceArgs) -> Result<Outcome, CliError> {
    if a.calibration_coins == 0 || a.draws == 0 {
        return Err(CliError::Usage(
            "--calibration-coins and --draws must be positive".into(),
        ));
    }
    let mut sink = Sink::new(Some(&a.out), Format::Both)?;
    let mut c = Checklist::default();
    let half = Probability::HALF;
    let coin_space = TwoModelSpace::point_null_uniform(0.5, half)?;
    let coin_data = BinomialData::new(60, 100)?;

    // coin, 60 heads in 100 flips
    let coin = coin_summary(&coin_space, coin_data, 0.95)?;
    c.abs("coin", "bf10", f(&coin, "/evidence/bf10"), 0.913, 0.001);
    c.abs(
        "coin",
        "prob_m0_post",
        f(&coin, "/evidence/prob_m0_post"),
        0.523,
        0.001,
    );
    c.abs(
        "coin",
        "prob_m1_post",
        f(&coin, "/evidence/prob_m1_post"),
        0.477,
        0.001,
    );
    c.abs(
        "coin-mixture",
        "mean",
        f(&coin, "/mixture/mean"),
        0.547,
        0.001,
    );
    c.abs(
        "coin-mixture",
        "median",
        f(&coin, "/mixture/median"),
        0.5,
        0.0,
    );
    c.abs(
        "coin-mixture",
        "lower",
        f(&coin, "/mixture/interval/lower"),
        0.500,
        0.001,
    );
    c.abs(
        "coin-mixture",
        "upper",
        f(&coin, "/mixture/interval/upper"),
        0.676,
        0.001,
    );
    c.abs(
        "coin-mixture",
        "actual_mass",
        f(&coin, "/mixture/interval/actual_mass"),
        0.9639,
        0.0005,
    );
    c.abs(
        "coin-mixture",
        "lower_tail",
        f(&coin, "/mixture/interval/lower_tail"),
        0.011,
        0.0005,
    );
    c.abs(
        "coin-mixture",
        "upper_tail",
        f(&coin, "/mixture/interval/upper_tail"),
        0.025,
        0.0005,
    );
    c.abs("coin-m1", "mean", f(&coin, "/m1/mean"), 0.598, 0.001);
    c.abs("coin-m1", "median", f(&coin, "/m1/median"), 0.599, 0.001);
    c.abs(
        "coin-m1",
        "lower",
        f(&coin, "/m1/interval/lower"),
        0.502,
        0.001,
    );
    c.abs(
        "coin-m1",
        "upper",
        f(&coin, "/m1/interval/upper"),
        0.691,
        0.001,
    );
    sink.json("coin.json", &coin)?;
    figure_panels(&mut sink, "figure1", &coin_space, coin_data)?;

    // one flip landing tails
    let flip = single_flip_summary(&coin_space, 0)?;
    c.abs("single-flip", "bf10", f(&flip, "/evidence/bf10"), 1.0, 0.0);
    c.abs(
        "single-flip",
        "lower_95",
        f(&flip, "/mixture/intervals/0.95/interval/lower"),
        0.025,
        0.001,
    );
    c.abs(
        "single-flip",
        "upper_95",
        f(&flip, "/mixture/intervals/0.95/interval/upper"),
        0.776,
        0.001,
    );
    c.abs(
        "single-flip",
        "lower_66",
        f(&flip, "/mixture/intervals/0.66/interval/lower"),
        0.188,
        0.001,
    );
    c.abs(
        "single-flip",
        "upper_66",
        f(&flip, "/mixture/intervals/0.66/interval/upper"),
        0.500,
        0.001,
    );
    c.abs(
        "single-flip",
        "pr_below_null",
        f(&flip, "/tails_around_null/below"),
        0.375,
        1e-6,
    );
    c.abs(
        "single-flip",
        "pr_above_null",
        f(&flip, "/tails_around_null/above"),
        0.125,
        1e-6,
    );
    c.abs(
        "single-flip-jeffreys",
        "lower_95",
        f(&flip, "/jeffreys/intervals/0.95/lower"),
        0.23,
        0.005,
    );
    c.abs(
        "single-flip-jeffreys",
        "lower_66",
        f(&flip, "/jeffreys/intervals/0.66/lower"),
        0.70,
        0.005,
    );
    sink.json("single_flip.json", &flip)?;
    figure_panels(&mut sink, "figure2", &coin_space, BinomialData::new(0, 1)?)?;

    // interval null [0.45, 0.55] against its complement
    let inull = interval_null_summary(0.45, 0.55, half, coin_data, 0.95)?;
    c.abs(
        "interval-null",
        "m_null",
        f(&inull, "/m_null"),
        0.016,
        0.0005,
    );
    c.abs("interval-null", "m_alt", f(&inull, "/m_alt"), 0.009, 0.0005);
    c.abs(
        "interval-null",
        "bf_alt_null",
        f(&inull, "/bf_alt_null"),
        0.584,
        0.002,
    );
    c.abs(
        "interval-null",
        "implied_prior_model_odds",
        f(&inull, "/implied_prior_model_odds"),
        9.0,
        1e-12,
    );
    c.abs(
        "interval-null",
        "ipmo_times_bf",
        f(&inull, "/ipmo_times_bf"),
        5.255,
        0.01,
    );
    c.abs(
        "interval-null",
        "region_odds",
        f(&inull, "/encompassing_posterior/odds"),
        0.840 / 0.160,
        0.01,
    );
    c.abs(
        "interval-null-mixture",
        "w0",
        f(&inull, "/mixture/w0"),
        0.631,
        0.002,
    );
    c.abs(
        "interval-null-mixture",
        "w1",
        f(&inull, "/mixture/w1"),
        0.369,
        0.002,
    );
    c.abs(
        "interval-null-mixture",
        "mean",
        f(&inull, "/mixture/mean"),
        0.557,
        0.002,
    );
    c.abs(
        "interval-null-mixture",
        "median",
        f(&inull, "/mixture/median"),
        0.543,
        0.002,
    );
    c.abs(
        "interval-null-mixture",
        "lower",
        f(&inull, "/mixture/interval/lower"),
        0.479,
        0.002,
    );
    c.abs(
        "interval-null-mixture",
        "upper",
        f(&inull, "/mixture/interval/upper"),
        0.673,
        0.002,
    );
    sink.json("interval_null.json", &inull)?;
    let (inull_space, _, _) = interval_null_space(0.45, 0.55, half)?;
    figure_panels(&mut sink, "figure3", &inull_space, coin_data)?;

    // effect sizes; reported signs correspond to non-type-D minus type-D
    let spec = EffectModelSpec {
        contrast: Contrast::FirstMinusSecond,
        ..EffectModelSpec::default()
    };
    let (bmi_v, _) = effect_summary(&bmi(), &spec, 0.95, congruent::effect::DEFAULT_GRID_SIZE)?;
    c.relative("effect-bmi", "bf10", f(&bmi_v, "/bf10"), 1.0 / 4.2, 0.05);
    c.abs(
        "effect-bmi",
        "prob_m0_post",
        f(&bmi_v, "/prob_m0_post"),
        0.808,
        0.005,
    );
    c.abs(
        "effect-bmi",
        "m1_median",
        f(&bmi_v, "/m1/median"),
        0.05,
        0.01,
    );
    c.abs(
        "effect-bmi",
        "m1_lower",
        f(&bmi_v, "/m1/interval/lower"),
        -0.35,
        0.01,
    );
    c.abs(
        "effect-bmi",
        "m1_upper",
        f(&bmi_v, "/m1/interval/upper"),
        0.45,
        0.01,
    );
    c.abs(
        "effect-bmi",
        "mix_median",
        f(&bmi_v, "/mixture/median"),
        0.0,
        0.005,
    );
    c.abs(
        "effect-bmi",
        "mix_mean",
        f(&bmi_v, "/mixture/mean"),
        0.01,
        0.005,
    );
    c.abs(
        "effect-bmi",
        "mix_lower",
        f(&bmi_v, "/mixture/interval/lower"),
        -0.18,
        0.01,
    );
    c.abs(
        "effect-bmi",
        "mix_upper",
        f(&bmi_v, "/mixture/interval/upper"),
        0.28,
        0.01,
    );
    let (nas_v, _) = effect_summary(&nas(), &spec, 0.95, congruent::effect::DEFAULT_GRID_SIZE)?;
    c.abs(
        "effect-nas",
        "log10_bf10",
        f(&nas_v, "/log10_bf10"),
        20.0,
        1.0,
    );
    c.abs(
        "effect-nas",
        "m1_abs_median",
        f(&nas_v, "/m1/median").abs(),
        2.36,
        0.02,
    );
    let (lo, hi) = (
        f(&nas_v, "/m1/interval/lower"),
        f(&nas_v, "/m1/interval/upper"),
    );
    c.abs(
        "effect-nas",
        "m1_inner_magnitude",
        lo.abs().min(hi.abs()),
        1.87,
        0.02,
    );
    c.abs(
        "effect-nas",
        "m1_outer_magnitude",
        lo.abs().max(hi.abs()),
        2.85,
        0.02,
    );
    for key in ["median", "mean", "interval/lower", "interval/upper"] {
        let (m, mix) = (
            f(&nas_v, &format!("/m1/{key}")),
            f(&nas_v, &format!("/mixture/{key}")),
        );
        c.abs(
            "effect-nas",
            &format!("mix_minus_m1_{}", key.replace('/', "_")),
            mix - m,
            0.0,
            0.005,
        );
    }
    sink.json("effect_size.json", &json!({ "bmi": bmi_v, "nas": nas_v }))?;
    sink.csv("table1.csv", |w| {
        let mut t = csv::Writer::from_writer(w);
        t.write_record(["outcome", "group", "n", "mean", "sd"])?;
        for (name, s) in [("BMI", bmi()), ("NAS", nas())] {
            t.write_record([
                name,
                "non-type-D",
                &s.n1.to_string(),
                &s.mean1.to_string(),
                &s.sd1.to_string(),
            ])?;
            t.write_record([
                name,
                "type-D",
                &s.n2.to_string(),
                &s.mean2.to_string(),
                &s.sd2.to_string(),
            ])?;
        }
        t.flush()?;
        Ok(())
    })?;

    // samplers
    let draw_scale = (1e6 / a.draws as f64).sqrt();
    let ps = draws(
        &coin_space,
        coin_data,
        a.draws,
        SamplerArg::ProductSpace,
        a.seed,
    )?;
    let comp = draws(
        &coin_space,
        coin_data,
        a.draws,
        SamplerArg::Composition,
        a.seed,
    )?;
    let est = estimates_from_draws(&ps, coin_space.prob_m0);
    c.abs(
        "product-space",
        "omega_hat",
        est.omega_hat.get(),
        0.477,
        0.0015 * draw_scale,
    );
    c.abs(
        "product-space",
        "bf10_hat",
        est.bf10_hat,
        0.913,
        0.01 * draw_scale,
    );
    c.below(
        "product-space",
        "ks_vs_composition",
        ks_distance(&ps.thetas, &comp.thetas),
        0.003 * draw_scale,
    );
    sink.json(
        "product_space.json",
        &json!({ "estimates": est, "n_draws": ps.n_draws, "seed": ps.seed }),
    )?;

    // many coins
    let scale = (1e6 / a.calibration_coins as f64).sqrt();
    let cfg = CalibrationConfig {
        n_coins: a.calibration_coins,
        seed: seed(a.seed),
        shards: a.shards,
        ..CalibrationConfig::default()
    };
    let report = run_calibration(&cfg)?;
    for (r, (&mean_ref, &cov_ref)) in report
        .strata
        .iter()
        .zip(REFERENCE_STRATUM_MEANS.iter().zip(&COVERAGE_TARGETS))
    {
        let mean = r.mean_true_theta.unwrap_or(f64::NAN);
        c.abs(
            "calibration-means",
            &format!("x{}", r.x),
            mean,
            mean_ref,
            0.005 * scale,
        );
        let cov = r.coverage_mix.unwrap_or(f64::NAN);
        c.abs(
            "calibration-coverage",
            &format!("x{}", r.x),
            cov,
            cov_ref,
            0.005 * scale,
        );
    }
    c.abs(
        "calibration-coverage",
        "m1_x1",
        report.strata[1].coverage_m1.unwrap_or(f64::NAN),
        0.858,
        0.01 * scale,
    );
    let (chi2, dof) = report.chi_square();
    c.below(
        "calibration-counts",
        "chi_square_pvalue_complement",
        1.0 - chi_square_sf(chi2, dof as f64)?,
        0.999,
    );
    let row4 = &report.strata[4];
    c.abs(
        "calibration-counts",
        "pr_x4",
        row4.expected_count / a.calibration_coins as f64,
        0.148,
        0.0005,
    );
    let p4 = row4.expected_count / a.calibration_coins as f64;
    let se4 = (a.calibration_coins as f64 * p4 * (1.0 - p4)).sqrt();
    c.abs(
        "calibration-counts",
        "observed_x4",
        row4.count as f64,
        row4.expected_count,
        3.0 * se4,
    );
    write_calibration(
        &mut sink,
        &report,
        ["table2.csv", "table3.csv", "table4.csv", "calibration.json"],
    )?;

    let mut groups: Vec<&str> = c.items.iter().map(|i| i.group.as_str()).collect();
    groups.dedup();
    let failures = c.failures();
    let manifest = json!({
        "all_pass": failures.is_empty(),
        "groups": groups,
        "items": c.items,
        "config": {
            "calibration_coins": a.calibration_coins,
            "draws": a.draws,
            "seed": a.seed,
            "calibration_tolerance_scale": scale,
            "sampler_tolerance_scale": draw_scale,
        },
        "files": sink.written().iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    sink.json("manifest.json", &manifest)?;
    for item in &c.items {
        println!("{}", item.line());
    }
    if failures.is_empty() {
        Ok(Outcome {
            summary: manifest,
            files: sink.written().to_vec(),
        })
    } else {
        Err(CliError::Tolerance(failures))
    }
}
