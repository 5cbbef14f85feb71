//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed on every run.
//! Exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use congruent::calibration::{run_calibration, CalibrationConfig, CalibrationReport};
use congruent::effect::{
    effect_mixture_estimates_with, Contrast, EffectModelSpec, TwoSampleSummary,
};
use congruent::evidence::{bayes_factor, evidence_report, implied_prior_model_odds, BinomialData};
use congruent::mixture::{bma_posterior, linspace, MixturePosterior};
use congruent::numeric::{integrate, Probability, QuadratureSpec, Seed};
use congruent::priors::{PriorComponent, Region, TwoModelSpace};
use congruent::sampling::{
    composition_sample, estimates_from_draws, ks_distance, product_space_sample,
};
use statrs::distribution::{Beta, Binomial, ChiSquared, ContinuousCDF, Discrete};

struct Criterion {
    name: &'static str,
    checks: usize,
    failures: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion {
            name,
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, what: &str, ok: bool, detail: String) {
        self.checks += 1;
        if !ok {
            self.failures.push(format!("{what}: {detail}"));
        }
    }

    fn near(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        let ok = (value - target).abs() <= tol;
        self.check(what, ok, format!("{value:.6} vs {target} ± {tol}"));
    }

    fn rel(&mut self, what: &str, value: f64, target: f64, tol: f64) {
        let ok = if target == 0.0 {
            value == 0.0
        } else {
            (value / target - 1.0).abs() <= tol
        };
        self.check(
            what,
            ok,
            format!("{value:e} vs {target:e}, relative tol {tol:e}"),
        );
    }

    fn within(&mut self, what: &str, elapsed: Duration, limit: Duration) {
        self.check(
            what,
            elapsed < limit,
            format!("{elapsed:?} vs limit {limit:?}"),
        );
    }
}

fn coin_space() -> TwoModelSpace {
    TwoModelSpace::point_null_uniform(0.5, Probability::HALF).unwrap()
}

fn interval_space() -> TwoModelSpace {
    let (inner, outer) = Region::central_split(0.45, 0.55).unwrap();
    TwoModelSpace::new(
        PriorComponent::indicator(inner).unwrap(),
        PriorComponent::indicator(outer).unwrap(),
        Probability::HALF,
    )
}

fn data(x: u64, n: u64) -> BinomialData {
    BinomialData::new(x, n).unwrap()
}

fn coin() -> Criterion {
    let mut c = Criterion::new("coin 60/100");
    let start = Instant::now();
    let d = data(60, 100);
    let r = evidence_report(&coin_space(), d).unwrap();
    c.near("bf10", r.bf10, 0.913, 0.001);
    c.near("Pr(M0|data)", r.prob_m0_post.get(), 0.523, 0.001);
    c.near("Pr(M1|data)", r.prob_m1_post.get(), 0.477, 0.001);
    let mp = bma_posterior(&coin_space(), d).unwrap();
    c.near("mixture mean", mp.mean(), 0.547, 0.001);
    let median = mp.median().unwrap();
    c.check(
        "median",
        median == 0.5,
        format!("{median} is not exactly 0.5"),
    );
    let ci = mp.credible_interval(0.95).unwrap();
    c.near("lower", ci.lower, 0.500, 0.001);
    c.near("upper", ci.upper, 0.676, 0.001);
    c.near("actual mass", ci.actual_mass, 0.9639, 0.0005);
    c.near("lower tail", ci.lower_tail, 0.011, 0.0005);
    c.near("upper tail", ci.upper_tail, 0.025, 0.0005);
    c.within("runtime", start.elapsed(), Duration::from_secs(1));
    c
}

fn m1_only() -> Criterion {
    let mut c = Criterion::new("M1-only posterior");
    let mp = bma_posterior(&coin_space(), data(60, 100)).unwrap();
    let m1 = MixturePosterior::only(mp.post1().clone());
    let ci = m1.credible_interval(0.95).unwrap();
    c.near("mean", m1.mean(), 0.598, 0.001);
    c.near("median", m1.median().unwrap(), 0.599, 0.001);
    c.near("lower", ci.lower, 0.502, 0.001);
    c.near("upper", ci.upper, 0.691, 0.001);
    let oracle = Beta::new(61.0, 41.0).unwrap();
    c.near(
        "median vs statrs",
        m1.median().unwrap(),
        oracle.inverse_cdf(0.5),
        1e-8,
    );
    c.near("upper vs statrs", ci.upper, oracle.inverse_cdf(0.975), 1e-8);
    c
}

fn single_flip() -> Criterion {
    let mut c = Criterion::new("single flip");
    let d = data(0, 1);
    let bf = bayes_factor(&coin_space(), d).unwrap();
    c.check("bf10", bf == 1.0, format!("{bf} is not exactly 1"));
    let mp = bma_posterior(&coin_space(), d).unwrap();
    let ci95 = mp.credible_interval(0.95).unwrap();
    c.near("95% lower", ci95.lower, 0.025, 0.001);
    c.near("95% upper", ci95.upper, 0.776, 0.001);
    let ci66 = mp.credible_interval(0.66).unwrap();
    c.near("66% lower", ci66.lower, 0.188, 0.001);
    c.near("66% upper", ci66.upper, 0.500, 0.001);
    c.near("Pr(θ<0.5)", mp.cdf_left(0.5), 0.375, 1e-6);
    c.near("Pr(θ>0.5)", mp.sf(0.5), 0.125, 1e-6);
    c
}

fn interval_null() -> Criterion {
    let mut c = Criterion::new("interval null");
    let d = data(60, 100);
    let space = interval_space();
    let r = evidence_report(&space, d).unwrap();
    c.near("Pr(data|null region)", r.m0, 0.016, 0.0005);
    c.near("Pr(data|outside)", r.m1, 0.009, 0.0005);
    c.near("bf", r.bf10, 0.584, 0.002);
    let (inner, outer) = Region::central_split(0.45, 0.55).unwrap();
    let ipmo = implied_prior_model_odds(&PriorComponent::uniform(), &inner, &outer).unwrap();
    c.near("implied prior model odds", ipmo, 9.0, 1e-12);
    c.near("ipmo × bf", ipmo * r.bf10, 5.255, 0.01);
    let b = Beta::new(61.0, 41.0).unwrap();
    let inside = b.cdf(0.55) - b.cdf(0.45);
    c.near(
        "ipmo × bf vs region odds",
        ipmo * r.bf10,
        (1.0 - inside) / inside,
        0.01,
    );
    c.near("region odds", (1.0 - inside) / inside, 0.840 / 0.160, 0.01);
    let mp = bma_posterior(&space, d).unwrap();
    c.near("w0", mp.w0().get(), 0.631, 0.002);
    c.near("w1", mp.w1().get(), 0.369, 0.002);
    c.near("mean", mp.mean(), 0.557, 0.002);
    c.near("median", mp.median().unwrap(), 0.543, 0.002);
    let ci = mp.credible_interval(0.95).unwrap();
    c.near("lower", ci.lower, 0.479, 0.002);
    c.near("upper", ci.upper, 0.673, 0.002);
    c
}

fn effect_size() -> Criterion {
    let mut c = Criterion::new("effect size");
    // the reported signs correspond to group 1 minus group 2
    let spec = EffectModelSpec {
        contrast: Contrast::FirstMinusSecond,
        ..EffectModelSpec::default()
    };
    let bmi = TwoSampleSummary::new(193, 26.0, 4.9, 23, 25.7, 4.4).unwrap();
    let e = effect_mixture_estimates_with(&bmi, &spec, 0.95, 4096).unwrap();
    c.rel("BMI bf10", e.log_bf10.exp(), 1.0 / 4.2, 0.05);
    c.near("BMI Pr(M0|data)", e.prob_m0_post.get(), 0.808, 0.005);
    let m1 = MixturePosterior::only(e.posterior.post1().clone());
    let ci1 = m1.credible_interval(0.95).unwrap();
    c.near("BMI M1 median", m1.median().unwrap(), 0.05, 0.01);
    c.near("BMI M1 lower", ci1.lower, -0.35, 0.01);
    c.near("BMI M1 upper", ci1.upper, 0.45, 0.01);
    c.near("BMI mixture median", e.median, 0.0, 0.005);
    c.near("BMI mixture mean", e.mean, 0.01, 0.005);
    c.near("BMI mixture lower", e.interval.lower, -0.18, 0.01);
    c.near("BMI mixture upper", e.interval.upper, 0.28, 0.01);

    let nas = TwoSampleSummary::new(193, 5.5, 4.2, 23, 15.4, 3.5).unwrap();
    let e = effect_mixture_estimates_with(&nas, &spec, 0.95, 4096).unwrap();
    c.near(
        "NAS log10 bf10",
        e.log_bf10 / std::f64::consts::LN_10,
        20.0,
        1.0,
    );
    let m1 = MixturePosterior::only(e.posterior.post1().clone());
    let ci1 = m1.credible_interval(0.95).unwrap();
    let m1_median = m1.median().unwrap();
    c.near("NAS |M1 median|", m1_median.abs(), 2.36, 0.02);
    c.near(
        "NAS inner endpoint",
        ci1.lower.abs().min(ci1.upper.abs()),
        1.87,
        0.02,
    );
    c.near(
        "NAS outer endpoint",
        ci1.lower.abs().max(ci1.upper.abs()),
        2.85,
        0.02,
    );
    c.near("NAS mixture median", e.median, m1_median, 0.005);
    c.near("NAS mixture mean", e.mean, m1.mean(), 0.005);
    c.near("NAS mixture lower", e.interval.lower, ci1.lower, 0.005);
    c.near("NAS mixture upper", e.interval.upper, ci1.upper, 0.005);
    c
}

fn product_space() -> Criterion {
    let mut c = Criterion::new("product-space sampler");
    let d = data(60, 100);
    let seed = Seed(20_231_017);
    let ps = product_space_sample(&coin_space(), d, 1_000_000, seed).unwrap();
    let est = estimates_from_draws(&ps, Probability::HALF);
    c.near("ω̂", est.omega_hat.get(), 0.477, 0.0015);
    c.near("recovered bf10", est.bf10_hat, 0.913, 0.01);
    let comp = composition_sample(&coin_space(), d, 1_000_000, seed).unwrap();
    let ks = ks_distance(&ps.thetas, &comp.thetas);
    c.check("KS distance", ks < 0.003, format!("{ks} ≥ 0.003"));
    c
}

const TABLE3_MEANS: [f64; 11] = [
    0.087, 0.198, 0.331, 0.427, 0.474, 0.500, 0.526, 0.573, 0.670, 0.801, 0.913,
];
const TABLE4_COVERAGE: [f64; 11] = [
    0.950, 0.9697, 0.9529, 0.950, 0.950, 0.950, 0.950, 0.950, 0.9529, 0.9697, 0.950,
];

fn calibration() -> (Criterion, CalibrationReport) {
    let mut c = Criterion::new("calibration");
    let cfg = CalibrationConfig {
        shards: 1,
        ..CalibrationConfig::default()
    };
    let start = Instant::now();
    let report = run_calibration(&cfg).unwrap();
    c.within(
        "single-threaded runtime",
        start.elapsed(),
        Duration::from_secs(240),
    );
    let start = Instant::now();
    let sharded = run_calibration(&CalibrationConfig {
        shards: 8,
        ..cfg.clone()
    })
    .unwrap();
    c.within("8-shard runtime", start.elapsed(), Duration::from_secs(60));
    c.check(
        "8 shards reproduce 1 shard",
        sharded.strata == report.strata,
        "strata differ".into(),
    );

    for (row, (&mean, &cov)) in report
        .strata
        .iter()
        .zip(TABLE3_MEANS.iter().zip(&TABLE4_COVERAGE))
    {
        c.near(
            &format!("mean θ, x={}", row.x),
            row.mean_true_theta.unwrap_or(f64::NAN),
            mean,
            0.005,
        );
        c.near(
            &format!("coverage, x={}", row.x),
            row.coverage_mix.unwrap_or(f64::NAN),
            cov,
            0.005,
        );
    }
    c.near(
        "M1 coverage, x=1",
        report.strata[1].coverage_m1.unwrap_or(f64::NAN),
        0.858,
        0.01,
    );

    // stratum counts against the analytic prior predictive, with statrs as the tail oracle
    let (stat, dof) = report.chi_square();
    let p = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat);
    c.check(
        "chi-square at 99.9%",
        p > 0.001,
        format!("statistic {stat} on {dof} df, p = {p}"),
    );
    let n = cfg.n_coins as f64;
    // Pr(X=4) = ½·Binomial(10, ½) + ½·1/11
    let p4 = 0.5 * Binomial::new(0.5, 10).unwrap().pmf(4) + 0.5 / 11.0;
    let row4 = &report.strata[4];
    c.rel("expected count x=4", row4.expected_count, n * p4, 1e-12);
    c.near(
        "expected count x=4 ≈ 148,000",
        row4.expected_count,
        148_000.0,
        500.0,
    );
    let se = (n * p4 * (1.0 - p4)).sqrt();
    c.near("observed count x=4", row4.count as f64, n * p4, 3.0 * se);
    (c, report)
}

/// Composite Simpson rule on [a, b] with `m` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn pmf(x: u64, n: u64, theta: f64) -> f64 {
    Binomial::new(theta, n).unwrap().pmf(x)
}

/// BMA posterior against the normalized mixture-prior posterior.
fn mixture_prior_agreement(c: &mut Criterion, label: &str, space: &TwoModelSpace, d: BinomialData) {
    let breaks = [0.0, 0.45, 0.55, 1.0];
    let continuous = |t: f64| space.mixture_density(t).0 * pmf(d.x, d.n, t);
    // the prior height is constant on each piece; use its interior value up to the edges
    let mut z: f64 = breaks
        .windows(2)
        .map(|w| {
            let height = space.mixture_density(0.5 * (w[0] + w[1])).0;
            simpson(|t| height * pmf(d.x, d.n, t), w[0], w[1], 20_000)
        })
        .sum();
    let atom_theta = space.prior0.atom().or(space.prior1.atom());
    let atom_weight = atom_theta.map_or(0.0, |t| space.mixture_density(t).1 * pmf(d.x, d.n, t));
    z += atom_weight;

    let mp = bma_posterior(space, d).unwrap();
    let grid = linspace(0.0, 1.0, 1001);
    let dd = mp.density_data(&grid).unwrap();
    let mut worst = 0.0_f64;
    for (&t, &got) in grid.iter().zip(&dd.densities) {
        let want = continuous(t) / z;
        if want == 0.0 && got == 0.0 {
            continue;
        }
        // interval-null densities jump at the region edges, where either side is a valid value
        let on_edge = breaks.iter().any(|&b| (t - b).abs() < 1e-12) && has_region_edges(space);
        if on_edge {
            continue;
        }
        worst = worst.max((got / want - 1.0).abs());
    }
    c.check(
        &format!("{label} density"),
        worst <= 1e-6,
        format!("worst relative error {worst:e}"),
    );
    let atom_mass = dd.atoms.iter().map(|a| a.mass).sum::<f64>();
    c.near(
        &format!("{label} atom mass"),
        atom_mass,
        atom_weight / z,
        1e-8,
    );
}

fn has_region_edges(space: &TwoModelSpace) -> bool {
    matches!(space.prior0, PriorComponent::ScaledIndicator { .. })
}

fn properties(calibrated: &CalibrationReport) -> Criterion {
    let mut c = Criterion::new("properties");
    mixture_prior_agreement(&mut c, "coin", &coin_space(), data(60, 100));
    mixture_prior_agreement(&mut c, "single flip", &coin_space(), data(0, 1));
    mixture_prior_agreement(&mut c, "interval null", &interval_space(), data(60, 100));

    // quantile and CDF are inverse to each other
    for (label, space, d) in [
        ("coin", coin_space(), data(60, 100)),
        ("interval null", interval_space(), data(60, 100)),
    ] {
        let mp = bma_posterior(&space, d).unwrap();
        let mut worst_q = 0.0_f64;
        let mut worst_t = 0.0_f64;
        for i in 1..1000 {
            let q = i as f64 / 1000.0;
            let t = mp.quantile(q).unwrap();
            worst_q = worst_q.max(q - mp.cdf(t));
        }
        for t in linspace(0.3, 0.8, 501) {
            let p = mp.cdf(t);
            if t == 0.5 && space.prior0.atom().is_some() || !(1e-6..=1.0 - 1e-6).contains(&p) {
                continue;
            }
            worst_t = worst_t.max((mp.quantile(p).unwrap() - t).abs());
        }
        c.check(
            &format!("{label} cdf(quantile(q)) ≥ q"),
            worst_q <= 1e-8,
            format!("shortfall {worst_q:e}"),
        );
        c.check(
            &format!("{label} quantile(cdf(θ)) = θ"),
            worst_t <= 1e-8,
            format!("error {worst_t:e}"),
        );
    }

    // closed form against quadrature for the point-null Bayes factor
    let spec = QuadratureSpec::new(1e-300, 1e-12, 500).unwrap();
    for n in [1_u64, 10, 100] {
        for x in 0..=n {
            let d = data(x, n);
            let library = bayes_factor(&coin_space(), d).unwrap();
            let m1 = integrate(|t| pmf(x, n, t), 0.0, 1.0, &spec).unwrap();
            let quadrature = m1 / pmf(x, n, 0.5);
            c.rel(&format!("bf10 n={n} x={x}"), library, quadrature, 1e-8);
        }
    }

    // shard invariance and seed determinism
    let small = CalibrationConfig {
        n_coins: 100_000,
        shards: 1,
        ..CalibrationConfig::default()
    };
    let one = run_calibration(&small).unwrap();
    for shards in [3, 8] {
        let other = run_calibration(&CalibrationConfig {
            shards,
            ..small.clone()
        })
        .unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        one.write_coin_table(&mut a).unwrap();
        one.write_means_table(&mut a).unwrap();
        one.write_coverage_table(&mut a).unwrap();
        other.write_coin_table(&mut b).unwrap();
        other.write_means_table(&mut b).unwrap();
        other.write_coverage_table(&mut b).unwrap();
        c.check(
            &format!("calibration tables, {shards} shards"),
            a == b,
            "bytes differ".into(),
        );
    }
    c.check(
        "calibration reports non-empty",
        !calibrated.strata.is_empty(),
        "no strata".into(),
    );
    let seed = Seed(99);
    for sampler in [composition_sample, product_space_sample] {
        let a = sampler(&coin_space(), data(60, 100), 200_000, seed).unwrap();
        let b = sampler(&coin_space(), data(60, 100), 200_000, seed).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ba).unwrap();
        b.write_csv(&mut bb).unwrap();
        c.check(
            "draws are seed-deterministic",
            ba == bb,
            "bytes differ".into(),
        );
    }
    c
}

fn main() {
    let (calibration, report) = calibration();
    let criteria = [
        coin(),
        m1_only(),
        single_flip(),
        interval_null(),
        effect_size(),
        product_space(),
        calibration,
        properties(&report),
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        if c.failures.is_empty() {
            println!("PASS {} {} ({} checks)", i + 1, c.name, c.checks);
        } else {
            failed += 1;
            println!(
                "FAIL {} {} ({} of {} checks failed)",
                i + 1,
                c.name,
                c.failures.len(),
                c.checks
            );
            for f in &c.failures {
                println!("       {f}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
