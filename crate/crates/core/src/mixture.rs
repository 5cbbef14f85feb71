//! The model-averaged posterior.
//!
//! Averaging the two model posteriors by their posterior model
//! probabilities gives exactly the posterior of the single mixture prior
//! `Pr(M0)·π0 + Pr(M1)·π1`; [`bma_posterior`] builds it from conjugate
//! updates. When one model is a point null the result is a spike-and-slab
//! distribution: an atom at θ0 plus a continuous part. Its quantile
//! function inverts the mixture CDF exactly, returning θ0 for every level
//! that falls inside the jump, so equal-tailed intervals whose endpoint
//! lands on the atom hold more than their nominal mass. [`IntervalReport`]
//! says how much.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::evidence::{evidence_report, BinomialData};
use crate::numeric::{beta_cdf, beta_ln_pdf, beta_quantile, beta_sf, Probability};
use crate::priors::{Interval, PriorComponent, Region, TwoModelSpace};

/// Posterior for θ under one model.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentPosterior {
    PointMass {
        theta0: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Beta density restricted to `region` and renormalized.
    TruncatedBeta(TruncatedBeta),
    /// Piecewise-linear density on a sorted grid.
    Grid(GridPosterior),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedBeta {
    alpha: f64,
    beta: f64,
    region: Region,
    // (lower CDF, lower survival, mass) per interval
    pieces: Vec<(f64, f64, f64)>,
    mass: f64,
}

impl TruncatedBeta {
    pub fn new(alpha: f64, beta: f64, region: Region) -> Result<Self> {
        let clipped: Vec<Interval> = region
            .intervals()
            .iter()
            .filter_map(|iv| {
                let lo = iv.lo.max(0.0);
                let hi = iv.hi.min(1.0);
                (lo <= hi).then_some(Interval { lo, hi, ..*iv })
            })
            .collect();
        let region = Region::new(clipped)?;
        let mut pieces = Vec::with_capacity(region.intervals().len());
        for iv in region.intervals() {
            let lo_cdf = beta_cdf(iv.lo, alpha, beta)?;
            let lo_sf = beta_sf(iv.lo, alpha, beta)?;
            let mass = if lo_cdf > 0.5 {
                lo_sf - beta_sf(iv.hi, alpha, beta)?
            } else {
                beta_cdf(iv.hi, alpha, beta)? - lo_cdf
            };
            pieces.push((lo_cdf, lo_sf, mass.max(0.0)));
        }
        let mass: f64 = pieces.iter().map(|p| p.2).sum();
        if !(mass > 0.0) {
            return Err(domain("truncation region carries no posterior mass"));
        }
        Ok(TruncatedBeta {
            alpha,
            beta,
            region,
            pieces,
            mass,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Unnormalized mass of the region under the untruncated Beta.
    pub fn normalizer(&self) -> f64 {
        self.mass
    }

    fn cdf(&self, theta: f64) -> f64 {
        let mut acc = 0.0;
        for (iv, &(lo_cdf, lo_sf, mass)) in self.region.intervals().iter().zip(&self.pieces) {
            if theta >= iv.hi {
                acc += mass;
            } else if theta > iv.lo {
                let part = if lo_cdf > 0.5 {
                    lo_sf - beta_sf(theta, self.alpha, self.beta).unwrap_or(lo_sf)
                } else {
                    beta_cdf(theta, self.alpha, self.beta).unwrap_or(lo_cdf) - lo_cdf
                };
                acc += part.max(0.0);
                break;
            } else {
                break;
            }
        }
        (acc / self.mass).min(1.0)
    }

    fn quantile(&self, q: f64) -> f64 {
        let mut target = q * self.mass;
        let n = self.pieces.len();
        for (i, (iv, &(lo_cdf, lo_sf, mass))) in
            self.region.intervals().iter().zip(&self.pieces).enumerate()
        {
            if target > mass && i + 1 < n {
                target -= mass;
                continue;
            }
            let target = target.min(mass);
            let x = if lo_cdf > 0.5 {
                // work with the upper tail: sf(x) = sf(lo) − target
                let s = (lo_sf - target).clamp(0.0, 1.0);
                1.0 - beta_quantile(s, self.beta, self.alpha).unwrap_or(0.0)
            } else {
                beta_quantile((lo_cdf + target).clamp(0.0, 1.0), self.alpha, self.beta)
                    .unwrap_or(0.0)
            };
            return x.clamp(iv.lo, iv.hi);
        }
        self.region.upper()
    }

    fn mean(&self) -> f64 {
        // ∫_R t f_{a,b}(t) dt = a/(a+b) · Pr_{Beta(a+1,b)}(R)
        let shifted = PriorComponent::Beta {
            alpha: self.alpha + 1.0,
            beta: self.beta,
        };
        let m = shifted.region_mass(&self.region).unwrap_or(f64::NAN);
        self.alpha / (self.alpha + self.beta) * m / self.mass
    }

    fn density(&self, theta: f64) -> f64 {
        if !self.region.contains(theta) {
            return 0.0;
        }
        beta_ln_pdf(theta, self.alpha, self.beta).map_or(0.0, |l| l.exp() / self.mass)
    }
}

/// A density tabulated on a grid and linearly interpolated between points.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    thetas: Vec<f64>,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GridPosterior {
    /// Normalizes `weights` (an unnormalized density at `thetas`).
    pub fn new(thetas: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if thetas.len() < 2 || thetas.len() != weights.len() {
            return Err(domain(
                "grid needs at least two points and one weight per point",
            ));
        }
        if thetas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain("grid points must be strictly increasing"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(domain("grid weights must be finite and nonnegative"));
        }
        let mut cumulative = Vec::with_capacity(thetas.len());
        cumulative.push(0.0);
        for i in 1..thetas.len() {
            let h = thetas[i] - thetas[i - 1];
            cumulative.push(cumulative[i - 1] + 0.5 * h * (weights[i - 1] + weights[i]));
        }
        let total = cumulative[cumulative.len() - 1];
        if !(total > 0.0) {
            return Err(domain("grid weights integrate to zero"));
        }
        let density = weights.iter().map(|w| w / total).collect();
        cumulative.iter_mut().for_each(|c| *c /= total);
        Ok(GridPosterior {
            thetas,
            density,
            cumulative,
        })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    fn cell(&self, theta: f64) -> usize {
        self.thetas
            .partition_point(|&t| t <= theta)
            .saturating_sub(1)
            .min(self.thetas.len() - 2)
    }

    fn cdf(&self, theta: f64) -> f64 {
        let n = self.thetas.len();
        if theta <= self.thetas[0] {
            return 0.0;
        }
        if theta >= self.thetas[n - 1] {
            return 1.0;
        }
        let i = self.cell(theta);
        let h = self.thetas[i + 1] - self.thetas[i];
        let s = theta - self.thetas[i];
        let (f0, f1) = (self.density[i], self.density[i + 1]);
        (self.cumulative[i] + f0 * s + (f1 - f0) * s * s / (2.0 * h)).min(1.0)
    }

    fn quantile(&self, q: f64) -> f64 {
        let n = self.thetas.len();
        if q <= 0.0 {
            return self.thetas[0];
        }
        if q >= 1.0 {
            return self.thetas[n - 1];
        }
        let i = self.cumulative.partition_point(|&c| c < q).clamp(1, n - 1) - 1;
        let h = self.thetas[i + 1] - self.thetas[i];
        let r = q - self.cumulative[i];
        let (f0, f1) = (self.density[i], self.density[i + 1]);
        // (f1−f0)/(2h)·s² + f0·s = r, solved in the cancellation-free form
        let disc = (f0 * f0 + 2.0 * (f1 - f0) * r / h).max(0.0);
        let denom = f0 + disc.sqrt();
        let s = if denom > 0.0 { 2.0 * r / denom } else { h };
        self.thetas[i] + s.clamp(0.0, h)
    }

    pub fn mean(&self) -> f64 {
        self.thetas
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(t, f)| {
                let h = t[1] - t[0];
                h / 6.0 * (t[0] * (2.0 * f[0] + f[1]) + t[1] * (f[0] + 2.0 * f[1]))
            })
            .sum()
    }

    fn density_at(&self, theta: f64) -> f64 {
        let n = self.thetas.len();
        if theta < self.thetas[0] || theta > self.thetas[n - 1] {
            return 0.0;
        }
        let i = self.cell(theta);
        let h = self.thetas[i + 1] - self.thetas[i];
        let s = (theta - self.thetas[i]) / h;
        self.density[i] * (1.0 - s) + self.density[i + 1] * s
    }
}

impl ComponentPosterior {
    /// Conjugate update of `prior` with binomial data.
    pub fn conjugate(prior: &PriorComponent, data: BinomialData) -> Result<Self> {
        let (x, failures) = (data.x as f64, (data.n - data.x) as f64);
        match prior {
            PriorComponent::PointMass { theta0 } => {
                Ok(ComponentPosterior::PointMass { theta0: *theta0 })
            }
            PriorComponent::Beta { alpha, beta } => Ok(ComponentPosterior::Beta {
                alpha: alpha + x,
                beta: beta + failures,
            }),
            PriorComponent::ScaledIndicator { region, .. } => {
                Ok(ComponentPosterior::TruncatedBeta(TruncatedBeta::new(
                    x + 1.0,
                    failures + 1.0,
                    region.clone(),
                )?))
            }
            PriorComponent::Cauchy { .. } => Err(Error::UnsupportedModel(
                "no conjugate binomial update for a Cauchy prior".into(),
            )),
        }
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        PriorComponent::beta(alpha, beta)?;
        Ok(ComponentPosterior::Beta { alpha, beta })
    }

    pub fn atom(&self) -> Option<f64> {
        match *self {
            ComponentPosterior::PointMass { theta0 } => Some(theta0),
            _ => None,
        }
    }

    /// `Pr(θ' ≤ θ)`.
    pub fn cdf(&self, theta: f64) -> f64 {
        match self {
            ComponentPosterior::PointMass { theta0 } => {
                if theta >= *theta0 {
                    1.0
                } else {
                    0.0
                }
            }
            ComponentPosterior::Beta { alpha, beta } => {
                beta_cdf(theta, *alpha, *beta).unwrap_or(f64::NAN)
            }
            ComponentPosterior::TruncatedBeta(t) => t.cdf(theta),
            ComponentPosterior::Grid(g) => g.cdf(theta),
        }
    }

    /// `Pr(θ' < θ)`.
    pub fn cdf_left(&self, theta: f64) -> f64 {
        match self {
            ComponentPosterior::PointMass { theta0 } => {
                if theta > *theta0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(theta),
        }
    }

    /// `Pr(θ' > θ)`.
    pub fn sf(&self, theta: f64) -> f64 {
        match self {
            ComponentPosterior::Beta { alpha, beta } => {
                beta_sf(theta, *alpha, *beta).unwrap_or(f64::NAN)
            }
            _ => 1.0 - self.cdf(theta),
        }
    }

    /// Continuous density; zero for a point mass.
    pub fn density(&self, theta: f64) -> f64 {
        match self {
            ComponentPosterior::PointMass { .. } => 0.0,
            ComponentPosterior::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&theta) {
                    return 0.0;
                }
                beta_ln_pdf(theta, *alpha, *beta).map_or(0.0, f64::exp)
            }
            ComponentPosterior::TruncatedBeta(t) => t.density(theta),
            ComponentPosterior::Grid(g) => g.density_at(theta),
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        match self {
            ComponentPosterior::PointMass { theta0 } => *theta0,
            ComponentPosterior::Beta { alpha, beta } => {
                beta_quantile(q.clamp(0.0, 1.0), *alpha, *beta).unwrap_or(f64::NAN)
            }
            ComponentPosterior::TruncatedBeta(t) => t.quantile(q.clamp(0.0, 1.0)),
            ComponentPosterior::Grid(g) => g.quantile(q),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ComponentPosterior::PointMass { theta0 } => *theta0,
            ComponentPosterior::Beta { alpha, beta } => alpha / (alpha + beta),
            ComponentPosterior::TruncatedBeta(t) => t.mean(),
            ComponentPosterior::Grid(g) => g.mean(),
        }
    }

    /// Smallest and largest value with support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ComponentPosterior::PointMass { theta0 } => (*theta0, *theta0),
            ComponentPosterior::Beta { .. } => (0.0, 1.0),
            ComponentPosterior::TruncatedBeta(t) => (t.region.lower(), t.region.upper()),
            ComponentPosterior::Grid(g) => (g.thetas[0], g.thetas[g.thetas.len() - 1]),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            ComponentPosterior::PointMass { theta0 } => Ok(*theta0),
            ComponentPosterior::Beta { alpha, beta } => {
                let dist = BetaDist::new(*alpha, *beta).map_err(|e| domain(e.to_string()))?;
                Ok(dist.sample(rng))
            }
            _ => Ok(self.quantile(rng.random::<f64>())),
        }
    }
}

/// Equal-tailed credible interval with the mass it actually contains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalReport {
    pub lower: f64,
    pub upper: f64,
    pub nominal_level: f64,
    pub actual_mass: f64,
    /// `Pr(θ < lower)`.
    pub lower_tail: f64,
    /// `Pr(θ > upper)`.
    pub upper_tail: f64,
    /// Holds more than the nominal level because an endpoint sits on an atom.
    pub conservative: bool,
}

impl IntervalReport {
    /// Closed-interval membership.
    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }
}

/// `w0·post0 + w1·post1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePosterior {
    w0: Probability,
    post0: ComponentPosterior,
    post1: ComponentPosterior,
}

impl MixturePosterior {
    pub fn new(w0: Probability, post0: ComponentPosterior, post1: ComponentPosterior) -> Self {
        MixturePosterior { w0, post0, post1 }
    }

    /// A single-model posterior viewed as a mixture with all weight on it.
    pub fn only(post: ComponentPosterior) -> Self {
        MixturePosterior {
            w0: Probability::ZERO,
            post0: post.clone(),
            post1: post,
        }
    }

    pub fn w0(&self) -> Probability {
        self.w0
    }

    pub fn w1(&self) -> Probability {
        self.w0.complement()
    }

    pub fn post0(&self) -> &ComponentPosterior {
        &self.post0
    }

    pub fn post1(&self) -> &ComponentPosterior {
        &self.post1
    }

    fn weighted(&self) -> [(f64, &ComponentPosterior); 2] {
        [(self.w0.get(), &self.post0), (self.w1().get(), &self.post1)]
    }

    fn live(&self) -> impl Iterator<Item = (f64, &ComponentPosterior)> {
        self.weighted().into_iter().filter(|(w, _)| *w > 0.0)
    }

    /// Right-continuous CDF `Pr(θ' ≤ θ)`.
    pub fn cdf(&self, theta: f64) -> f64 {
        self.live()
            .map(|(w, c)| w * c.cdf(theta))
            .sum::<f64>()
            .min(1.0)
    }

    /// Left limit `Pr(θ' < θ)`.
    pub fn cdf_left(&self, theta: f64) -> f64 {
        self.live()
            .map(|(w, c)| w * c.cdf_left(theta))
            .sum::<f64>()
            .min(1.0)
    }

    /// `Pr(θ' > θ)`.
    pub fn sf(&self, theta: f64) -> f64 {
        self.live()
            .map(|(w, c)| w * c.sf(theta))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.live().map(|(w, c)| w * c.mean()).sum()
    }

    pub fn median(&self) -> Result<f64> {
        self.quantile(0.5)
    }

    /// Exact inverse of the mixture CDF: the smallest θ with `F(θ) ≥ q`.
    ///
    /// With one atom at θ0 this is the three-branch rule: the continuous
    /// component's quantile at `q / w_c` below the jump, `θ0` for any `q`
    /// in `[F(θ0⁻), F(θ0)]`, and the quantile at `1 − (1 − q)/w_c` above.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(domain(format!("quantile level {q} must lie in (0, 1)")));
        }
        let live: Vec<(f64, &ComponentPosterior)> = self.live().collect();
        let atoms: Vec<(f64, f64)> = live
            .iter()
            .filter_map(|(w, c)| c.atom().map(|a| (a, *w)))
            .collect();
        let continuous: Vec<(f64, &ComponentPosterior)> = live
            .iter()
            .copied()
            .filter(|(_, c)| c.atom().is_none())
            .collect();

        match (atoms.as_slice(), continuous.as_slice()) {
            ([], [(_, c)]) => Ok(c.quantile(q)),
            ([(theta0, _)], []) => Ok(*theta0),
            ([(theta0, w_atom)], [(w_c, c)]) => {
                let below = w_c * c.cdf(*theta0);
                if q < below {
                    Ok(c.quantile(q / w_c))
                } else if q > below + w_atom {
                    Ok(c.quantile(1.0 - (1.0 - q) / w_c))
                } else {
                    Ok(*theta0)
                }
            }
            ([], [_, _]) => Ok(self.bisect_quantile(q)),
            (_, []) => {
                let mut sorted = atoms.clone();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = 0.0;
                for (theta, w) in &sorted {
                    acc += w;
                    if acc >= q {
                        return Ok(*theta);
                    }
                }
                Ok(sorted[sorted.len() - 1].0)
            }
            _ => Err(Error::UnsupportedModel(
                "mixtures with more than one atom".into(),
            )),
        }
    }

    fn bisect_quantile(&self, q: f64) -> f64 {
        let (mut lo, mut hi) = self
            .live()
            .map(|(_, c)| c.support())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (a, b)| {
                (l.min(a), h.max(b))
            });
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `[Q((1−level)/2), Q((1+level)/2)]` with its exact tail masses.
    pub fn credible_interval(&self, level: f64) -> Result<IntervalReport> {
        if !(level > 0.0 && level < 1.0) {
            return Err(domain(format!("credible level {level} must lie in (0, 1)")));
        }
        let lower = self.quantile(0.5 * (1.0 - level))?;
        let upper = self.quantile(0.5 * (1.0 + level))?;
        let lower_tail = self.cdf_left(lower);
        let upper_tail = self.sf(upper);
        let actual_mass = 1.0 - lower_tail - upper_tail;
        Ok(IntervalReport {
            lower,
            upper,
            nominal_level: level,
            actual_mass,
            lower_tail,
            upper_tail,
            conservative: actual_mass > level + 1e-9,
        })
    }

    /// Continuous density on `grid` plus the atoms, for plotting.
    pub fn density_data(&self, grid: &[f64]) -> Result<DensityData> {
        if grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(domain("density grid must be sorted"));
        }
        let continuous: Vec<(f64, &ComponentPosterior)> =
            self.live().filter(|(_, c)| c.atom().is_none()).collect();
        let densities = grid
            .iter()
            .map(|&t| continuous.iter().map(|(w, c)| w * c.density(t)).sum())
            .collect();
        let atoms = self
            .live()
            .filter_map(|(w, c)| {
                c.atom().map(|a| Atom {
                    location: a,
                    mass: w,
                })
            })
            .collect();
        Ok(DensityData {
            thetas: grid.to_vec(),
            densities,
            atoms,
        })
    }
}

/// Model-averaged posterior for binomial data.
pub fn bma_posterior(space: &TwoModelSpace, data: BinomialData) -> Result<MixturePosterior> {
    let report = evidence_report(space, data)?;
    Ok(MixturePosterior::new(
        report.prob_m0_post,
        ComponentPosterior::conjugate(&space.prior0, data)?,
        ComponentPosterior::conjugate(&space.prior1, data)?,
    ))
}

pub fn posterior_mean(mp: &MixturePosterior) -> f64 {
    mp.mean()
}

pub fn quantile(mp: &MixturePosterior, q: f64) -> Result<f64> {
    mp.quantile(q)
}

pub fn credible_interval(mp: &MixturePosterior, level: f64) -> Result<IntervalReport> {
    mp.credible_interval(level)
}

pub fn cdf(mp: &MixturePosterior, theta: f64) -> f64 {
    mp.cdf(theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Figure-panel data: density values on a grid with atoms kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityData {
    pub thetas: Vec<f64>,
    pub densities: Vec<f64>,
    pub atoms: Vec<Atom>,
}

impl DensityData {
    /// `theta,density` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "density"])?;
        for (t, d) in self.thetas.iter().zip(&self.densities) {
            w.write_record([t.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and the `<stem>.atoms.json` sidecar.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv_file = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(csv_file))?;
        let json = serde_json::to_string_pretty(&serde_json::json!({ "atoms": self.atoms }))?;
        std::fs::write(dir.join(format!("{stem}.atoms.json")), json + "\n")?;
        Ok(())
    }
}

/// Evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin(x: u64, n: u64) -> MixturePosterior {
        let space = TwoModelSpace::point_null_uniform(0.5, Probability::HALF).unwrap();
        bma_posterior(&space, BinomialData::new(x, n).unwrap()).unwrap()
    }

    fn interval_null() -> MixturePosterior {
        let (t0, t1) = Region::central_split(0.45, 0.55).unwrap();
        let space = TwoModelSpace::new(
            PriorComponent::indicator(t0).unwrap(),
            PriorComponent::indicator(t1).unwrap(),
            Probability::HALF,
        );
        bma_posterior(&space, BinomialData::new(60, 100).unwrap()).unwrap()
    }

    #[test]
    fn coin_weights_and_components() {
        let mp = coin(60, 100);
        assert!((mp.w0().get() - 0.523).abs() < 5e-4);
        assert!((mp.w1().get() - 0.477).abs() < 5e-4);
        assert_eq!(mp.post0().atom(), Some(0.5));
        assert_eq!(
            *mp.post1(),
            ComponentPosterior::Beta {
                alpha: 61.0,
                beta: 41.0
            }
        );
    }

    #[test]
    fn coin_summaries() {
        let mp = coin(60, 100);
        assert!((mp.mean() - 0.547).abs() < 5e-4);
        assert_eq!(mp.median().unwrap(), 0.5);
        let ci = mp.credible_interval(0.95).unwrap();
        assert_eq!(ci.lower, 0.5);
        // 1 − 0.025/w1 = 0.94762 under Beta(61, 41)
        assert!((ci.upper - 0.675409).abs() < 1e-6);
        assert!((ci.actual_mass - 0.964012).abs() < 1e-6);
        assert!((ci.lower_tail - 0.010988).abs() < 1e-6);
        assert!((ci.upper_tail - 0.025).abs() < 1e-12);
        assert!(ci.conservative);
        assert!((mp.cdf_left(0.5) - 0.011).abs() < 5e-4);
    }

    #[test]
    fn single_flip() {
        let mp = coin(0, 1);
        assert_eq!(mp.w0(), Probability::HALF);
        assert!((mp.quantile(0.025).unwrap() - 0.025).abs() < 5e-4);
        assert!((mp.quantile(0.975).unwrap() - 0.776).abs() < 5e-4);
        assert!((mp.quantile(0.17).unwrap() - (1.0 - 0.66f64.sqrt())).abs() < 1e-12);
        assert_eq!(mp.quantile(0.83).unwrap(), 0.5);
        assert!((mp.cdf_left(0.5) - 0.375).abs() < 1e-12);
        assert!((mp.sf(0.5) - 0.125).abs() < 1e-12);
        assert_eq!(mp.cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn atom_boundary_returns_atom() {
        let mp = coin(0, 1);
        let below = mp.cdf_left(0.5);
        let top = mp.cdf(0.5);
        assert_eq!(mp.quantile(below).unwrap(), 0.5);
        assert_eq!(mp.quantile(top).unwrap(), 0.5);
    }

    #[test]
    fn ten_flip_examples() {
        let mp = coin(4, 10);
        assert!((mp.mean() - 0.474).abs() < 5e-4);
        let ci = mp.credible_interval(0.95).unwrap();
        assert!((ci.lower - 0.227).abs() < 5e-4 && (ci.upper - 0.616).abs() < 5e-4);
        assert!(!ci.conservative);
        let ci = coin(8, 10).credible_interval(0.95).unwrap();
        assert_eq!(ci.lower, 0.5);
        assert!((ci.upper - 0.930).abs() < 5e-4);
        assert!((ci.actual_mass - 0.9529).abs() < 5e-5);
        assert!((coin(5, 10).mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn m1_only_posterior() {
        let mp = MixturePosterior::only(ComponentPosterior::beta(61.0, 41.0).unwrap());
        let ci = mp.credible_interval(0.95).unwrap();
        assert!((ci.lower - 0.502).abs() < 5e-4 && (ci.upper - 0.691).abs() < 5e-4);
        assert!((ci.actual_mass - 0.95).abs() < 1e-12);
        assert!(!ci.conservative);
        assert!((mp.mean() - 0.598).abs() < 5e-4);
        assert!((mp.median().unwrap() - 0.599).abs() < 5e-4);
    }

    #[test]
    fn degenerate_weights() {
        let mp = MixturePosterior::new(
            Probability::ONE,
            ComponentPosterior::PointMass { theta0: 0.3 },
            ComponentPosterior::beta(2.0, 2.0).unwrap(),
        );
        assert_eq!(mp.mean(), 0.3);
        assert_eq!(mp.quantile(0.01).unwrap(), 0.3);
        assert_eq!(mp.quantile(0.99).unwrap(), 0.3);
        let d = mp.density_data(&[0.1, 0.5]).unwrap();
        assert_eq!(d.densities, vec![0.0, 0.0]);
        let mp = MixturePosterior::new(
            Probability::ZERO,
            ComponentPosterior::PointMass { theta0: 0.3 },
            ComponentPosterior::beta(2.0, 2.0).unwrap(),
        );
        assert!(mp.density_data(&[0.5]).unwrap().atoms.is_empty());
    }

    #[test]
    fn interval_null_summaries() {
        let mp = interval_null();
        assert!((mp.w0().get() - 0.631).abs() < 1e-3);
        assert!((mp.mean() - 0.557).abs() < 1e-3);
        assert!((mp.median().unwrap() - 0.543).abs() < 1e-3);
        let ci = mp.credible_interval(0.95).unwrap();
        assert!((ci.lower - 0.479).abs() < 2e-3 && (ci.upper - 0.673).abs() < 2e-3);
        assert!((ci.actual_mass - 0.95).abs() < 1e-9);
    }

    #[test]
    fn quantile_rejects_bad_levels() {
        let mp = coin(60, 100);
        assert!(mp.quantile(0.0).is_err());
        assert!(mp.quantile(1.0).is_err());
        assert!(mp.credible_interval(1.0).is_err());
    }

    #[test]
    fn quantile_cdf_roundtrip() {
        for mp in [coin(60, 100), coin(0, 1), coin(8, 10), interval_null()] {
            for i in 1..1000 {
                let q = i as f64 / 1000.0;
                let theta = mp.quantile(q).unwrap();
                assert!(mp.cdf(theta) >= q - 1e-12, "q={q}");
                if mp.post0().atom() != Some(theta) {
                    assert!(
                        (mp.cdf(theta) - q).abs() < 1e-9,
                        "q={q} F={}",
                        mp.cdf(theta)
                    );
                }
            }
            for i in 1..200 {
                let theta = i as f64 / 200.0;
                // far in a tail dθ = dq/f(θ) exceeds the tolerance at any f64 precision
                let f = mp.cdf(theta);
                if mp.post0().atom() == Some(theta) || !(1e-6..=1.0 - 1e-6).contains(&f) {
                    continue;
                }
                let back = mp.quantile(mp.cdf(theta)).unwrap();
                assert!((back - theta).abs() < 1e-8, "theta={theta} back={back}");
            }
        }
    }

    #[test]
    fn truncated_beta_normalizes_and_inverts() {
        let (_, t1) = Region::central_split(0.45, 0.55).unwrap();
        let tb = TruncatedBeta::new(61.0, 41.0, t1).unwrap();
        assert!((tb.cdf(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(tb.cdf(0.5), tb.cdf(0.45));
        for &q in &[1e-6, 0.01, 0.2, 0.5, 0.9, 0.999] {
            let x = tb.quantile(q);
            assert!((tb.cdf(x) - q).abs() < 1e-10);
            assert!(!(0.45 < x && x < 0.55));
        }
    }

    #[test]
    fn grid_posterior_is_exact_for_linear_density() {
        // density 2t on [0, 1]: CDF t², quantile √q, mean 2/3
        let thetas = linspace(0.0, 1.0, 11);
        let w: Vec<f64> = thetas.iter().map(|t| 2.0 * t).collect();
        let g = GridPosterior::new(thetas, w).unwrap();
        for &q in &[0.01, 0.25, 0.5, 0.9] {
            assert!((g.quantile(q) - q.sqrt()).abs() < 1e-14);
            assert!((g.cdf(q) - q * q).abs() < 1e-14);
        }
        assert!((g.mean() - 2.0 / 3.0).abs() < 1e-14);
        assert!(GridPosterior::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(GridPosterior::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn density_data_layout() {
        let d = coin(60, 100)
            .density_data(&linspace(0.0, 1.0, 101))
            .unwrap();
        assert_eq!(d.atoms.len(), 1);
        assert_eq!(d.atoms[0].location, 0.5);
        assert!((d.atoms[0].mass - 0.523).abs() < 5e-4);
        let beta = ComponentPosterior::beta(61.0, 41.0).unwrap();
        let w1 = 1.0 - d.atoms[0].mass;
        assert!((d.densities[60] - w1 * beta.density(0.6)).abs() < 1e-12);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta,density\n0,0\n"));
        assert_eq!(text.lines().count(), 102);
    }
}
