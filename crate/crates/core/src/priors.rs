//! Prior components for θ, regions of the parameter space, and the
//! two-model space.
//!
//! Point masses are carried symbolically as atoms. Interval endpoints keep
//! their open/closed flags for membership tests but are measure-zero for
//! every mass computation.

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric::{beta_cdf, beta_ln_pdf, cauchy_cdf, cauchy_ln_pdf, Probability};

/// One interval of a [`Region`]. Endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "closed")]
    pub lo_closed: bool,
    #[serde(default = "closed")]
    pub hi_closed: bool,
}

fn closed() -> bool {
    true
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        let above = if self.lo_closed {
            theta >= self.lo
        } else {
            theta > self.lo
        };
        let below = if self.hi_closed {
            theta <= self.hi
        } else {
            theta < self.hi
        };
        above && below
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }
}

/// A sorted union of pairwise disjoint intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct Region {
    intervals: Vec<Interval>,
}

impl Region {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(domain("a region needs at least one interval"));
        }
        for iv in &intervals {
            if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo > iv.hi {
                return Err(domain(format!("malformed interval [{}, {}]", iv.lo, iv.hi)));
            }
        }
        for pair in intervals.windows(2) {
            let (l, r) = (pair[0], pair[1]);
            let touching_closed = l.hi == r.lo && l.hi_closed && r.lo_closed;
            if l.hi > r.lo || touching_closed {
                return Err(domain(format!(
                    "intervals must be sorted and disjoint: [{}, {}] then [{}, {}]",
                    l.lo, l.hi, r.lo, r.hi
                )));
            }
        }
        Ok(Region { intervals })
    }

    pub fn interval(iv: Interval) -> Self {
        Region {
            intervals: vec![iv],
        }
    }

    /// `[0, 1]`.
    pub fn unit() -> Self {
        Region::interval(Interval::closed(0.0, 1.0))
    }

    pub fn real_line() -> Self {
        Region::interval(Interval::open(f64::NEG_INFINITY, f64::INFINITY))
    }

    /// `[low, high]` together with its complement `(0, low) ∪ (high, 1)`,
    /// the usual "negligible margin" split of the unit interval.
    pub fn central_split(low: f64, high: f64) -> Result<(Region, Region)> {
        if !(0.0 < low && low < high && high < 1.0) {
            return Err(domain(format!(
                "need 0 < low < high < 1, got {low}, {high}"
            )));
        }
        let inner = Region::interval(Interval::closed(low, high));
        let outer = Region::new(vec![Interval::open(0.0, low), Interval::open(high, 1.0)])?;
        Ok((inner, outer))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(theta))
    }

    /// Total length; infinite for unbounded regions.
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    /// Lebesgue measure of the intersection with `other`.
    pub fn overlap(&self, other: &Region) -> f64 {
        self.intervals
            .iter()
            .flat_map(|a| other.intervals.iter().map(move |b| a.overlap(b)))
            .sum()
    }

    /// Mass assigned by a continuous CDF.
    pub fn mass_under<F: Fn(f64) -> Result<f64>>(&self, cdf: F) -> Result<f64> {
        self.intervals.iter().try_fold(
            0.0,
            |acc, iv| Ok(acc + (cdf(iv.hi)? - cdf(iv.lo)?).max(0.0)),
        )
    }

    pub fn lower(&self) -> f64 {
        self.intervals[0].lo
    }

    pub fn upper(&self) -> f64 {
        self.intervals[self.intervals.len() - 1].hi
    }
}

impl TryFrom<Vec<Interval>> for Region {
    type Error = crate::Error;

    fn try_from(v: Vec<Interval>) -> Result<Self> {
        Region::new(v)
    }
}

impl From<Region> for Vec<Interval> {
    fn from(r: Region) -> Self {
        r.intervals
    }
}

/// A prior for θ under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "PriorRecord")]
pub enum PriorComponent {
    /// All mass on `theta0`.
    #[serde(rename = "point")]
    PointMass {
        theta0: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Constant density `height` on `region`, with `height · length = 1`.
    #[serde(rename = "indicator")]
    ScaledIndicator {
        region: Region,
        height: f64,
    },
    Cauchy {
        location: f64,
        scale: f64,
    },
}

/// Serialized form; `height` may be omitted for indicators.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum PriorRecord {
    Point { theta0: f64 },
    Beta { alpha: f64, beta: f64 },
    Indicator { region: Region, height: Option<f64> },
    Cauchy { location: f64, scale: f64 },
}

impl TryFrom<PriorRecord> for PriorComponent {
    type Error = crate::Error;

    fn try_from(r: PriorRecord) -> Result<Self> {
        match r {
            PriorRecord::Point { theta0 } => PriorComponent::point(theta0),
            PriorRecord::Beta { alpha, beta } => PriorComponent::beta(alpha, beta),
            PriorRecord::Indicator {
                region,
                height: None,
            } => PriorComponent::indicator(region),
            PriorRecord::Indicator {
                region,
                height: Some(h),
            } => PriorComponent::indicator_with_height(region, h),
            PriorRecord::Cauchy { location, scale } => PriorComponent::cauchy(location, scale),
        }
    }
}

const HEIGHT_TOL: f64 = 1e-12;

impl PriorComponent {
    pub fn point(theta0: f64) -> Result<Self> {
        if !theta0.is_finite() {
            return Err(domain(format!(
                "point mass location {theta0} is not finite"
            )));
        }
        Ok(PriorComponent::PointMass { theta0 })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(domain(format!(
                "Beta({alpha}, {beta}) needs positive finite shapes"
            )));
        }
        Ok(PriorComponent::Beta { alpha, beta })
    }

    /// Beta(1, 1).
    pub fn uniform() -> Self {
        PriorComponent::Beta {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    /// Uniform density over a bounded region.
    pub fn indicator(region: Region) -> Result<Self> {
        let len = region.length();
        if !(len.is_finite() && len > 0.0) {
            return Err(domain(
                "indicator prior needs a bounded region of positive length",
            ));
        }
        Ok(PriorComponent::ScaledIndicator {
            region,
            height: 1.0 / len,
        })
    }

    /// As [`PriorComponent::indicator`] but with an explicit height, which
    /// must normalize the region.
    pub fn indicator_with_height(region: Region, height: f64) -> Result<Self> {
        let len = region.length();
        if !(len.is_finite() && len > 0.0) || (height * len - 1.0).abs() > HEIGHT_TOL {
            return Err(domain(format!(
                "indicator height {height} does not normalize a region of length {len}"
            )));
        }
        Ok(PriorComponent::ScaledIndicator { region, height })
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        if !(location.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(domain(format!(
                "Cauchy({location}, {scale}) needs a positive finite scale"
            )));
        }
        Ok(PriorComponent::Cauchy { location, scale })
    }

    pub fn atom(&self) -> Option<f64> {
        match *self {
            PriorComponent::PointMass { theta0 } => Some(theta0),
            _ => None,
        }
    }

    /// Prior density at θ; a point mass reports its atom mass instead.
    pub fn density(&self, theta: f64) -> f64 {
        match self {
            PriorComponent::PointMass { theta0 } => {
                if theta == *theta0 {
                    1.0
                } else {
                    0.0
                }
            }
            PriorComponent::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&theta) {
                    return 0.0;
                }
                beta_ln_pdf(theta, *alpha, *beta).map_or(0.0, f64::exp)
            }
            PriorComponent::ScaledIndicator { region, height } => {
                if region.contains(theta) {
                    *height
                } else {
                    0.0
                }
            }
            PriorComponent::Cauchy { location, scale } => {
                cauchy_ln_pdf(theta, *location, *scale).exp()
            }
        }
    }

    /// Probability the prior assigns to `region`.
    pub fn region_mass(&self, region: &Region) -> Result<f64> {
        match self {
            PriorComponent::PointMass { theta0 } => {
                Ok(if region.contains(*theta0) { 1.0 } else { 0.0 })
            }
            PriorComponent::Beta { alpha, beta } => {
                region.mass_under(|t| beta_cdf(t.clamp(0.0, 1.0), *alpha, *beta))
            }
            PriorComponent::ScaledIndicator {
                region: own,
                height,
            } => Ok(height * own.overlap(region)),
            PriorComponent::Cauchy { location, scale } => {
                region.mass_under(|t| Ok(cauchy_cdf(t, *location, *scale)))
            }
        }
    }

    /// One draw from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            PriorComponent::PointMass { theta0 } => Ok(*theta0),
            PriorComponent::Beta { alpha, beta } => {
                if *alpha == 1.0 && *beta == 1.0 {
                    return Ok(rng.random::<f64>());
                }
                let dist = BetaDist::new(*alpha, *beta).map_err(|e| domain(e.to_string()))?;
                Ok(dist.sample(rng))
            }
            PriorComponent::ScaledIndicator { region, .. } => {
                let mut remaining = rng.random::<f64>() * region.length();
                for iv in region.intervals() {
                    if remaining <= iv.length() {
                        return Ok(iv.lo + remaining);
                    }
                    remaining -= iv.length();
                }
                Ok(region.upper())
            }
            PriorComponent::Cauchy { location, scale } => {
                let u: f64 = rng.random();
                Ok(location + scale * (std::f64::consts::PI * (u - 0.5)).tan())
            }
        }
    }
}

/// `prior_density` as a free function.
pub fn prior_density(component: &PriorComponent, theta: f64) -> f64 {
    component.density(theta)
}

pub fn prior_region_mass(component: &PriorComponent, region: &Region) -> Result<Probability> {
    component.region_mass(region).map(Probability::saturating)
}

/// Two competing priors and the prior probability of the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModelSpace {
    pub prior0: PriorComponent,
    pub prior1: PriorComponent,
    pub prob_m0: Probability,
}

impl TwoModelSpace {
    pub fn new(prior0: PriorComponent, prior1: PriorComponent, prob_m0: Probability) -> Self {
        TwoModelSpace {
            prior0,
            prior1,
            prob_m0,
        }
    }

    /// Point null at `theta0` against a uniform alternative.
    pub fn point_null_uniform(theta0: f64, prob_m0: Probability) -> Result<Self> {
        Ok(TwoModelSpace::new(
            PriorComponent::point(theta0)?,
            PriorComponent::uniform(),
            prob_m0,
        ))
    }

    pub fn prob_m1(&self) -> Probability {
        self.prob_m0.complement()
    }

    /// Continuous density and atom mass of the mixture prior at θ.
    pub fn mixture_density(&self, theta: f64) -> (f64, f64) {
        let weights = [self.prob_m0.get(), self.prob_m1().get()];
        let mut continuous = 0.0;
        let mut atom = 0.0;
        for (w, c) in weights.into_iter().zip([&self.prior0, &self.prior1]) {
            match c.atom() {
                Some(_) => atom += w * c.density(theta),
                None => continuous += w * c.density(theta),
            }
        }
        (continuous, atom)
    }
}

pub fn mixture_prior_density(space: &TwoModelSpace, theta: f64) -> (f64, f64) {
    space.mixture_density(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{integrate, QuadratureSpec};
    use proptest::prelude::*;

    fn theta_split() -> (Region, Region) {
        Region::central_split(0.45, 0.55).unwrap()
    }

    #[test]
    fn densities() {
        let (t0, t1) = theta_split();
        assert_eq!(PriorComponent::uniform().density(0.3), 1.0);
        let pi2 = PriorComponent::indicator(t0).unwrap();
        let pi3 = PriorComponent::indicator(t1).unwrap();
        assert!((pi2.density(0.5) - 10.0).abs() < 1e-12);
        assert!((pi3.density(0.7) - 1.0 / 0.9).abs() < 1e-12);
        assert_eq!(pi3.density(0.5), 0.0);
        assert_eq!(PriorComponent::point(0.5).unwrap().density(0.5), 1.0);
        assert_eq!(PriorComponent::point(0.5).unwrap().density(0.4), 0.0);
    }

    #[test]
    fn mixture_density_splits_atoms() {
        let space = TwoModelSpace::point_null_uniform(0.5, Probability::HALF).unwrap();
        assert_eq!(space.mixture_density(0.5), (0.5, 0.5));
        assert_eq!(space.mixture_density(0.3), (0.5, 0.0));
        let (t0, t1) = theta_split();
        let space = TwoModelSpace::new(
            PriorComponent::indicator(t0).unwrap(),
            PriorComponent::indicator(t1).unwrap(),
            Probability::HALF,
        );
        let (c, a) = space.mixture_density(0.5);
        assert!((c - 5.0).abs() < 1e-12);
        assert_eq!(a, 0.0);
    }

    #[test]
    fn region_masses() {
        let (t0, t1) = theta_split();
        let u = PriorComponent::uniform();
        assert!((u.region_mass(&t1).unwrap() - 0.90).abs() < 1e-12);
        assert!((u.region_mass(&t0).unwrap() - 0.10).abs() < 1e-12);
        assert_eq!(
            PriorComponent::point(0.5)
                .unwrap()
                .region_mass(&t0)
                .unwrap(),
            1.0
        );
        assert_eq!(
            PriorComponent::point(0.5)
                .unwrap()
                .region_mass(&t1)
                .unwrap(),
            0.0
        );
        let c = PriorComponent::cauchy(0.0, 0.707).unwrap();
        assert!((c.region_mass(&Region::real_line()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn region_validation() {
        assert!(Region::new(vec![]).is_err());
        assert!(Region::new(vec![Interval::closed(0.5, 0.2)]).is_err());
        assert!(Region::new(vec![Interval::closed(0.0, 0.5), Interval::closed(0.5, 1.0)]).is_err());
        assert!(Region::new(vec![Interval::closed(0.4, 0.6), Interval::closed(0.1, 0.2)]).is_err());
        let ok = Region::new(vec![
            Interval::closed(0.0, 0.5),
            Interval {
                lo: 0.5,
                hi: 1.0,
                lo_closed: false,
                hi_closed: true,
            },
        ])
        .unwrap();
        assert!(ok.contains(0.5));
        let (_, t1) = theta_split();
        assert!(!t1.contains(0.45));
        assert!(!t1.contains(0.0));
        assert!(t1.contains(0.449));
    }

    #[test]
    fn indicator_height_must_normalize() {
        let (_, t1) = theta_split();
        assert!(PriorComponent::indicator_with_height(t1.clone(), 1.0 / 0.9).is_ok());
        assert!(PriorComponent::indicator_with_height(t1, 1.11).is_err());
        assert!(PriorComponent::indicator(Region::real_line()).is_err());
        assert!(PriorComponent::beta(0.0, 1.0).is_err());
        assert!(PriorComponent::cauchy(0.0, -1.0).is_err());
        assert!(PriorComponent::point(f64::NAN).is_err());
    }

    #[test]
    fn serde_tagged_records() {
        let p: PriorComponent = serde_json::from_str(r#"{"kind":"point","theta0":0.5}"#).unwrap();
        assert_eq!(p, PriorComponent::point(0.5).unwrap());
        let b: PriorComponent =
            serde_json::from_str(r#"{"kind":"beta","alpha":1,"beta":1}"#).unwrap();
        assert_eq!(b, PriorComponent::uniform());
        let i: PriorComponent =
            serde_json::from_str(r#"{"kind":"indicator","region":[{"lo":0.45,"hi":0.55}]}"#)
                .unwrap();
        assert!((i.density(0.5) - 10.0).abs() < 1e-12);
        let c: PriorComponent =
            serde_json::from_str(r#"{"kind":"cauchy","location":0,"scale":0.707}"#).unwrap();
        assert_eq!(c, PriorComponent::cauchy(0.0, 0.707).unwrap());
        assert!(
            serde_json::from_str::<PriorComponent>(r#"{"kind":"beta","alpha":-1,"beta":1}"#)
                .is_err()
        );
        let json = serde_json::to_string(&i).unwrap();
        assert_eq!(serde_json::from_str::<PriorComponent>(&json).unwrap(), i);
    }

    #[test]
    fn continuous_components_normalize() {
        let spec = QuadratureSpec::new(1e-13, 1e-12, 500).unwrap();
        let (t0, t1) = theta_split();
        for c in [
            PriorComponent::uniform(),
            PriorComponent::beta(2.5, 7.0).unwrap(),
            PriorComponent::indicator(t0).unwrap(),
            PriorComponent::indicator(t1).unwrap(),
        ] {
            // split at the indicator edges so each panel is smooth
            let edges = [0.0, 0.45, 0.55, 1.0];
            let total: f64 = edges
                .windows(2)
                .map(|w| integrate(|t| c.density(t), w[0], w[1], &spec).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "{c:?}: {total}");
            assert!((c.region_mass(&Region::unit()).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn region_mass_is_additive(cut in 0.01f64..0.99, a in 0.3f64..20.0, b in 0.3f64..20.0) {
            let left = Region::interval(Interval::closed(0.0, cut));
            let right = Region::interval(Interval { lo: cut, hi: 1.0, lo_closed: false, hi_closed: true });
            for c in [
                PriorComponent::beta(a, b).unwrap(),
                PriorComponent::indicator(Region::interval(Interval::closed(0.2, 0.7))).unwrap(),
                PriorComponent::point(0.5).unwrap(),
            ] {
                let sum = c.region_mass(&left).unwrap() + c.region_mass(&right).unwrap();
                prop_assert!((sum - c.region_mass(&Region::unit()).unwrap()).abs() < 1e-10);
            }
        }
    }
}
