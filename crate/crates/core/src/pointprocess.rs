//! Seeded Poisson and binomial configurations and their Palm versions.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::geometry::{Cuboid, Point};
use crate::rng::{rng_from_seed, TrialRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub d: usize,
    pub domain: Cuboid,
    pub seed: u64,
    pub is_palm: bool,
    pub points: Vec<Point>,
}

impl Configuration {
    pub fn new(domain: Cuboid, points: Vec<Point>, seed: u64) -> Result<Self> {
        let d = domain.dim();
        for p in &points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
            if !p.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite point {:?}", p.0)));
            }
        }
        let is_palm = points.iter().any(Point::is_origin);
        Ok(Configuration {
            d,
            domain,
            seed,
            is_palm,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn origin_index(&self) -> Option<usize> {
        self.points.iter().position(Point::is_origin)
    }

    pub fn translated(&self, t: &[f64]) -> Configuration {
        Configuration {
            d: self.d,
            domain: self.domain.translated(t),
            seed: self.seed,
            is_palm: self.is_palm,
            points: self.points.iter().map(|p| p.translated(t)).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Configuration = serde_json::from_str(s)?;
        if c.domain.dim() != c.d {
            return Err(Error::DimensionMismatch {
                expected: c.d,
                got: c.domain.dim(),
            });
        }
        Configuration::new(c.domain, c.points, c.seed).map(|mut out| {
            out.is_palm = c.is_palm && out.is_palm;
            out
        })
    }
}

fn bits(p: &[f64]) -> Vec<u64> {
    p.iter().map(|x| x.to_bits()).collect()
}

/// Uniform point in the half-open box `[lo, hi)`.
fn uniform_point(domain: &Cuboid, rng: &mut TrialRng) -> Point {
    Point(
        domain
            .lower
            .iter()
            .zip(&domain.upper)
            .map(|(&lo, &hi)| loop {
                let x = lo + rng.gen::<f64>() * (hi - lo);
                if x < hi {
                    break x;
                }
            })
            .collect(),
    )
}

/// `n` i.i.d. uniform points, resampling exact duplicates.
pub(crate) fn uniform_points(domain: &Cuboid, n: usize, rng: &mut TrialRng) -> Vec<Point> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = uniform_point(domain, rng);
        if seen.insert(bits(&p.0)) {
            out.push(p);
        }
    }
    out
}

fn check_domain(domain: &Cuboid) -> Result<()> {
    if domain.volume() <= 0.0 {
        return Err(Error::InvalidArgument(format!("degenerate domain {domain}")));
    }
    Ok(())
}

pub fn poisson_count(mean: f64, rng: &mut TrialRng) -> Result<usize> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::InvalidArgument(format!("invalid Poisson mean {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.sample(rng) as usize)
}

/// Poisson process of the given intensity on `domain`, drawing from `rng`.
pub fn sample_poisson_with(
    domain: &Cuboid,
    intensity: f64,
    seed: u64,
    rng: &mut TrialRng,
) -> Result<Configuration> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::InvalidArgument(format!("invalid intensity {intensity}")));
    }
    check_domain(domain)?;
    let n = poisson_count(intensity * domain.volume(), rng)?;
    let points = uniform_points(domain, n, rng);
    Configuration::new(domain.clone(), points, seed)
}

pub fn sample_poisson(domain: &Cuboid, intensity: f64, seed: u64) -> Result<Configuration> {
    sample_poisson_with(domain, intensity, seed, &mut rng_from_seed(seed))
}

pub fn sample_binomial(domain: &Cuboid, n: usize, seed: u64) -> Result<Configuration> {
    check_domain(domain)?;
    let mut rng = rng_from_seed(seed);
    let points = uniform_points(domain, n, &mut rng);
    Configuration::new(domain.clone(), points, seed)
}

/// Adds the origin. The existing points keep their order; the origin is
/// appended last.
pub fn palm(config: &Configuration) -> Result<Configuration> {
    if config.origin_index().is_some() {
        return Err(Error::DuplicateOrigin);
    }
    let o = Point::origin(config.d);
    let interior = config
        .domain
        .lower
        .iter()
        .zip(&config.domain.upper)
        .all(|(lo, hi)| *lo < 0.0 && 0.0 < *hi);
    if !interior {
        return Err(Error::InvalidArgument(format!(
            "origin is not in the interior of the domain {}",
            config.domain
        )));
    }
    let mut out = config.clone();
    out.points.push(o);
    out.is_palm = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_is_empty() {
        let c = sample_poisson(&Cuboid::cube(2, 4.0), 0.0, 1).unwrap();
        assert!(c.is_empty());
        assert!(sample_poisson(&Cuboid::cube(2, 4.0), f64::NAN, 1).is_err());
        assert!(sample_poisson(&Cuboid::cube(2, 4.0), f64::INFINITY, 1).is_err());
    }

    #[test]
    fn deterministic() {
        let dom = Cuboid::cube(3, 5.0);
        let a = sample_poisson(&dom, 1.0, 99).unwrap();
        let b = sample_poisson(&dom, 1.0, 99).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = sample_poisson(&dom, 1.0, 100).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn binomial_counts() {
        assert!(sample_binomial(&Cuboid::cube(2, 4.0), 0, 3).unwrap().is_empty());
        let one = sample_binomial(&Cuboid::cube(2, 4.0), 1, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one.domain.contains_half_open(&one.points[0]));
    }

    #[test]
    fn binomial_coordinate_means() {
        // mean of 200 uniforms on [0,16]: sd = 16/sqrt(12)/sqrt(200)
        let sd = 16.0 / 12f64.sqrt() / 200f64.sqrt();
        let c = sample_binomial(&Cuboid::cube(2, 16.0), 200, 11).unwrap();
        for axis in 0..2 {
            let m = c.points.iter().map(|p| p.0[axis]).sum::<f64>() / 200.0;
            assert!((m - 8.0).abs() < 3.0 * sd, "axis {axis} mean {m}");
        }
    }

    #[test]
    fn palm_adds_origin_once() {
        let dom = Cuboid::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let empty = Configuration::new(dom.clone(), vec![], 0).unwrap();
        let p = palm(&empty).unwrap();
        assert_eq!(p.points, vec![Point::origin(2)]);
        assert!(p.is_palm);
        assert!(matches!(palm(&p), Err(Error::DuplicateOrigin)));

        let five = sample_binomial(&dom, 5, 4).unwrap();
        let p = palm(&five).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(&p.points[..5], &five.points[..]);
        assert_eq!(p.origin_index(), Some(5));
    }

    #[test]
    fn palm_requires_interior_origin() {
        let c = Configuration::new(Cuboid::cube(2, 1.0), vec![], 0).unwrap();
        assert!(palm(&c).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = sample_poisson(&Cuboid::cube(2, 3.0), 1.0, 5).unwrap();
        let back = Configuration::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
