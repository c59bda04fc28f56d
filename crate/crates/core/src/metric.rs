//! Point spaces, metrics, dyadic radius schedules and the scaling-exponent
//! fit used by every estimator in the crate.
//!
//! Points live on the circle `[0,1)` or the torus `[0,1)²`. The default
//! representation is a 64-bit fixed-point fraction (numerator over 2^64), so
//! integer maps such as the doubling map and the cat map act exactly.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rationals used by interval exchanges and rotations.
pub type Rational = num_rational::Ratio<i128>;

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// A fraction in `[0,1)` stored as a numerator over 2^64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fixed(pub u64);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const HALF: Fixed = Fixed(1 << 63);

    /// Nearest representable fraction to `x mod 1`.
    pub fn from_f64(x: f64) -> Fixed {
        let frac = x - x.floor();
        let scaled = (frac * TWO_POW_64).round();
        if scaled >= TWO_POW_64 {
            Fixed(0)
        } else {
            Fixed(scaled as u64)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / TWO_POW_64
    }

    /// `2^-k` for `1 <= k <= 64`.
    pub fn dyadic(k: u32) -> Fixed {
        assert!((1..=64).contains(&k), "dyadic exponent out of range: {k}");
        Fixed(1u64 << (64 - k))
    }

    /// Exact conversion of a rational in `[0,1)` whose denominator is a power of two
    /// not exceeding 2^64.
    pub fn from_rational(x: &Rational) -> Option<Fixed> {
        let x = reduce_unit(x);
        let den = *x.denom();
        if den <= 0 || (den & (den - 1)) != 0 || den > (1i128 << 64) {
            return None;
        }
        let shift = 64 - den.trailing_zeros();
        Some(Fixed(((*x.numer() as u128) << shift) as u64))
    }

    pub fn to_rational(self) -> Rational {
        Rational::new(self.0 as i128, 1i128 << 64)
    }
}

/// Reduce a rational into `[0,1)`.
pub fn reduce_unit(x: &Rational) -> Rational {
    let r = x - x.floor();
    if r < Rational::zero() {
        r + Rational::one()
    } else {
        r
    }
}

/// A point of one of the supported spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpacePoint {
    Circle(Fixed),
    Torus(Fixed, Fixed),
    /// Exact rational coordinate on the circle.
    Exact(Rational),
}

impl SpacePoint {
    pub fn circle(x: f64) -> SpacePoint {
        SpacePoint::Circle(Fixed::from_f64(x))
    }

    pub fn torus(x: f64, y: f64) -> SpacePoint {
        SpacePoint::Torus(Fixed::from_f64(x), Fixed::from_f64(y))
    }

    pub fn exact(numer: i128, denom: i128) -> SpacePoint {
        SpacePoint::Exact(reduce_unit(&Rational::new(numer, denom)))
    }

    pub fn dimension(&self) -> usize {
        match self {
            SpacePoint::Torus(..) => 2,
            _ => 1,
        }
    }

    /// The coordinate as a float (first coordinate for torus points).
    pub fn coords(&self) -> Vec<f64> {
        match self {
            SpacePoint::Circle(x) => vec![x.to_f64()],
            SpacePoint::Torus(x, y) => vec![x.to_f64(), y.to_f64()],
            SpacePoint::Exact(r) => vec![ratio_to_f64(r)],
        }
    }

    /// Fixed-point form of a 1-d point, exact when the rational is dyadic.
    pub fn to_fixed(&self) -> Option<Fixed> {
        match self {
            SpacePoint::Circle(x) => Some(*x),
            SpacePoint::Exact(r) => Some(Fixed::from_rational(r).unwrap_or_else(|| Fixed::from_f64(ratio_to_f64(r)))),
            SpacePoint::Torus(..) => None,
        }
    }

    /// Distance under the circle metric (1-d) or the sup metric (torus).
    pub fn distance(&self, other: &SpacePoint) -> Result<f64> {
        match (self, other) {
            (SpacePoint::Torus(a, b), SpacePoint::Torus(c, d)) => Ok(torus_distance((*a, *b), (*c, *d))),
            (SpacePoint::Exact(a), SpacePoint::Exact(b)) => Ok(ratio_to_f64(&circle_distance_exact(a, b))),
            (SpacePoint::Torus(..), _) | (_, SpacePoint::Torus(..)) => {
                Err(Error::Domain("distance between points of different dimension".into()))
            }
            (a, b) => Ok(circle_distance(a.to_fixed().unwrap(), b.to_fixed().unwrap())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            SpacePoint::Circle(x) => format!("{}", x.to_f64()),
            SpacePoint::Torus(x, y) => format!("({};{})", x.to_f64(), y.to_f64()),
            SpacePoint::Exact(r) => format!("{}/{}", r.numer(), r.denom()),
        }
    }
}

pub(crate) fn ratio_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Circle distance `min(|a-b|, 1-|a-b|)` in fixed-point units.
#[inline]
pub fn circle_distance_units(a: u64, b: u64) -> u64 {
    let d = a.wrapping_sub(b);
    d.min(d.wrapping_neg())
}

pub fn circle_distance(a: Fixed, b: Fixed) -> f64 {
    circle_distance_units(a.0, b.0) as f64 / TWO_POW_64
}

pub fn circle_distance_exact(a: &Rational, b: &Rational) -> Rational {
    let d = reduce_unit(&(a - b));
    let e = Rational::one() - d;
    if d <= e {
        d
    } else {
        reduce_unit(&e)
    }
}

/// Sup metric on the torus: squares are the balls.
pub fn torus_distance(a: (Fixed, Fixed), b: (Fixed, Fixed)) -> f64 {
    circle_distance(a.0, b.0).max(circle_distance(a.1, b.1))
}

/// Dyadic radii `2^-k` for `k_min <= k <= k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicSchedule {
    pub k_min: u32,
    pub k_max: u32,
}

impl DyadicSchedule {
    pub const MAX_K: u32 = 60;

    pub fn new(k_min: u32, k_max: u32) -> Result<Self> {
        let schedule = DyadicSchedule { k_min, k_max };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |reason| {
            Err(Error::InvalidSchedule {
                k_min: self.k_min,
                k_max: self.k_max,
                reason,
            })
        };
        if self.k_min < 1 {
            return err("k_min must be at least 1");
        }
        if self.k_max > Self::MAX_K {
            return err("k_max must not exceed 60");
        }
        if self.k_max < self.k_min + 3 {
            return err("at least four scales are required");
        }
        Ok(())
    }

    pub fn scales(&self) -> impl Iterator<Item = u32> {
        self.k_min..=self.k_max
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radius(k: u32) -> f64 {
        (-(k as f64)).exp2()
    }
}

/// Slope statistics of a log-quantity against the dyadic scale index.
///
/// `slope_tail_min` and `slope_tail_max` are the extremes of `v(k)/k` over the
/// finest scales and stand in for the liminf and limsup of the ratio; the
/// least-squares slope is kept as a stability diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimate {
    pub slope_ols: f64,
    pub slope_tail_min: f64,
    pub slope_tail_max: f64,
    pub tail_fraction: f64,
    pub n_points_used: usize,
    pub n_censored: usize,
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;
const MIN_SAMPLES: usize = 4;

/// Fit `v` against `k`. Requires at least four samples with distinct `k`.
pub fn fit_scaling(samples: &[(u32, f64)], tail_fraction: f64) -> Result<ScalingEstimate> {
    let window: Vec<(u32, Option<f64>)> = samples.iter().map(|&(k, v)| (k, Some(v))).collect();
    fit_scaling_censored(&window, tail_fraction)
}

/// As [`fit_scaling`], but `None` (or non-finite) values count as censored scales.
pub fn fit_scaling_censored(samples: &[(u32, Option<f64>)], tail_fraction: f64) -> Result<ScalingEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Domain(format!("tail_fraction {tail_fraction} outside (0,1]")));
    }
    let mut usable: Vec<(u32, f64)> = samples
        .iter()
        .filter_map(|&(k, v)| v.filter(|v| v.is_finite()).map(|v| (k, v)))
        .collect();
    let n_censored = samples.len() - usable.len();
    usable.sort_by_key(|&(k, _)| k);
    if usable.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Domain("fit_scaling requires distinct scales".into()));
    }
    if usable.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            usable: usable.len(),
            required: MIN_SAMPLES,
            censored: n_censored,
        });
    }
    if usable.iter().any(|&(k, _)| k == 0) {
        return Err(Error::Domain("scale index 0 has no defined ratio".into()));
    }

    let n = usable.len() as f64;
    let k_mean = usable.iter().map(|&(k, _)| k as f64).sum::<f64>() / n;
    let v_mean = usable.iter().map(|&(_, v)| v).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(k, v) in &usable {
        let dk = k as f64 - k_mean;
        sxy += dk * (v - v_mean);
        sxx += dk * dk;
    }
    let slope_ols = sxy / sxx;

    let tail_len = ((tail_fraction * usable.len() as f64).ceil() as usize).clamp(1, usable.len());
    let tail = &usable[usable.len() - tail_len..];
    let ratios = tail.iter().map(|&(k, v)| v / k as f64);
    let slope_tail_min = ratios.clone().fold(f64::INFINITY, f64::min);
    let slope_tail_max = ratios.fold(f64::NEG_INFINITY, f64::max);

    Ok(ScalingEstimate {
        slope_ols,
        slope_tail_min,
        slope_tail_max,
        tail_fraction,
        n_points_used: usable.len(),
        n_censored,
    })
}
