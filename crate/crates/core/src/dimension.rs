//! Local dimension of invariant measures from ball measures at dyadic radii.
//!
//! Ball measures are analytic for Lebesgue and Bernoulli(p) measures and
//! orbit frequencies (Birkhoff averages of the ball indicator) otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{fit_scaling, DyadicSchedule, Fixed, ScalingEstimate, SpacePoint};
use crate::systems::MapSystem;

/// Expected hits required in the smallest ball of an empirical estimate.
pub const MIN_EXPECTED_HITS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureModel {
    Lebesgue1d,
    Lebesgue2d,
    Bernoulli { p: f64 },
    Empirical { orbit_len: u64, seed: u64 },
}

impl MeasureModel {
    pub fn is_analytic(&self) -> bool {
        !matches!(self, MeasureModel::Empirical { .. })
    }

    /// Exact local dimension at typical points, when known in closed form.
    pub fn known_dimension(&self) -> Option<f64> {
        match self {
            MeasureModel::Lebesgue1d => Some(1.0),
            MeasureModel::Lebesgue2d => Some(2.0),
            MeasureModel::Bernoulli { p } => Some(bernoulli_dimension(*p)),
            MeasureModel::Empirical { .. } => None,
        }
    }
}

/// `H(p) / log 2`: the dimension of the Bernoulli(p) measure on the circle.
pub fn bernoulli_dimension(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// `mu([0, t / 2^64))` for the Bernoulli(p) measure, by walking the binary digits of `t`.
pub fn bernoulli_cdf(p: f64, t: u64) -> f64 {
    let mut mass = 1.0;
    let mut cdf = 0.0;
    for i in (0..64).rev() {
        if (t >> i) & 1 == 1 {
            cdf += mass * (1.0 - p);
            mass *= p;
        } else {
            mass *= 1.0 - p;
        }
    }
    cdf
}

/// A ball measure and a bound on the error from truncating endpoints to 64 digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMeasure {
    pub measure: f64,
    pub error_bound: f64,
}

pub fn ball_measure_analytic(model: &MeasureModel, y: &SpacePoint, r: f64) -> Result<BallMeasure> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    let exact = |measure| BallMeasure {
        measure,
        error_bound: 0.0,
    };
    match model {
        MeasureModel::Lebesgue1d => Ok(exact((2.0 * r).min(1.0))),
        MeasureModel::Lebesgue2d => Ok(exact((2.0 * r).min(1.0).powi(2))),
        MeasureModel::Bernoulli { p } => {
            if r >= 0.5 {
                return Ok(exact(1.0));
            }
            let center = y
                .to_fixed()
                .ok_or_else(|| Error::Domain("Bernoulli ball measure needs a 1-d point".into()))?;
            let scaled = r * 18_446_744_073_709_551_616.0;
            let r_units = scaled.round() as i128;
            let truncated =
                scaled.fract() != 0.0 || matches!(y, SpacePoint::Exact(q) if Fixed::from_rational(q).is_none());
            let periodic_cdf = |t: i128| t.div_euclid(1 << 64) as f64 + bernoulli_cdf(*p, t.rem_euclid(1 << 64) as u64);
            let c = center.0 as i128;
            let measure = periodic_cdf(c + r_units) - periodic_cdf(c - r_units);
            let error_bound = if truncated { 2.0 * p.max(1.0 - p).powi(64) } else { 0.0 };
            Ok(BallMeasure { measure, error_bound })
        }
        MeasureModel::Empirical { .. } => Err(Error::Domain("empirical measures have no analytic ball measure".into())),
    }
}

/// Fraction of the first `n` orbit points of a measure-sampled start lying in `B(y, r)`.
pub fn ball_measure_empirical<S: MapSystem>(system: &S, y: &S::State, r: f64, n: u64, seed: u64) -> f64 {
    let threshold = system.ball_threshold(r);
    let mut state = system.sample(seed);
    let mut hits = 0u64;
    for i in 0..n {
        if i > 0 {
            system.step(&mut state);
        }
        if system.distance_units(&state, y) < threshold {
            hits += 1;
        }
    }
    hits as f64 / n as f64
}

/// Visit counts of one orbit in every ball `B(y, 2^-k)` of the schedule.
pub fn empirical_ball_counts<S: MapSystem>(
    system: &S,
    y: &S::State,
    schedule: &DyadicSchedule,
    n: u64,
    seed: u64,
) -> Vec<u64> {
    let thresholds: Vec<u128> = schedule.scales().map(|k| system.dyadic_threshold(k)).collect();
    let mut finest = vec![0u64; thresholds.len() + 1];
    let mut state = system.sample(seed);
    for i in 0..n {
        if i > 0 {
            system.step(&mut state);
        }
        let d = system.distance_units(&state, y);
        let depth = thresholds.partition_point(|&t| d < t);
        finest[depth] += 1;
    }
    // counts[j] = number of points inside ball j = points whose finest ball index >= j.
    let mut counts = vec![0u64; thresholds.len()];
    let mut acc = 0u64;
    for j in (0..thresholds.len()).rev() {
        acc += finest[j + 1];
        counts[j] = acc;
    }
    counts
}

/// Scaling of `-log2 mu(B(y, 2^-k))` against `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub scaling: ScalingEstimate,
    pub d_lower: f64,
    pub d_upper: f64,
    /// `(k, mu(B(y, 2^-k)))` for the scales that were kept.
    pub measures: Vec<(u32, f64)>,
    /// Scales dropped for too few expected or observed hits.
    pub dropped: Vec<u32>,
}

impl DimensionEstimate {
    fn from_measures(measures: Vec<(u32, f64)>, dropped: Vec<u32>, tail_fraction: f64) -> Result<Self> {
        let samples: Vec<(u32, f64)> = measures.iter().map(|&(k, m)| (k, -m.log2())).collect();
        let scaling = fit_scaling(&samples, tail_fraction)?;
        Ok(DimensionEstimate {
            d_lower: scaling.slope_tail_min,
            d_upper: scaling.slope_tail_max,
            scaling,
            measures,
            dropped,
        })
    }
}

pub fn estimate_local_dimension_analytic(
    model: &MeasureModel,
    y: &SpacePoint,
    schedule: &DyadicSchedule,
    tail_fraction: f64,
) -> Result<DimensionEstimate> {
    let measures = schedule
        .scales()
        .map(|k| Ok((k, ball_measure_analytic(model, y, DyadicSchedule::radius(k))?.measure)))
        .collect::<Result<Vec<_>>>()?;
    DimensionEstimate::from_measures(measures, Vec::new(), tail_fraction)
}

/// Empirical local dimension from one orbit of length `n`. Scales whose
/// expected hit count (analytic proxy when available, observed count otherwise)
/// is below [`MIN_EXPECTED_HITS`] are dropped.
pub fn estimate_local_dimension_empirical<S: MapSystem>(
    system: &S,
    y: &S::State,
    schedule: &DyadicSchedule,
    n: u64,
    seed: u64,
    tail_fraction: f64,
) -> Result<DimensionEstimate> {
    let counts = empirical_ball_counts(system, y, schedule, n, seed);
    let model = system.measure();
    let y_point = system.point_of(y);
    let mut measures = Vec::new();
    let mut dropped = Vec::new();
    for (k, &count) in schedule.scales().zip(&counts) {
        let expected = if model.is_analytic() {
            ball_measure_analytic(&model, &y_point, DyadicSchedule::radius(k))?.measure * n as f64
        } else {
            count as f64
        };
        if count == 0 || expected < MIN_EXPECTED_HITS {
            dropped.push(k);
        } else {
            measures.push((k, count as f64 / n as f64));
        }
    }
    DimensionEstimate::from_measures(measures, dropped, tail_fraction)
}

/// Analytic estimate when the system's measure allows it, empirical otherwise.
pub fn estimate_local_dimension<S: MapSystem>(
    system: &S,
    y: &S::State,
    schedule: &DyadicSchedule,
    empirical_len: u64,
    seed: u64,
    tail_fraction: f64,
) -> Result<DimensionEstimate> {
    let model = system.measure();
    if model.is_analytic() {
        estimate_local_dimension_analytic(&model, &system.point_of(y), schedule, tail_fraction)
    } else {
        estimate_local_dimension_empirical(system, y, schedule, empirical_len, seed, tail_fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{CatMap, DigitSource, DigitStream, DoublingMap};

    #[test]
    fn lebesgue_ball_measures() {
        let y = SpacePoint::circle(0.3);
        assert_eq!(
            ball_measure_analytic(&MeasureModel::Lebesgue1d, &y, 0.125)
                .unwrap()
                .measure,
            0.25
        );
        assert_eq!(
            ball_measure_analytic(&MeasureModel::Lebesgue2d, &y, 0.125)
                .unwrap()
                .measure,
            0.0625
        );
        assert_eq!(
            ball_measure_analytic(&MeasureModel::Lebesgue1d, &y, 0.7)
                .unwrap()
                .measure,
            1.0
        );
    }

    #[test]
    fn bernoulli_quarter_digit_walk() {
        let model = MeasureModel::Bernoulli { p: 0.25 };
        let m = ball_measure_analytic(&model, &SpacePoint::circle(0.125), 0.125).unwrap();
        assert!((m.measure - 9.0 / 16.0).abs() < 1e-15);
        assert_eq!(m.error_bound, 0.0);
    }

    #[test]
    fn bernoulli_half_is_lebesgue_on_dyadic_balls() {
        let model = MeasureModel::Bernoulli { p: 0.5 };
        for j in 0..256u64 {
            for k in 2..12 {
                let y = SpacePoint::Circle(Fixed(j.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
                let r = DyadicSchedule::radius(k);
                let m = ball_measure_analytic(&model, &y, r).unwrap().measure;
                assert!((m - 2.0 * r).abs() < 1e-15, "{m} vs {}", 2.0 * r);
            }
        }
    }

    #[test]
    fn bernoulli_cdf_is_a_cdf() {
        for p in [0.1, 0.25, 0.5, 0.9] {
            assert_eq!(bernoulli_cdf(p, 0), 0.0);
            // [0, 1 - 2^-64) misses only the all-ones cylinder.
            assert!((bernoulli_cdf(p, u64::MAX) - (1.0 - p.powi(64))).abs() < 1e-12);
            let mut prev = 0.0;
            for i in 0..4096u64 {
                let f = bernoulli_cdf(p, i << 52);
                assert!(f >= prev);
                prev = f;
            }
        }
    }

    #[test]
    fn truncated_endpoints_report_a_bound() {
        let model = MeasureModel::Bernoulli { p: 0.25 };
        let m = ball_measure_analytic(&model, &SpacePoint::exact(1, 3), 0.1).unwrap();
        assert!(m.error_bound > 0.0 && m.error_bound <= 2.0 * 0.75f64.powi(64));
    }

    #[test]
    fn lebesgue_dimension_is_exact() {
        let s = DyadicSchedule::new(3, 12).unwrap();
        let y = SpacePoint::circle(0.7);
        let d1 = estimate_local_dimension_analytic(&MeasureModel::Lebesgue1d, &y, &s, 0.5).unwrap();
        assert!((d1.scaling.slope_ols - 1.0).abs() < 1e-12);
        let d2 = estimate_local_dimension_analytic(&MeasureModel::Lebesgue2d, &y, &s, 0.5).unwrap();
        assert!((d2.scaling.slope_ols - 2.0).abs() < 1e-12);
        assert!(d1.d_lower <= d1.d_upper);
    }

    #[test]
    fn bernoulli_dimension_value() {
        assert!((bernoulli_dimension(0.25) - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn bernoulli_quarter_dimension_at_frequency_typical_point() {
        // Digits 0001 repeating: exact digit frequency 1/4.
        let y = DigitStream::from_source(DigitSource::Rational { rem: 1, den: 15 });
        let model = MeasureModel::Bernoulli { p: 0.25 };
        let s = DyadicSchedule::new(6, 20).unwrap();
        let d = estimate_local_dimension_analytic(&model, &SpacePoint::Circle(y.value()), &s, 0.5).unwrap();
        assert!(
            (d.scaling.slope_ols - bernoulli_dimension(0.25)).abs() < 0.05,
            "{:?}",
            d.scaling
        );
    }

    #[test]
    fn bernoulli_quarter_dimension_median_over_typical_points() {
        let map = DoublingMap::new(0.25).unwrap();
        let model = map.measure();
        let s = DyadicSchedule::new(6, 20).unwrap();
        let mut slopes: Vec<f64> = (0..201)
            .map(|seed| {
                let y = map.point_of(&map.sample(seed));
                estimate_local_dimension_analytic(&model, &y, &s, 0.5)
                    .unwrap()
                    .scaling
                    .slope_ols
            })
            .collect();
        slopes.sort_by(f64::total_cmp);
        assert!((slopes[100] - 0.811278).abs() < 0.05, "median {}", slopes[100]);
    }

    #[test]
    fn empirical_full_ball() {
        let map = DoublingMap::new(0.5).unwrap();
        let y = map.sample(1);
        assert_eq!(ball_measure_empirical(&map, &y, 0.5, 10_000, 2), 1.0);
    }

    #[test]
    fn empirical_matches_analytic() {
        let map = DoublingMap::new(0.5).unwrap();
        let y = map.sample(3);
        let m = ball_measure_empirical(&map, &y, 0.125, 1_000_000, 4);
        assert!((m - 0.25).abs() < 0.005, "{m}");

        let cat = CatMap;
        let y = cat.sample(5);
        let m = ball_measure_empirical(&cat, &y, 0.125, 1_000_000, 6);
        assert!((m - 0.0625).abs() < 0.003, "{m}");
    }

    #[test]
    fn empirical_agrees_with_analytic_within_five_standard_errors() {
        let quarter = DoublingMap::new(0.25).unwrap();
        let cat = CatMap;
        for i in 0..20u64 {
            let k = 2 + (i % 5) as u32;
            let r = DyadicSchedule::radius(k);
            let n = 1_000_000u64;
            let check = |emp: f64, exact: f64| {
                let se = (exact * (1.0 - exact) / n as f64).sqrt();
                assert!(
                    (emp - exact).abs() <= 5.0 * se + 1e-12,
                    "empirical {emp} vs {exact} (k={k})"
                );
            };
            let y = quarter.sample(100 + i);
            let exact = ball_measure_analytic(&quarter.measure(), &quarter.point_of(&y), r)
                .unwrap()
                .measure;
            check(ball_measure_empirical(&quarter, &y, r, n, 200 + i), exact);
            let y = cat.sample(300 + i);
            let exact = ball_measure_analytic(&MeasureModel::Lebesgue2d, &cat.point_of(&y), r)
                .unwrap()
                .measure;
            check(ball_measure_empirical(&cat, &y, r, n, 400 + i), exact);
        }
    }

    #[test]
    fn empirical_counts_match_per_radius_scans() {
        let map = DoublingMap::new(0.25).unwrap();
        let y = map.sample(9);
        let s = DyadicSchedule::new(2, 8).unwrap();
        let counts = empirical_ball_counts(&map, &y, &s, 50_000, 10);
        for (k, &c) in s.scales().zip(&counts) {
            let direct = ball_measure_empirical(&map, &y, DyadicSchedule::radius(k), 50_000, 10);
            assert_eq!(c as f64 / 50_000.0, direct);
        }
    }

    #[test]
    fn empirical_dimension_stable_across_starts() {
        let cat = CatMap;
        let y = cat.sample(77);
        let s = DyadicSchedule::new(2, 6).unwrap();
        let a = estimate_local_dimension_empirical(&cat, &y, &s, 1_000_000, 1, 0.5).unwrap();
        let b = estimate_local_dimension_empirical(&cat, &y, &s, 1_000_000, 2, 0.5).unwrap();
        assert!((a.scaling.slope_ols - b.scaling.slope_ols).abs() <= 0.1);
        assert!((a.scaling.slope_ols - 2.0).abs() <= 0.1, "{:?}", a.scaling);
    }

    #[test]
    fn sparse_scales_are_dropped() {
        let cat = CatMap;
        let y = cat.sample(8);
        let s = DyadicSchedule::new(2, 9).unwrap();
        // 4^(1-k) * 1e5 < 100 for k >= 6.
        let d = estimate_local_dimension_empirical(&cat, &y, &s, 100_000, 3, 0.5).unwrap();
        assert_eq!(d.dropped, vec![6, 7, 8, 9]);
        assert_eq!(d.measures.len(), 4);
    }
}
