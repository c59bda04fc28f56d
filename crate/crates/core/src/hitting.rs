//! First-entrance times into dyadic balls, hitting and recurrence indicator
//! estimates, and Monte-Carlo measures of the survival sets
//! `SF_r^n(x) = { z : T^i z not in B(x, r) for i = 0..n }`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimension::ball_measure_analytic;
use crate::error::{Error, Result};
use crate::metric::{fit_scaling_censored, DyadicSchedule, ScalingEstimate, SpacePoint};
use crate::seed;
use crate::systems::MapSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    Hitting,
    Recurrence,
}

impl ProfileMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileMode::Hitting => "hitting",
            ProfileMode::Recurrence => "recurrence",
        }
    }
}

/// First entrance into `B(y, 2^-k)`; `tau = None` means censored at `n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub k: u32,
    pub radius: f64,
    pub tau: Option<u64>,
    pub n_max: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitProfile {
    pub source: SpacePoint,
    pub target: SpacePoint,
    pub records: Vec<HitRecord>,
    pub mode: ProfileMode,
}

impl HitProfile {
    pub fn censored(&self) -> usize {
        self.records.iter().filter(|r| r.tau.is_none()).count()
    }
}

/// Least `n` in `1..=n_max` with `d(T^n x, y) < r`. Step 0 never counts.
pub fn hitting_time<S: MapSystem>(system: &S, x: &S::State, y: &S::State, r: f64, n_max: u64) -> Option<u64> {
    hitting_time_units(system, x, y, system.ball_threshold(r), n_max)
}

pub(crate) fn hitting_time_units<S: MapSystem>(
    system: &S,
    x: &S::State,
    y: &S::State,
    threshold: u128,
    n_max: u64,
) -> Option<u64> {
    let mut state = x.clone();
    for n in 1..=n_max {
        system.step(&mut state);
        if system.distance_units(&state, y) < threshold {
            return Some(n);
        }
    }
    None
}

/// First entrance times into every ball of the schedule from one pass over
/// the orbit of `x`. In recurrence mode the target is `x` itself.
pub fn hit_profile<S: MapSystem>(
    system: &S,
    x: &S::State,
    y: &S::State,
    schedule: &DyadicSchedule,
    n_max: u64,
    mode: ProfileMode,
) -> HitProfile {
    let target = match mode {
        ProfileMode::Hitting => y.clone(),
        ProfileMode::Recurrence => x.clone(),
    };
    let thresholds: Vec<u128> = schedule.scales().map(|k| system.dyadic_threshold(k)).collect();
    let mut taus: Vec<Option<u64>> = vec![None; thresholds.len()];
    let mut next = 0;
    let mut state = x.clone();
    let mut n = 0;
    while next < thresholds.len() && n < n_max {
        system.step(&mut state);
        n += 1;
        let d = system.distance_units(&state, &target);
        while next < thresholds.len() && d < thresholds[next] {
            taus[next] = Some(n);
            next += 1;
        }
    }
    HitProfile {
        source: system.point_of(x),
        target: system.point_of(&target),
        records: schedule
            .scales()
            .zip(taus)
            .map(|(k, tau)| HitRecord {
                k,
                radius: DyadicSchedule::radius(k),
                tau,
                n_max,
            })
            .collect(),
        mode,
    }
}

/// Feed `(k, log2 tau)` into the scaling fit; the tail max estimates the upper
/// indicator and the tail min the lower one.
pub fn estimate_r(profile: &HitProfile, tail_fraction: f64) -> Result<ScalingEstimate> {
    let samples: Vec<(u32, Option<f64>)> = profile
        .records
        .iter()
        .map(|r| (r.k, r.tau.map(|t| (t as f64).log2())))
        .collect();
    fit_scaling_censored(&samples, tail_fraction)
}

/// Monte-Carlo estimate of `mu(SF_r^n(x))`: the fraction of measure-sampled
/// points whose orbit avoids `B(x, r)` at every step `0..=n`.
pub fn survival_measure<S: MapSystem>(
    system: &S,
    x: &S::State,
    r: f64,
    n: u64,
    sample_count: usize,
    seed: u64,
) -> Result<f64> {
    if sample_count < 100 {
        return Err(Error::Domain(format!(
            "survival_measure needs at least 100 samples, got {sample_count}"
        )));
    }
    let threshold = system.ball_threshold(r);
    let survivors: usize = (0..sample_count)
        .into_par_iter()
        .filter(|&i| {
            let mut z = system.sample(seed::derive(seed, &[i as u64]));
            if system.distance_units(&z, x) < threshold {
                return false;
            }
            for _ in 0..n {
                system.step(&mut z);
                if system.distance_units(&z, x) < threshold {
                    return false;
                }
            }
            true
        })
        .count();
    Ok(survivors as f64 / sample_count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummabilityRow {
    pub k: u32,
    pub ball_measure: f64,
    pub horizon: u64,
    pub survival: f64,
    pub partial_sum: f64,
    pub horizon_capped: bool,
}

/// For each scale `k`: the horizon `ceil(mu(B(x, 2^-k))^(-1-epsilon))`, the
/// survival measure at that horizon, and the running sum of survivals.
pub fn summability_diagnostic<S: MapSystem>(
    system: &S,
    x: &S::State,
    schedule: &DyadicSchedule,
    epsilon: f64,
    sample_count: usize,
    seed: u64,
    horizon_cap: u64,
) -> Result<Vec<SummabilityRow>> {
    let model = system.measure();
    if !model.is_analytic() {
        return Err(Error::Domain(
            "summability diagnostic needs an analytic ball measure".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon {epsilon} must be positive")));
    }
    let center = system.point_of(x);
    let mut partial_sum = 0.0;
    schedule
        .scales()
        .map(|k| {
            let ball_measure = ball_measure_analytic(&model, &center, DyadicSchedule::radius(k))?.measure;
            let wanted = ball_measure.powf(-1.0 - epsilon).ceil();
            let horizon_capped = wanted > horizon_cap as f64;
            let horizon = if horizon_capped { horizon_cap } else { wanted as u64 };
            let survival = survival_measure(
                system,
                x,
                DyadicSchedule::radius(k),
                horizon,
                sample_count,
                seed::derive(seed, &[k as u64]),
            )?;
            partial_sum += survival;
            Ok(SummabilityRow {
                k,
                ball_measure,
                horizon,
                survival,
                partial_sum,
                horizon_capped,
            })
        })
        .collect()
}
