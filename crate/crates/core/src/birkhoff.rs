//! Birkhoff sums of observables with a power-law pole and the growth
//! exponent of `log S_n / log n`.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{fit_scaling, ScalingEstimate};
use crate::systems::MapSystem;

/// Distance substituted for an exact pole hit.
pub const POLE_FLOOR_DISTANCE: f64 = 8.673_617_379_884_035e-19; // 2^-60

pub const DEFAULT_SANDWICH_TOLERANCE: f64 = 0.25;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for CompensatedSum {
    #[inline]
    fn add_assign(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableShape {
    /// `d(x, x0)^-alpha`; `alpha = 0` is the constant 1.
    Pole { alpha: f64 },
    /// `1 + cos(2 pi d(x, x0))`, bounded with Lebesgue mean 1.
    Cosine,
}

/// An observable centered at `x0`.
#[derive(Debug, Clone)]
pub struct SingularObservable<St> {
    pub x0: St,
    pub shape: ObservableShape,
    /// Value used when the orbit lands exactly on `x0`.
    pub floor: f64,
}

impl<St> SingularObservable<St> {
    pub fn pole(x0: St, alpha: f64) -> Self {
        SingularObservable {
            x0,
            shape: ObservableShape::Pole { alpha },
            floor: POLE_FLOOR_DISTANCE.powf(-alpha),
        }
    }

    pub fn cosine(x0: St) -> Self {
        SingularObservable {
            x0,
            shape: ObservableShape::Cosine,
            floor: 2.0,
        }
    }

    /// Value at distance `d > 0` from the pole.
    #[inline]
    pub fn eval_distance(&self, d: f64) -> f64 {
        match self.shape {
            ObservableShape::Pole { alpha } => {
                if alpha == 0.0 {
                    1.0
                } else if alpha == 2.0 {
                    1.0 / (d * d)
                } else if alpha == 3.0 {
                    1.0 / (d * d * d)
                } else {
                    d.powf(-alpha)
                }
            }
            ObservableShape::Cosine => 1.0 + (std::f64::consts::TAU * d).cos(),
        }
    }

    #[inline]
    pub fn eval<S: MapSystem<State = St>>(&self, system: &S, x: &St) -> Option<f64> {
        let units = system.distance_units(x, &self.x0);
        if units == 0 {
            return None;
        }
        Some(self.eval_distance(units as f64 / system.unit_length() as f64))
    }
}

/// Running sums `S_n = sum_{i=0}^{n} f(T^i x)` at `n = 2^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffTrace {
    /// `(j, S_{2^j})` for `1 <= j <= log2 N`.
    pub checkpoints: Vec<(u32, f64)>,
    pub pole_hit: bool,
}

impl BirkhoffTrace {
    pub fn final_sum(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.1)
    }
}

pub fn birkhoff_trace<S: MapSystem>(
    system: &S,
    x: &S::State,
    obs: &SingularObservable<S::State>,
    n: u64,
) -> Result<BirkhoffTrace> {
    if n < 256 {
        return Err(Error::Domain(format!("birkhoff_trace needs N >= 256, got {n}")));
    }
    let mut state = x.clone();
    let mut sum = CompensatedSum::default();
    let mut pole_hit = false;
    let mut checkpoints = Vec::new();
    let mut next_checkpoint = 2u64;
    for i in 0..=n {
        if i > 0 {
            system.step(&mut state);
        }
        sum += obs.eval(system, &state).unwrap_or_else(|| {
            pole_hit = true;
            obs.floor
        });
        if i == next_checkpoint {
            checkpoints.push((i.trailing_zeros(), sum.value()));
            next_checkpoint <<= 1;
        }
    }
    Ok(BirkhoffTrace { checkpoints, pole_hit })
}

/// Fit `log2 S_{2^j}` against `j`; the tail max is the limsup surrogate.
pub fn growth_exponent(trace: &BirkhoffTrace, tail_fraction: f64) -> Result<ScalingEstimate> {
    let samples: Vec<(u32, f64)> = trace.checkpoints.iter().map(|&(j, s)| (j, s.log2())).collect();
    fit_scaling(&samples, tail_fraction)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichVerdict {
    pub lower: f64,
    pub upper: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Check `alpha / R_upper - tol <= g <= alpha / R_lower + 1 + tol` with `g`
/// the tail max of the growth exponent.
pub fn sandwich_check(
    exponent: &ScalingEstimate,
    hitting: &ScalingEstimate,
    alpha: f64,
    tolerance: f64,
) -> Result<SandwichVerdict> {
    if !(alpha > 1.0) {
        return Err(Error::Domain(format!(
            "the growth sandwich needs alpha > 1, got {alpha}"
        )));
    }
    if !(hitting.slope_tail_min > 0.0) {
        return Err(Error::UndefinedBound(hitting.slope_tail_min));
    }
    let lower = alpha / hitting.slope_tail_max;
    let upper = alpha / hitting.slope_tail_min + 1.0;
    let observed = exponent.slope_tail_max;
    Ok(SandwichVerdict {
        lower,
        upper,
        observed,
        tolerance,
        pass: observed >= lower - tolerance && observed <= upper + tolerance,
    })
}

/// A scaling estimate whose every slope equals `value`.
pub fn exact_estimate(value: f64) -> ScalingEstimate {
    ScalingEstimate {
        slope_ols: value,
        slope_tail_min: value,
        slope_tail_max: value,
        tail_fraction: 1.0,
        n_points_used: 0,
        n_censored: 0,
    }
}
