use rand::RngCore;

use crate::dimension::MeasureModel;
use crate::error::{Error, Result};
use crate::metric::{circle_distance_units, Fixed, SpacePoint};
use crate::seed;

use super::MapSystem;

/// `(x, y) -> (2x + y, x + y) mod 1` on fixed-point coordinates.
#[inline]
pub fn catmap_apply(p: (u64, u64)) -> (u64, u64) {
    let (x, y) = p;
    (x.wrapping_add(x).wrapping_add(y), x.wrapping_add(y))
}

/// The inverse matrix `((1,-1),(-1,2))`.
#[inline]
pub fn catmap_inverse(p: (u64, u64)) -> (u64, u64) {
    let (x, y) = p;
    (x.wrapping_sub(y), y.wrapping_add(y).wrapping_sub(x))
}

/// Arnold's cat map on the 2-torus with Lebesgue measure and the sup metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CatMap;

impl MapSystem for CatMap {
    type State = (u64, u64);

    fn name(&self) -> String {
        "cat".into()
    }

    #[inline]
    fn step(&self, state: &mut (u64, u64)) {
        *state = catmap_apply(*state);
    }

    #[inline]
    fn distance_units(&self, a: &(u64, u64), b: &(u64, u64)) -> u128 {
        circle_distance_units(a.0, b.0).max(circle_distance_units(a.1, b.1)) as u128
    }

    fn unit_length(&self) -> u128 {
        1 << 64
    }

    fn sample(&self, seed: u64) -> (u64, u64) {
        let mut rng = seed::rng(seed);
        (rng.next_u64(), rng.next_u64())
    }

    fn state_of(&self, point: &SpacePoint) -> Result<(u64, u64)> {
        match point {
            SpacePoint::Torus(x, y) => Ok((x.0, y.0)),
            _ => Err(Error::Unrepresentable(point.label())),
        }
    }

    fn point_of(&self, state: &(u64, u64)) -> SpacePoint {
        SpacePoint::Torus(Fixed(state.0), Fixed(state.1))
    }

    fn measure(&self) -> MeasureModel {
        MeasureModel::Lebesgue2d
    }
}
