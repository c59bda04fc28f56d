//! The dynamical systems the estimators run on, each with a sampler for its
//! invariant measure.
//!
//! Every system acts exactly: the doubling map is a symbolic digit shift, the
//! cat map is integer arithmetic modulo 2^64, and rotations and interval
//! exchanges run on an integer lattice `Z / (den * 2^64)` where `den` is the
//! common denominator of their parameters.

mod cat;
mod descriptor;
mod doubling;
mod iet;
mod rotation;

pub use cat::{catmap_apply, catmap_inverse, CatMap};
pub use descriptor::{BuiltSystem, SystemDescriptor};
pub use doubling::{bernoulli_apply, DigitSource, DigitStream, DoublingMap};
pub use iet::{random_iet, Direction, GapReport, IetSpec, IetSystem};
pub use rotation::{Rotation, RotationSpec};

use std::fmt::Debug;

use crate::dimension::MeasureModel;
use crate::error::{Error, Result};
use crate::metric::{reduce_unit, Fixed, Rational, SpacePoint};

/// A deterministic map on a point space with an exact ball test.
///
/// Distances are integers in system-specific units; `ball_threshold(r)` is the
/// exclusive bound for the open ball of radius `r`.
pub trait MapSystem: Send + Sync {
    type State: Clone + Send + Sync + Debug;

    fn name(&self) -> String;

    fn step(&self, state: &mut Self::State);

    fn distance_units(&self, a: &Self::State, b: &Self::State) -> u128;

    /// Units per unit length.
    fn unit_length(&self) -> u128;

    /// Draw a point from the invariant measure.
    fn sample(&self, seed: u64) -> Self::State;

    fn state_of(&self, point: &SpacePoint) -> Result<Self::State>;

    fn point_of(&self, state: &Self::State) -> SpacePoint;

    fn measure(&self) -> MeasureModel;

    /// Balls of radius at least 1/2 are the whole space.
    fn ball_threshold(&self, r: f64) -> u128 {
        if r >= 0.5 {
            return u128::MAX;
        }
        if r <= 0.0 {
            return 0;
        }
        (r * self.unit_length() as f64).ceil() as u128
    }

    fn distance(&self, a: &Self::State, b: &Self::State) -> f64 {
        self.distance_units(a, b) as f64 / self.unit_length() as f64
    }

    fn dyadic_threshold(&self, k: u32) -> u128 {
        if k <= 1 {
            u128::MAX
        } else {
            self.unit_length() >> k
        }
    }
}

impl<S: MapSystem + ?Sized> MapSystem for &S {
    type State = S::State;
    fn name(&self) -> String {
        (**self).name()
    }
    fn step(&self, state: &mut Self::State) {
        (**self).step(state)
    }
    fn distance_units(&self, a: &Self::State, b: &Self::State) -> u128 {
        (**self).distance_units(a, b)
    }
    fn unit_length(&self) -> u128 {
        (**self).unit_length()
    }
    fn sample(&self, seed: u64) -> Self::State {
        (**self).sample(seed)
    }
    fn state_of(&self, point: &SpacePoint) -> Result<Self::State> {
        (**self).state_of(point)
    }
    fn point_of(&self, state: &Self::State) -> SpacePoint {
        (**self).point_of(state)
    }
    fn measure(&self) -> MeasureModel {
        (**self).measure()
    }
}

/// `T^m` for a system `T`.
#[derive(Debug, Clone, Copy)]
pub struct Iterated<S> {
    pub inner: S,
    pub power: usize,
}

impl<S: MapSystem> MapSystem for Iterated<S> {
    type State = S::State;
    fn name(&self) -> String {
        format!("{}^{}", self.inner.name(), self.power)
    }
    fn step(&self, state: &mut Self::State) {
        for _ in 0..self.power {
            self.inner.step(state);
        }
    }
    fn distance_units(&self, a: &Self::State, b: &Self::State) -> u128 {
        self.inner.distance_units(a, b)
    }
    fn unit_length(&self) -> u128 {
        self.inner.unit_length()
    }
    fn sample(&self, seed: u64) -> Self::State {
        self.inner.sample(seed)
    }
    fn state_of(&self, point: &SpacePoint) -> Result<Self::State> {
        self.inner.state_of(point)
    }
    fn point_of(&self, state: &Self::State) -> SpacePoint {
        self.inner.point_of(state)
    }
    fn measure(&self) -> MeasureModel {
        self.inner.measure()
    }
    fn ball_threshold(&self, r: f64) -> u128 {
        self.inner.ball_threshold(r)
    }
    fn dyadic_threshold(&self, k: u32) -> u128 {
        self.inner.dyadic_threshold(k)
    }
}

/// A point distributed according to the system's invariant measure.
pub fn sample_from_measure<S: MapSystem>(system: &S, seed: u64) -> SpacePoint {
    system.point_of(&system.sample(seed))
}

/// The circle `Z / (den * 2^64)` used by rotations and interval exchanges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    den: u64,
    modulus: u128,
}

impl Lattice {
    pub fn new(den: u64) -> Result<Lattice> {
        if den == 0 || den >= 1 << 63 {
            return Err(Error::Domain(format!("lattice denominator {den} out of range")));
        }
        Ok(Lattice {
            den,
            modulus: (den as u128) << 64,
        })
    }

    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn from_fixed(&self, x: Fixed) -> u128 {
        x.0 as u128 * self.den as u128
    }

    /// Units of `n/d` on this lattice; `d` must divide `den * 2^64`.
    pub fn from_rational(&self, x: &Rational) -> Option<u128> {
        let x = reduce_unit(x);
        let (n, d) = (*x.numer() as u128, *x.denom() as u128);
        if !self.modulus.is_multiple_of(d) {
            return None;
        }
        Some(n * (self.modulus / d))
    }

    pub fn from_point(&self, p: &SpacePoint) -> Result<u128> {
        match p {
            SpacePoint::Circle(x) => Ok(self.from_fixed(*x)),
            SpacePoint::Exact(r) => self.from_rational(r).ok_or_else(|| Error::Unrepresentable(p.label())),
            SpacePoint::Torus(..) => Err(Error::Unrepresentable(p.label())),
        }
    }

    pub fn to_point(&self, units: u128) -> SpacePoint {
        SpacePoint::Exact(Rational::new(units as i128, self.modulus as i128))
    }

    #[inline]
    pub fn add(&self, a: u128, b: u128) -> u128 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn distance(&self, a: u128, b: u128) -> u128 {
        let d = a.abs_diff(b);
        d.min(self.modulus - d)
    }
}
