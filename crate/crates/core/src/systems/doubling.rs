use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::dimension::MeasureModel;
use crate::error::{Error, Result};
use crate::metric::{circle_distance_units, reduce_unit, Fixed, SpacePoint};
use crate::seed;

use super::MapSystem;

/// Where the digits beyond the materialized 64-digit window come from.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum DigitSource {
    /// i.i.d. digits, 1 with probability `threshold / 2^64`.
    Bernoulli { threshold: u64, rng: ChaCha8Rng },
    /// Binary expansion of the rational `rem / den` continued by long division.
    Rational { rem: u128, den: u128 },
}

impl DigitSource {
    #[inline]
    fn next_digit(&mut self) -> u64 {
        match self {
            DigitSource::Bernoulli { threshold, rng } => (rng.next_u64() < *threshold) as u64,
            DigitSource::Rational { rem, den } => {
                *rem <<= 1;
                if *rem >= *den {
                    *rem -= *den;
                    1
                } else {
                    0
                }
            }
        }
    }
}

/// A point of the doubling map as a binary digit stream.
///
/// `window` holds digits `b_1 .. b_64` with `b_1` in the most significant bit;
/// the point value is `window / 2^64`.
#[derive(Debug, Clone)]
pub struct DigitStream {
    pub window: u64,
    pub source: DigitSource,
}

impl DigitStream {
    /// Materialize 64 digits from `source`.
    pub fn from_source(mut source: DigitSource) -> DigitStream {
        let mut window = 0u64;
        for _ in 0..64 {
            window = (window << 1) | source.next_digit();
        }
        DigitStream { window, source }
    }

    /// The given leading digits, then the digits of `source`.
    pub fn with_prefix(prefix: &[u8], mut source: DigitSource) -> DigitStream {
        assert!(prefix.len() <= 64, "prefix longer than the digit window");
        let mut window = 0u64;
        for (i, &b) in prefix.iter().enumerate() {
            window |= ((b & 1) as u64) << (63 - i);
        }
        for i in prefix.len()..64 {
            window |= source.next_digit() << (63 - i);
        }
        DigitStream { window, source }
    }

    pub fn rational(numer: u128, denom: u128) -> DigitStream {
        DigitStream::from_source(DigitSource::Rational {
            rem: numer % denom,
            den: denom,
        })
    }

    /// Shift the digits left by one and materialize a fresh last digit.
    #[inline]
    pub fn advance(&mut self) -> Fixed {
        self.window = (self.window << 1) | self.source.next_digit();
        Fixed(self.window)
    }

    pub fn value(&self) -> Fixed {
        Fixed(self.window)
    }
}

/// The doubling map `x -> 2x mod 1` with the Bernoulli(p) equilibrium measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingMap {
    p: f64,
    threshold: u64,
}

impl DoublingMap {
    pub fn new(p: f64) -> Result<DoublingMap> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("Bernoulli parameter {p} outside (0,1)")));
        }
        let threshold = (p * 18_446_744_073_709_551_616.0).round().min(u64::MAX as f64) as u64;
        Ok(DoublingMap { p, threshold })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// A fresh Bernoulli(p) digit source.
    pub fn digit_source(&self, seed: u64) -> DigitSource {
        DigitSource::Bernoulli {
            threshold: self.threshold,
            rng: seed::rng(seed),
        }
    }
}

/// Apply the doubling map to a digit stream, returning the new point.
pub fn bernoulli_apply(state: &mut DigitStream) -> Fixed {
    state.advance()
}

impl MapSystem for DoublingMap {
    type State = DigitStream;

    fn name(&self) -> String {
        format!("doubling(p={})", self.p)
    }

    #[inline]
    fn step(&self, state: &mut DigitStream) {
        state.advance();
    }

    #[inline]
    fn distance_units(&self, a: &DigitStream, b: &DigitStream) -> u128 {
        circle_distance_units(a.window, b.window) as u128
    }

    fn unit_length(&self) -> u128 {
        1 << 64
    }

    fn sample(&self, seed: u64) -> DigitStream {
        DigitStream::from_source(self.digit_source(seed))
    }

    fn state_of(&self, point: &SpacePoint) -> Result<DigitStream> {
        match point {
            SpacePoint::Circle(x) => Ok(DigitStream::with_prefix(
                &[],
                DigitSource::Rational {
                    rem: x.0 as u128,
                    den: 1 << 64,
                },
            )),
            SpacePoint::Exact(r) => {
                let r = reduce_unit(r);
                Ok(DigitStream::rational(*r.numer() as u128, *r.denom() as u128))
            }
            SpacePoint::Torus(..) => Err(Error::Unrepresentable(point.label())),
        }
    }

    fn point_of(&self, state: &DigitStream) -> SpacePoint {
        SpacePoint::Circle(state.value())
    }

    fn measure(&self) -> MeasureModel {
        if self.p == 0.5 {
            MeasureModel::Lebesgue1d
        } else {
            MeasureModel::Bernoulli { p: self.p }
        }
    }
}
