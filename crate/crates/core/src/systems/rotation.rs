use rand::RngCore;

use crate::dimension::MeasureModel;
use crate::error::{Error, Result};
use crate::metric::{reduce_unit, Fixed, Rational, SpacePoint};
use crate::seed;

use super::{Lattice, MapSystem};

/// A circle rotation by the last convergent of a finite continued fraction
/// `[0; a_1, a_2, ..., a_m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSpec {
    pub partial_quotients: Vec<u64>,
    numer: u64,
    denom: u64,
}

impl RotationSpec {
    pub fn from_partial_quotients(quotients: &[u64]) -> Result<RotationSpec> {
        if quotients.is_empty() || quotients.contains(&0) {
            return Err(Error::Domain(
                "partial quotients must be a non-empty list of positive integers".into(),
            ));
        }
        // p_{-1}/q_{-1} = 1/0, p_0/q_0 = 0/1.
        let (mut p_prev, mut q_prev, mut p, mut q) = (1u64, 0u64, 0u64, 1u64);
        for &a in quotients {
            let overflow = || Error::Domain("convergent denominator overflows 63 bits".into());
            let p_next = a
                .checked_mul(p)
                .and_then(|v| v.checked_add(p_prev))
                .ok_or_else(overflow)?;
            let q_next = a
                .checked_mul(q)
                .and_then(|v| v.checked_add(q_prev))
                .ok_or_else(overflow)?;
            (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
        }
        if q >= 1 << 63 {
            return Err(Error::Domain("convergent denominator overflows 63 bits".into()));
        }
        if p == 0 || p >= q {
            return Err(Error::Domain(format!("rotation number {p}/{q} not in (0,1)")));
        }
        Ok(RotationSpec {
            partial_quotients: quotients.to_vec(),
            numer: p,
            denom: q,
        })
    }

    /// Rotation by `p/q` with `0 < p < q`; the quotients are its expansion.
    pub fn from_fraction(p: u64, q: u64) -> Result<RotationSpec> {
        if p == 0 || p >= q {
            return Err(Error::Domain(format!("rotation number {p}/{q} not in (0,1)")));
        }
        let mut quotients = Vec::new();
        let (mut a, mut b) = (q, p);
        while b != 0 {
            quotients.push(a / b);
            (a, b) = (b, a % b);
        }
        RotationSpec::from_partial_quotients(&quotients)
    }

    /// All convergents `p_j / q_j`, j = 1..m.
    pub fn convergents(&self) -> Vec<(u64, u64)> {
        let (mut p_prev, mut q_prev, mut p, mut q) = (1u64, 0u64, 0u64, 1u64);
        self.partial_quotients
            .iter()
            .map(|&a| {
                (p_prev, q_prev, p, q) = (p, q, a * p + p_prev, a * q + q_prev);
                (p, q)
            })
            .collect()
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn alpha(&self) -> Rational {
        Rational::new(self.numer as i128, self.denom as i128)
    }

    /// `x + alpha mod 1`, exactly.
    pub fn apply(&self, x: &Rational) -> Rational {
        reduce_unit(&(x + self.alpha()))
    }
}

/// Circle rotation on the lattice `Z / (q * 2^64)`.
#[derive(Debug, Clone)]
pub struct Rotation {
    spec: RotationSpec,
    lattice: Lattice,
    shift: u128,
}

impl Rotation {
    pub fn new(spec: RotationSpec) -> Result<Rotation> {
        let lattice = Lattice::new(spec.denom)?;
        let shift = (spec.numer as u128) << 64;
        Ok(Rotation { spec, lattice, shift })
    }

    pub fn spec(&self) -> &RotationSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }
}

impl MapSystem for Rotation {
    type State = u128;

    fn name(&self) -> String {
        format!("rotation({}/{})", self.spec.numer, self.spec.denom)
    }

    #[inline]
    fn step(&self, state: &mut u128) {
        *state = self.lattice.add(*state, self.shift);
    }

    #[inline]
    fn distance_units(&self, a: &u128, b: &u128) -> u128 {
        self.lattice.distance(*a, *b)
    }

    fn unit_length(&self) -> u128 {
        self.lattice.modulus()
    }

    fn sample(&self, seed: u64) -> u128 {
        self.lattice.from_fixed(Fixed(seed::rng(seed).next_u64()))
    }

    fn state_of(&self, point: &SpacePoint) -> Result<u128> {
        self.lattice.from_point(point)
    }

    fn point_of(&self, state: &u128) -> SpacePoint {
        self.lattice.to_point(*state)
    }

    fn measure(&self) -> MeasureModel {
        MeasureModel::Lebesgue1d
    }
}
