use std::collections::BTreeSet;

use num_integer::Integer;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dimension::MeasureModel;
use crate::error::{Error, Result};
use crate::metric::{reduce_unit, Fixed, Rational, SpacePoint};
use crate::seed;

use super::{Lattice, MapSystem};

/// Largest permitted common denominator of the lengths.
const MAX_DENOMINATOR: u128 = 1 << 62;

/// Denominator that random lengths are rounded to.
pub const RANDOM_LENGTH_BITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Discontinuities of `T`: interior endpoints of the domain partition.
    Forward,
    /// Discontinuities of `T^-1`: interior endpoints of the image partition.
    Backward,
}

/// An interval exchange: interval `i` (1-based) of length `lengths[i-1]` is
/// moved to position `permutation[i-1]` in the image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IetSpec {
    lengths: Vec<Rational>,
    permutation: Vec<usize>,
    den: u128,
}

/// Minimum circular gap among the discontinuities of `T^-n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapReport {
    pub n: u64,
    pub gap: Rational,
    pub points: usize,
    /// Two discontinuities coincided, so the gap is zero.
    pub degenerate: bool,
}

impl IetSpec {
    pub fn new(lengths: Vec<Rational>, permutation: Vec<usize>) -> Result<IetSpec> {
        let d = lengths.len();
        if d < 2 {
            return Err(Error::InvalidIet(format!("need at least 2 intervals, got {d}")));
        }
        if permutation.len() != d {
            return Err(Error::InvalidIet("permutation and lengths differ in size".into()));
        }
        let mut seen = vec![false; d];
        for &p in &permutation {
            if p == 0 || p > d || seen[p - 1] {
                return Err(Error::InvalidIet(format!(
                    "{permutation:?} is not a permutation of 1..={d}"
                )));
            }
            seen[p - 1] = true;
        }
        if lengths.iter().any(|l| *l <= Rational::zero()) {
            return Err(Error::InvalidIet("lengths must be strictly positive".into()));
        }
        if lengths.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::InvalidIet("lengths must sum to exactly 1".into()));
        }
        let den = lengths.iter().fold(1u128, |acc, l| acc.lcm(&(*l.denom() as u128)));
        if den > MAX_DENOMINATOR {
            return Err(Error::InvalidIet(format!("common denominator {den} too large")));
        }
        Ok(IetSpec {
            lengths,
            permutation,
            den,
        })
    }

    /// Lengths given as `(numerator, denominator)` pairs.
    pub fn from_pairs(lengths: &[(i128, i128)], permutation: Vec<usize>) -> Result<IetSpec> {
        if lengths.iter().any(|&(_, d)| d <= 0) {
            return Err(Error::InvalidIet("denominators must be positive".into()));
        }
        IetSpec::new(lengths.iter().map(|&(n, d)| Rational::new(n, d)).collect(), permutation)
    }

    /// Two-interval exchange realizing the rotation by `alpha`.
    pub fn rotation(alpha: Rational) -> Result<IetSpec> {
        IetSpec::new(vec![Rational::one() - alpha, alpha], vec![2, 1])
    }

    pub fn d(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[Rational] {
        &self.lengths
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Common denominator of the lengths.
    pub fn denominator(&self) -> u128 {
        self.den
    }

    /// No proper prefix `{1..k}` is mapped onto itself.
    pub fn is_irreducible(&self) -> bool {
        is_irreducible(&self.permutation)
    }

    fn domain_starts(&self) -> Vec<Rational> {
        let mut acc = Rational::zero();
        self.lengths
            .iter()
            .map(|l| {
                let start = acc;
                acc += l;
                start
            })
            .collect()
    }

    fn image_starts(&self) -> Vec<Rational> {
        (0..self.d())
            .map(|i| {
                (0..self.d())
                    .filter(|&j| self.permutation[j] < self.permutation[i])
                    .map(|j| self.lengths[j])
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        let x = reduce_unit(x);
        let starts = self.domain_starts();
        let i = starts.iter().rposition(|s| *s <= x).unwrap_or(0);
        x - starts[i] + self.image_starts()[i]
    }

    pub fn inverse_apply(&self, x: &Rational) -> Rational {
        let x = reduce_unit(x);
        let images = self.image_starts();
        let i = (0..self.d())
            .filter(|&i| images[i] <= x)
            .max_by_key(|&i| self.permutation[i])
            .unwrap_or(0);
        x - images[i] + self.domain_starts()[i]
    }

    pub fn discontinuities(&self, direction: Direction) -> Vec<Rational> {
        let mut points = match direction {
            Direction::Forward => self.domain_starts(),
            Direction::Backward => self.image_starts(),
        };
        points.retain(|p| !p.is_zero());
        points.sort();
        points
    }

    fn table(&self, scale: u128) -> IetTable {
        let units = |r: &Rational| (*r.numer() as u128) * (self.den / *r.denom() as u128) * scale;
        let dom: Vec<u128> = self.domain_starts().iter().map(units).collect();
        let img: Vec<u128> = self.image_starts().iter().map(units).collect();
        let mut order: Vec<usize> = (0..self.d()).collect();
        order.sort_by_key(|&i| self.permutation[i]);
        IetTable {
            modulus: self.den * scale,
            img_sorted: order.iter().map(|&i| img[i]).collect(),
            img_order: order,
            dom,
            img,
        }
    }

    /// Incremental tracker of the discontinuity set of `T^-n`.
    pub fn gap_tracker(&self) -> GapTracker {
        let table = self.table(1);
        let seeds: Vec<u128> = self
            .discontinuities(Direction::Backward)
            .iter()
            .map(|r| (*r.numer() as u128) * (self.den / *r.denom() as u128))
            .collect();
        GapTracker {
            table,
            current: seeds.clone(),
            points: BTreeSet::new(),
            min_gap: None,
            degenerate: false,
            n: 0,
        }
    }

    /// `delta(n)`: the minimum circular distance among the discontinuities of
    /// `T^-n`, the union of `T^j` of the backward discontinuities, `j < n`.
    pub fn delta_gap(&self, n: u64) -> Result<GapReport> {
        if n == 0 {
            return Err(Error::Domain("delta(n) needs n >= 1".into()));
        }
        let mut tracker = self.gap_tracker();
        for _ in 0..n {
            tracker.advance();
        }
        tracker.report()
    }

    /// `max_{n <= n_cap} n * delta(n)`, the empirical Boshernitzan ratio, and
    /// whether the discontinuity set ever degenerated.
    pub fn boshernitzan_ratio(&self, n_cap: u64) -> (f64, bool) {
        let mut tracker = self.gap_tracker();
        let mut best = 0.0f64;
        for _ in 0..n_cap {
            tracker.advance();
            if tracker.degenerate {
                return (0.0, true);
            }
            if let Some(g) = tracker.min_gap {
                best = best.max(tracker.n as f64 * g as f64 / self.den as f64);
            }
        }
        (best, false)
    }
}

pub(crate) fn is_irreducible(permutation: &[usize]) -> bool {
    let d = permutation.len();
    (1..d).all(|k| !permutation[..k].iter().all(|&p| p <= k))
}

/// Integer form of an exchange on `Z / modulus`.
#[derive(Debug, Clone)]
struct IetTable {
    modulus: u128,
    dom: Vec<u128>,
    img: Vec<u128>,
    img_sorted: Vec<u128>,
    img_order: Vec<usize>,
}

impl IetTable {
    #[inline]
    fn apply(&self, x: u128) -> u128 {
        let i = self.dom.partition_point(|&s| s <= x) - 1;
        x - self.dom[i] + self.img[i]
    }

    #[inline]
    fn inverse(&self, x: u128) -> u128 {
        let pos = self.img_sorted.partition_point(|&s| s <= x) - 1;
        let i = self.img_order[pos];
        x - self.img[i] + self.dom[i]
    }
}

/// Running discontinuity set of `T^-n` on the denominator lattice.
#[derive(Debug, Clone)]
pub struct GapTracker {
    table: IetTable,
    current: Vec<u128>,
    points: BTreeSet<u128>,
    min_gap: Option<u128>,
    degenerate: bool,
    n: u64,
}

impl GapTracker {
    fn circular_gap(&self, a: u128, b: u128) -> u128 {
        let d = a.abs_diff(b);
        d.min(self.table.modulus - d)
    }

    /// Add `T^n` of the backward discontinuities, moving from `n` to `n + 1`.
    pub fn advance(&mut self) {
        for idx in 0..self.current.len() {
            let p = self.current[idx];
            if !self.points.insert(p) {
                self.degenerate = true;
                self.min_gap = Some(0);
            } else if self.points.len() > 1 {
                let prev = self
                    .points
                    .range(..p)
                    .next_back()
                    .or_else(|| self.points.iter().next_back())
                    .copied();
                let next = self
                    .points
                    .range(p + 1..)
                    .next()
                    .or_else(|| self.points.iter().next())
                    .copied();
                for q in [prev, next].into_iter().flatten().filter(|&q| q != p) {
                    let g = self.circular_gap(p, q);
                    self.min_gap = Some(self.min_gap.map_or(g, |m| m.min(g)));
                }
            }
            self.current[idx] = self.table.apply(p);
        }
        self.n += 1;
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn report(&self) -> Result<GapReport> {
        let gap = self
            .min_gap
            .ok_or_else(|| Error::Domain(format!("delta({}) undefined: fewer than two discontinuities", self.n)))?;
        Ok(GapReport {
            n: self.n,
            gap: Rational::new(gap as i128, self.table.modulus as i128),
            points: self.points.len(),
            degenerate: self.degenerate,
        })
    }
}

/// A seeded random exchange of `d` intervals: lengths uniform on the simplex
/// (normalized exponential gaps) rounded to denominator 2^40, permutation
/// uniform among irreducible permutations.
pub fn random_iet(d: usize, seed: u64) -> Result<IetSpec> {
    if !(2..=6).contains(&d) {
        return Err(Error::InvalidIet(format!("random exchanges need 2 <= d <= 6, got {d}")));
    }
    let mut rng = seed::rng(seed);
    let den: i128 = 1 << RANDOM_LENGTH_BITS;
    let lengths = loop {
        let gaps: Vec<f64> = (0..d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = gaps.iter().sum();
        let mut acc = 0.0;
        let mut cuts = vec![0i128];
        for g in &gaps[..d - 1] {
            acc += g;
            cuts.push((acc / total * den as f64).round() as i128);
        }
        cuts.push(den);
        if cuts.windows(2).all(|w| w[1] > w[0]) {
            break cuts
                .windows(2)
                .map(|w| Rational::new(w[1] - w[0], den))
                .collect::<Vec<_>>();
        }
    };
    let mut permutation: Vec<usize> = (1..=d).collect();
    loop {
        permutation.shuffle(&mut rng);
        if is_irreducible(&permutation) {
            break;
        }
    }
    IetSpec::new(lengths, permutation)
}

/// An interval exchange acting on the lattice `Z / (den * 2^64)`.
#[derive(Debug, Clone)]
pub struct IetSystem {
    spec: IetSpec,
    lattice: Lattice,
    table: IetTable,
}

impl IetSystem {
    pub fn new(spec: IetSpec) -> Result<IetSystem> {
        let lattice = Lattice::new(spec.den as u64)?;
        let table = spec.table(1 << 64);
        Ok(IetSystem { spec, lattice, table })
    }

    pub fn spec(&self) -> &IetSpec {
        &self.spec
    }

    pub fn inverse_step(&self, state: &mut u128) {
        *state = self.table.inverse(*state);
    }
}

impl MapSystem for IetSystem {
    type State = u128;

    fn name(&self) -> String {
        let lengths: Vec<String> = self
            .spec
            .lengths
            .iter()
            .map(|l| format!("{}/{}", l.numer(), l.denom()))
            .collect();
        format!("iet(lengths=[{}],perm={:?})", lengths.join(" "), self.spec.permutation)
    }

    #[inline]
    fn step(&self, state: &mut u128) {
        *state = self.table.apply(*state);
    }

    #[inline]
    fn distance_units(&self, a: &u128, b: &u128) -> u128 {
        self.lattice.distance(*a, *b)
    }

    fn unit_length(&self) -> u128 {
        self.lattice.modulus()
    }

    fn sample(&self, seed: u64) -> u128 {
        self.lattice.from_fixed(Fixed(seed::rng(seed).gen::<u64>()))
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
