//! The sequence `a_0 = m^2`, `a_n = m a_{n-1} + s_n` with
//! `s_n = (2n + 1) / (n^2 (n + 1)^2)`, and its bound
//! `a_n <= m^floor(n/2) / (1 - m) + 4 / n^2` for `n >= 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Value {
    pub n: u64,
    pub a_n: f64,
    /// `None` for `n < 2`, where no bound is claimed.
    pub bound: Option<f64>,
}

impl Lemma2Value {
    pub fn holds(&self) -> Option<bool> {
        self.bound.map(|b| self.a_n <= b)
    }

    pub fn headroom(&self) -> Option<f64> {
        self.bound.map(|b| b - self.a_n)
    }
}

#[inline]
fn s(i: u64) -> f64 {
    let i = i as f64;
    (2.0 * i + 1.0) / (i * i * (i + 1.0) * (i + 1.0))
}

pub fn lemma2_bound(m: f64, n: u64) -> Option<f64> {
    (n >= 2).then(|| m.powi((n / 2) as i32) / (1.0 - m) + 4.0 / (n as f64 * n as f64))
}

fn check_m(m: f64) -> Result<()> {
    if m > 0.0 && m < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("m = {m} must lie in (0, 1)")))
    }
}

/// Iterator over `a_0, a_1, ...` by direct recursion.
pub fn lemma2_iter(m: f64) -> Result<impl Iterator<Item = Lemma2Value>> {
    check_m(m)?;
    let mut a = m * m;
    Ok((0u64..).map(move |n| {
        if n > 0 {
            a = a * m + s(n);
        }
        Lemma2Value {
            n,
            a_n: a,
            bound: lemma2_bound(m, n),
        }
    }))
}

pub fn lemma2_sequence(m: f64, n: u64) -> Result<Lemma2Value> {
    Ok(lemma2_iter(m)?.nth(n as usize).expect("unbounded iterator"))
}

/// Outcome of checking the bound for every `2 <= n <= n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Scan {
    pub m: f64,
    pub n_max: u64,
    pub failures: u64,
    pub first_failure: Option<u64>,
    pub min_headroom: f64,
    pub min_headroom_at: u64,
    /// Smallest `(bound - a_n) / bound` over the range.
    pub min_relative_headroom: f64,
}

pub fn lemma2_scan(m: f64, n_max: u64) -> Result<Lemma2Scan> {
    if n_max < 2 {
        return Err(Error::Domain(format!("n_max = {n_max} must be at least 2")));
    }
    let mut scan = Lemma2Scan {
        m,
        n_max,
        failures: 0,
        first_failure: None,
        min_headroom: f64::INFINITY,
        min_headroom_at: 2,
        min_relative_headroom: f64::INFINITY,
    };
    for v in lemma2_iter(m)?.skip(2).take((n_max - 1) as usize) {
        let bound = v.bound.expect("n >= 2");
        let headroom = bound - v.a_n;
        if headroom < 0.0 {
            scan.failures += 1;
            scan.first_failure.get_or_insert(v.n);
        }
        if headroom < scan.min_headroom {
            scan.min_headroom = headroom;
            scan.min_headroom_at = v.n;
        }
        scan.min_relative_headroom = scan.min_relative_headroom.min(headroom / bound);
    }
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_recursion() {
        let v = lemma2_sequence(0.5, 0).unwrap();
        assert_eq!(v.a_n, 0.25);
        assert_eq!(v.holds(), None);
        let v = lemma2_sequence(0.5, 1).unwrap();
        assert_eq!(v.a_n, 0.875);
        assert_eq!(v.bound, None);
        let v = lemma2_sequence(0.5, 2).unwrap();
        assert!((v.a_n - (0.4375 + 5.0 / 36.0)).abs() < 1e-15);
        assert_eq!(v.bound, Some(2.0));
        assert_eq!(v.holds(), Some(true));
    }

    #[test]
    fn m_point_nine_at_one_hundred() {
        let v = lemma2_sequence(0.9, 100).unwrap();
        let expected_bound = 0.9f64.powi(50) / 0.1 + 4e-4;
        assert!((v.bound.unwrap() - expected_bound).abs() < 1e-15);
        assert_eq!(v.holds(), Some(true));
    }

    #[test]
    fn recursion_matches_closed_form() {
        // a_n = m^(n+2) + sum_{i=1}^{n} m^(n-i) s_i, with s_i = 1/i^2 - 1/(i+1)^2.
        for m in [0.1f64, 0.5, 0.9] {
            for n in [0u64, 1, 2, 7, 40, 300] {
                let mut closed = m.powi(n as i32 + 2);
                for i in 1..=n {
                    let fi = i as f64;
                    closed += m.powi((n - i) as i32) * (1.0 / (fi * fi) - 1.0 / ((fi + 1.0) * (fi + 1.0)));
                }
                let a = lemma2_sequence(m, n).unwrap().a_n;
                assert!((a - closed).abs() <= 1e-13 * closed, "m={m} n={n}: {a} vs {closed}");
            }
        }
    }

    #[test]
    fn rejects_m_outside_unit_interval() {
        for m in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
            assert!(matches!(lemma2_sequence(m, 3), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn full_grid_holds() {
        for i in 1..=9 {
            let scan = lemma2_scan(i as f64 / 10.0, 10_000).unwrap();
            assert_eq!(scan.failures, 0, "{scan:?}");
            assert!(scan.min_relative_headroom > 0.0);
        }
    }
}
