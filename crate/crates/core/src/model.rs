//! Shared domain types: sample dimensions, monitoring time grids and the
//! real/complex symmetry classes of the limit laws.

use crate::error::{Error, Result};

/// Guard added before flooring `n*t` so that decimal inputs like `t = 0.6`
/// land on the grid point they denote. Exact inputs `k/n` are unaffected.
const FLOOR_GUARD: f64 = 1e-9;

/// Sample size and dimension of an observation batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    n: usize,
    p: usize,
}

impl Dimensions {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Parameter(format!(
                "dimensions require n >= 1 and p >= 1, got n={n}, p={p}"
            )));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Aspect ratio `y_n = p/n`. The artifact never knows a separate
    /// limiting `y`; all limit laws are evaluated at `y_n`.
    pub fn y(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// Time-dependent aspect ratio `p / floor(n t)`.
    pub fn aspect_ratio_at(&self, t: f64) -> Result<f64> {
        let k = floor_index(t, self.n)?;
        if k == 0 {
            return Err(Error::Domain(format!(
                "aspect ratio undefined at t={t}: floor(n t) = 0"
            )));
        }
        Ok(self.p as f64 / k as f64)
    }
}

/// `floor(n t)`, robust against the binary representation of decimal `t`.
///
/// Supplying `t` as an exact grid fraction `k/n` always returns `k`; a
/// decimal like `0.6` is nudged by `1e-9` before flooring so it cannot fall
/// one index short of the grid point it denotes.
pub fn floor_index(t: f64, n: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("time t={t} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::Parameter("sample size n must be >= 1".into()));
    }
    let k = (n as f64 * t + FLOOR_GUARD).floor();
    Ok((k as usize).min(n))
}

/// Monitoring grid on `[t0, 1]`.
///
/// The canonical grid is `{ k/n : k = ceil(n t0), ..., n }`. The monitored
/// processes depend on `t` only through `floor(n t)`, so they are constant
/// between consecutive grid points and the supremum over `[t0, 1]` equals
/// the maximum over this grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    points: Vec<f64>,
}

impl TimeGrid {
    /// The canonical grid `{ k/n }` for a given `t0`.
    pub fn canonical(n: usize, t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0 <= 1.0) {
            return Err(Error::Parameter(format!("t0={t0} must lie in (0, 1]")));
        }
        if n == 0 {
            return Err(Error::Parameter("sample size n must be >= 1".into()));
        }
        let k_start = ((n as f64 * t0 - FLOOR_GUARD).ceil() as usize).clamp(1, n);
        let points = (k_start..=n).map(|k| k as f64 / n as f64).collect();
        Ok(Self { t0, points })
    }

    /// A grid from explicit points; they must be strictly increasing, start
    /// at or after `t0` and end at 1.
    pub fn from_points(t0: f64, points: Vec<f64>) -> Result<Self> {
        if !(t0 > 0.0 && t0 <= 1.0) {
            return Err(Error::Parameter(format!("t0={t0} must lie in (0, 1]")));
        }
        if points.is_empty() {
            return Err(Error::Parameter("time grid must be nonempty".into()));
        }
        if points[0] + FLOOR_GUARD < t0 {
            return Err(Error::Parameter(format!(
                "first grid point {} below t0={t0}",
                points[0]
            )));
        }
        if !points.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Parameter(
                "time grid points must be strictly increasing".into(),
            ));
        }
        let last = *points.last().unwrap();
        if (last - 1.0).abs() > FLOOR_GUARD {
            return Err(Error::Parameter(format!(
                "last grid point must be 1, got {last}"
            )));
        }
        Ok(Self { t0, points })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Entry regime of the data, deciding the limit law's mean and scale.
///
/// Real entries with `E x^4 = 3` switch the mean term on and double the
/// covariance relative to the complex case (`E x^2 = 0`, `E |x|^4 = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    Real,
    Complex,
}

impl SymmetryClass {
    /// Whether the limiting mean term is present.
    pub fn mean_on(&self) -> bool {
        matches!(self, SymmetryClass::Real)
    }

    /// Covariance scale relative to the complex case.
    pub fn cov_factor(&self) -> f64 {
        match self {
            SymmetryClass::Real => 2.0,
            SymmetryClass::Complex => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_index_examples() {
        assert_eq!(floor_index(0.6, 200).unwrap(), 120);
        assert_eq!(floor_index(1.0, 150).unwrap(), 150);
        assert_eq!(floor_index(0.999999, 10).unwrap(), 9);
        // decimal that rounds just below its target
        assert_eq!(floor_index(0.29, 100).unwrap(), 29);
        // exact grid fractions stay exact
        for n in [7usize, 13, 200, 999] {
            for k in 1..=n {
                assert_eq!(floor_index(k as f64 / n as f64, n).unwrap(), k);
            }
        }
    }

    #[test]
    fn floor_index_rejects_bad_input() {
        assert!(floor_index(-0.1, 10).is_err());
        assert!(floor_index(1.1, 10).is_err());
    }

    #[test]
    fn aspect_ratio_examples() {
        let d = Dimensions::new(200, 100).unwrap();
        assert_eq!(d.aspect_ratio_at(0.5).unwrap(), 1.0);
        let d = Dimensions::new(200, 300).unwrap();
        assert_eq!(d.aspect_ratio_at(1.0).unwrap(), 1.5);
        let d = Dimensions::new(150, 300).unwrap();
        assert_eq!(d.aspect_ratio_at(0.2).unwrap(), 10.0);
    }

    #[test]
    fn aspect_ratio_rejects_zero_index() {
        let d = Dimensions::new(100, 10).unwrap();
        assert!(d.aspect_ratio_at(0.001).is_err());
    }

    #[test]
    fn canonical_grid_structure() {
        let g = TimeGrid::canonical(200, 0.2).unwrap();
        assert_eq!(g.len(), 161);
        assert_eq!(g.points()[0], 40.0 / 200.0);
        assert_eq!(*g.points().last().unwrap(), 1.0);
        // floor_index is injective across grid points and the aspect ratio
        // strictly decreasing
        let d = Dimensions::new(200, 120).unwrap();
        let idx: Vec<usize> = g
            .points()
            .iter()
            .map(|&t| floor_index(t, 200).unwrap())
            .collect();
        assert!(idx.windows(2).all(|w| w[0] + 1 == w[1]));
        let ratios: Vec<f64> = g
            .points()
            .iter()
            .map(|&t| d.aspect_ratio_at(t).unwrap())
            .collect();
        assert!(ratios.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(d.aspect_ratio_at(1.0).unwrap(), d.y());
    }

    #[test]
    fn custom_grid_validation() {
        assert!(TimeGrid::from_points(0.5, vec![0.5, 0.7, 1.0]).is_ok());
        assert!(TimeGrid::from_points(0.5, vec![0.4, 1.0]).is_err());
        assert!(TimeGrid::from_points(0.5, vec![0.7, 0.6, 1.0]).is_err());
        assert!(TimeGrid::from_points(0.5, vec![0.7, 0.9]).is_err());
        assert!(TimeGrid::from_points(0.0, vec![1.0]).is_err());
    }
}
