//! Limiting Gaussian laws of the monitored processes: closed-form mean and
//! covariance kernels for the shipped statistics, and the general contour
//! engines (rectangle route for discrete populations, unit-circle route for
//! the identity population) they are cross-validated against.

mod circle;
mod quad;
mod rectangle;
mod sigma;

pub use circle::{circle_cov, circle_cov_batch, circle_mean};
#[doc(hidden)]
pub use circle::{debug_cov_at_radii, debug_g_ratio};
pub use rectangle::{lss_cov_general, lss_mean_general};
pub use sigma::{sigma_kernel, sigma_kernel_at, KernelPoint};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Dimensions, SymmetryClass, TimeGrid};
use crate::mp::{support_interval, SpectralFn, SpectralMeasure};

/// Contour quadrature parameters.
///
/// Circle route: trapezoid sums over `|xi| = 1` with `nodes` points at the
/// radius ladder derived from `(r1, r2)`. Rectangle route: Gauss–Legendre
/// with `nodes` points per edge on the rectangle given by `margins =
/// (x_l, x_r, v0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourConfig {
    pub route: ContourRoute,
    pub nodes: usize,
    pub r1: f64,
    pub r2: f64,
    pub margins: (f64, f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourRoute {
    Rectangle,
    Circle,
}

impl ContourConfig {
    /// Circle defaults: the radius ladder starts wide enough that the
    /// trapezoid aliasing error (which grows like `rho^{-M}` as the kernel
    /// poles approach the circle for `r -> 1`) stays negligible at every
    /// ladder step, and the `O(r - 1)` bias is removed by extrapolation.
    pub fn circle_default() -> Self {
        Self {
            route: ContourRoute::Circle,
            nodes: 1024,
            r1: 1.08,
            r2: 1.16,
            margins: (0.0, 0.0, 0.0),
        }
    }

    /// Rectangle enclosing `support` with the standard margins; for the log
    /// the left edge is clamped to half the support's lower endpoint so the
    /// contour stays inside the right half plane.
    pub fn rectangle_for(support: (f64, f64), f: SpectralFn) -> Self {
        let (lower, upper) = support;
        let width = (upper - lower).max(upper.abs()).max(1e-3);
        let x_l = if f == SpectralFn::Log && lower > 0.0 {
            lower / 2.0
        } else {
            lower - (0.1f64).max(0.25 * width)
        };
        let x_r = upper + 0.25 * width;
        Self {
            route: ContourRoute::Rectangle,
            nodes: 256,
            r1: 0.0,
            r2: 0.0,
            margins: (x_l, x_r, 1.0),
        }
    }
}

/// Rectangle-route mean with contour margins derived from the support of
/// the population measure at time `t`.
pub fn lss_mean_auto(f: SpectralFn, t: f64, y: f64, h: &SpectralMeasure) -> Result<f64> {
    let support = support_interval(t, y, (h.lambda_min(), h.lambda_max()))?;
    let cfg = ContourConfig::rectangle_for(support, f);
    lss_mean_general(f, t, y, h, &cfg)
}

/// Rectangle-route covariance with automatic nested contours.
pub fn lss_cov_auto(
    f1: SpectralFn,
    f2: SpectralFn,
    t1: f64,
    t2: f64,
    y: f64,
    h: &SpectralMeasure,
    class: SymmetryClass,
) -> Result<f64> {
    let tmin = t1.min(t2);
    let support = support_interval(tmin, y, (h.lambda_min(), h.lambda_max()))?;
    let outer_f = if f1 == SpectralFn::Log || f2 == SpectralFn::Log {
        SpectralFn::Log
    } else {
        f1
    };
    let cfg = ContourConfig::rectangle_for(support, outer_f);
    lss_cov_general(f1, f2, t1, t2, y, h, class, &cfg, support)
}

/// A limiting Gaussian process on a time grid: mean function, covariance
/// kernel and symmetry class.
pub struct LimitLaw {
    class: SymmetryClass,
    domain: TimeGrid,
    mean: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    cov: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl LimitLaw {
    pub fn new(
        class: SymmetryClass,
        domain: TimeGrid,
        mean: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cov: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            class,
            domain,
            mean: Box::new(mean),
            cov: Box::new(cov),
        }
    }

    pub fn class(&self) -> SymmetryClass {
        self.class
    }

    pub fn domain(&self) -> &TimeGrid {
        &self.domain
    }

    pub fn mean(&self, t: f64) -> f64 {
        (self.mean)(t)
    }

    pub fn cov(&self, t1: f64, t2: f64) -> f64 {
        (self.cov)(t1, t2)
    }

    pub fn mean_vector(&self, grid: &TimeGrid) -> Vec<f64> {
        grid.points().iter().map(|&t| self.mean(t)).collect()
    }

    pub fn gram(&self, grid: &TimeGrid) -> DMatrix<f64> {
        let pts = grid.points();
        let m = pts.len();
        DMatrix::from_fn(m, m, |i, j| self.cov(pts[i], pts[j]))
    }

    /// Kernel sanity on a subsampled grid: symmetry to 1e-10 and a Gram
    /// minimum eigenvalue above `-1e-8 * max diagonal`.
    pub fn validate(&self) -> Result<()> {
        let pts = self.domain.points();
        let step = (pts.len() / 64).max(1);
        let sub: Vec<f64> = pts.iter().copied().step_by(step).collect();
        let m = sub.len();
        let gram = DMatrix::from_fn(m, m, |i, j| self.cov(sub[i], sub[j]));
        for i in 0..m {
            for j in (i + 1)..m {
                if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-10 {
                    return Err(Error::Numeric(format!(
                        "covariance kernel asymmetric at ({}, {})",
                        sub[i], sub[j]
                    )));
                }
            }
        }
        let max_diag = (0..m).map(|i| gram[(i, i)]).fold(0.0f64, f64::max);
        let min_eig = gram
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-8 * max_diag {
            return Err(Error::Numeric(format!(
                "covariance Gram matrix indefinite: min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }
}

/// Limit law of the centered John-statistic process
/// `p (U_{n,t} - 1 - y_(floor(nt)))`: mean `y/t`, covariance
/// `4 (y / max(t1, t2))^2`.
pub fn law_u(dims: Dimensions, grid: TimeGrid) -> LimitLaw {
    let y = dims.y();
    LimitLaw::new(
        SymmetryClass::Real,
        grid,
        move |t| y / t,
        move |t1, t2| {
            let ymax = y / t1.max(t2);
            4.0 * ymax * ymax
        },
    )
}

/// Limit law of the centered fourth-moment ratio process.
pub fn law_u2(dims: Dimensions, grid: TimeGrid) -> LimitLaw {
    let y = dims.y();
    LimitLaw::new(
        SymmetryClass::Real,
        grid,
        move |t| y * (4.0 * t * t + 7.0 * t * y + 4.0 * y * y) / (t * (t + y).powi(2)),
        move |a, b| {
            // kernel stated for t2 <= t1
            let (t1, t2) = if a >= b { (a, b) } else { (b, a) };
            let num = 8.0
                * y
                * y
                * (4.0 * t1 * t1 * (2.0 * t2 * t2 + 3.0 * t2 * y + 2.0 * y * y)
                    + 6.0 * t1 * y * (4.0 * t2 * t2 + 5.0 * t2 * y + 2.0 * y * y)
                    + y * y * (21.0 * t2 * t2 + 24.0 * t2 * y + 8.0 * y * y));
            num / (t1 * t1 * (t1 + y).powi(2) * (t2 + y).powi(2))
        },
    )
}

/// Limit law of the centered log-determinant process; requires `y < t0`.
pub fn law_logdet(dims: Dimensions, grid: TimeGrid, class: SymmetryClass) -> Result<LimitLaw> {
    let y = dims.y();
    if y >= grid.t0() {
        return Err(Error::Domain(format!(
            "log-det law requires y < t0, got y={y}, t0={}",
            grid.t0()
        )));
    }
    let mean_on = class.mean_on();
    let cov_scale = class.cov_factor() / 2.0; // 1 for real, 1/2 for complex
    Ok(LimitLaw::new(
        class,
        grid,
        move |t| {
            if mean_on {
                0.5 * (1.0 - y / t).ln()
            } else {
                0.0
            }
        },
        move |t1, t2| {
            let ymax = y / t1.max(t2);
            -2.0 * cov_scale * (1.0 - ymax).ln()
        },
    ))
}

/// Joint limit law of `(X(f1, .), X(f2, .))` for `f1 = x`, `f2 = x^2` and
/// the identity population; the closed forms behind the John-statistic
/// delta method.
#[derive(Debug, Clone, Copy)]
pub struct TracePairLaw {
    y: f64,
}

impl TracePairLaw {
    pub fn new(dims: Dimensions) -> Self {
        Self { y: dims.y() }
    }

    pub fn from_ratio(y: f64) -> Self {
        Self { y }
    }

    pub fn mean_f1(&self, _t: f64) -> f64 {
        0.0
    }

    pub fn mean_f2(&self, t: f64) -> f64 {
        t * self.y
    }

    pub fn cov_f1_f1(&self, t1: f64, t2: f64) -> f64 {
        2.0 * self.y * t1.min(t2)
    }

    pub fn cov_f2_f2(&self, t1: f64, t2: f64) -> f64 {
        let m = t1.min(t2);
        4.0 * m * self.y * (2.0 * t1 * t2 + (m + 2.0 * (t1 + t2)) * self.y + 2.0 * self.y * self.y)
    }

    /// `cov(X(f1, t1), X(f2, t2))`; the `(t + y)` factor follows the time
    /// attached to `f2` and is deliberately not symmetrized.
    pub fn cov_f1_f2(&self, t1: f64, t2: f64) -> f64 {
        4.0 * t1.min(t2) * self.y * (t2 + self.y)
    }

    /// `cov(X(f2, t1), X(f1, t2))`.
    pub fn cov_f2_f1(&self, t1: f64, t2: f64) -> f64 {
        self.cov_f1_f2(t2, t1)
    }
}
