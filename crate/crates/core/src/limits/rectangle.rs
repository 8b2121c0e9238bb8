//! Rectangle-contour evaluation of the limiting mean and covariance
//! integrals for a general discrete population spectral distribution.
//!
//! The mean is `-(1/2 pi i) * contour integral of f(z) m(z) dz` with the
//! integrand `m` built from the companion transform; the covariance is the
//! double contour integral of `f1(z1) conj(f2(z2)) sigma^2(z1, conj z2)`
//! over two nested, non-overlapping rectangles enclosing the support.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::limits::quad::gauss_legendre;
use crate::limits::sigma::{sigma_kernel_at, KernelPoint};
use crate::limits::ContourConfig;
use crate::model::SymmetryClass;
use crate::mp::{companion_stieltjes_derivative, companion_stieltjes_from, SpectralFn, SpectralMeasure};

const IMAG_DEFECT_TOL: f64 = 1e-6;

/// Quadrature nodes `(z, weight)` for one closed rectangle, counterclockwise.
fn rectangle_nodes(x_l: f64, x_r: f64, v0: f64, per_edge: usize) -> Vec<(Complex64, Complex64)> {
    let (gx, gw) = gauss_legendre(per_edge);
    let corners = [
        Complex64::new(x_l, -v0),
        Complex64::new(x_r, -v0),
        Complex64::new(x_r, v0),
        Complex64::new(x_l, v0),
    ];
    let mut nodes = Vec::with_capacity(4 * per_edge);
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let half = (b - a) / 2.0;
        let mid = (a + b) / 2.0;
        for i in 0..per_edge {
            nodes.push((mid + half * gx[i], half * gw[i]));
        }
    }
    nodes
}

/// Solves the companion transform and its derivative at every node,
/// warm-starting each solve from the previous node's solution.
fn solve_contour(
    nodes: &[(Complex64, Complex64)],
    t: f64,
    y: f64,
    h: &SpectralMeasure,
) -> Result<Vec<(KernelPoint, Complex64)>> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut start = -1.0 / nodes[0].0;
    for &(z, w) in nodes {
        let sol = companion_stieltjes_from(z, t, y, h, start)?;
        start = sol.s;
        let ds = companion_stieltjes_derivative(t, y, h, sol.s)?;
        out.push((KernelPoint { z, s: sol.s, ds }, w));
    }
    Ok(out)
}

/// Mean integrand of the limit theorem for the real symmetry class.
fn mean_integrand(t: f64, y: f64, h: &SpectralMeasure, s: Complex64) -> Complex64 {
    let a3 = h.frac_integral_cube(t, s) * s * s * s;
    let a2 = {
        // integral s^2 lambda^2/(t s lambda + 1)^2 dH
        h.atoms()
            .iter()
            .map(|&(l, w)| {
                let d = t * s * l + 1.0;
                w * s * s * l * l / (d * d)
            })
            .sum::<Complex64>()
    };
    let denom = 1.0 - t * y * a2;
    t * y * a3 / (denom * denom)
}

/// `E[X(f, t)]` over a rectangle enclosing the support; real class.
/// The imaginary part of the quadrature is a diagnostic and must stay below
/// `1e-6`, otherwise the contour is too tight for the requested function.
pub fn lss_mean_general(
    f: SpectralFn,
    t: f64,
    y: f64,
    h: &SpectralMeasure,
    cfg: &ContourConfig,
) -> Result<f64> {
    let (x_l, x_r, v0) = cfg.margins;
    if f == SpectralFn::Log && x_l <= 0.0 {
        return Err(Error::Parameter(format!(
            "log contour must exclude 0: x_l={x_l}"
        )));
    }
    let nodes = rectangle_nodes(x_l, x_r, v0, cfg.nodes);
    let solved = solve_contour(&nodes, t, y, h)?;
    let integral: Complex64 = solved
        .iter()
        .map(|(pt, w)| f.eval(pt.z) * mean_integrand(t, y, h, pt.s) * w)
        .sum();
    let value = -integral / (2.0 * std::f64::consts::PI * Complex64::i());
    if value.im.abs() >= IMAG_DEFECT_TOL {
        return Err(Error::Numeric(format!(
            "contour too tight: imaginary defect {:.3e} in mean integral (f={f:?}, t={t}, y={y})",
            value.im
        )));
    }
    Ok(value.re)
}

/// Shrinks the rectangle toward the support for the inner contour of the
/// covariance double integral.
fn inner_margins(outer: (f64, f64, f64), support: (f64, f64), log_fn: bool) -> (f64, f64, f64) {
    let (lower, upper) = support;
    let width = (upper - lower).max(upper.abs()).max(1e-3);
    let x_l = if log_fn && lower > 0.0 {
        0.75 * lower
    } else {
        lower - (0.05f64).max(0.125 * width)
    };
    let x_r = upper + 0.125 * width;
    (x_l.max(outer.0 + 1e-6), x_r.min(outer.1 - 1e-6), outer.2 / 2.0)
}

/// `cov(X(f1, t1), X(f2, t2))` by double contour quadrature of the
/// `sigma^2` kernel over nested rectangles.
pub fn lss_cov_general(
    f1: SpectralFn,
    f2: SpectralFn,
    t1: f64,
    t2: f64,
    y: f64,
    h: &SpectralMeasure,
    class: SymmetryClass,
    cfg: &ContourConfig,
    support: (f64, f64),
) -> Result<f64> {
    let (x_l, x_r, v0) = cfg.margins;
    let log_fn = f1 == SpectralFn::Log || f2 == SpectralFn::Log;
    let (x_l2, x_r2, v02) = inner_margins((x_l, x_r, v0), support, log_fn);
    let encloses = x_r2 > support.1 && (x_l2 < support.0 || (support.0 == 0.0 && x_l2 <= 0.0));
    if !encloses {
        return Err(Error::Parameter(format!(
            "inner contour [{x_l2}, {x_r2}] does not enclose support {support:?}"
        )));
    }
    let outer = solve_contour(&rectangle_nodes(x_l, x_r, v0, cfg.nodes), t1, y, h)?;
    let inner = solve_contour(&rectangle_nodes(x_l2, x_r2, v02, cfg.nodes), t2, y, h)?;

    let rows = exec::map_indexed(outer.len(), |i| -> Result<Complex64> {
        let (p1, w1) = &outer[i];
        let f1v = f1.eval(p1.z) * w1;
        let mut acc = Complex64::new(0.0, 0.0);
        for (p2, w2) in &inner {
            let k = sigma_kernel_at(p1, &p2.conj(), t1, t2)?;
            acc += f1v * f2.eval(p2.z).conj() * k * w2.conj();
        }
        Ok(acc)
    });
    let mut total = Complex64::new(0.0, 0.0);
    for r in rows {
        total += r?;
    }
    let pref = match class {
        SymmetryClass::Real => 1.0 / (2.0 * std::f64::consts::PI.powi(2)),
        SymmetryClass::Complex => 1.0 / (4.0 * std::f64::consts::PI.powi(2)),
    };
    let value = total * pref;
    if value.im.abs() >= IMAG_DEFECT_TOL {
        return Err(Error::Numeric(format!(
            "contour too tight: imaginary defect {:.3e} in covariance integral",
            value.im
        )));
    }
    Ok(value.re)
}
