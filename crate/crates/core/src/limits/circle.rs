//! Unit-circle evaluation of the limiting mean and covariance for the
//! identity population (`T = I`).
//!
//! The change of variables `z = t (1 + h r xi + h r^{-1} xi^{-1} + h^2)`
//! turns the contour integrals into trapezoid sums over `|xi| = 1`; the
//! `r -> 1` limit is recovered by Richardson extrapolation in `r - 1`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::limits::sigma::{sigma_kernel_at, KernelPoint};
use crate::limits::ContourConfig;
use crate::model::SymmetryClass;
use crate::mp::SpectralFn;

const EXTRAPOLATION_TOL: f64 = 1e-3;

fn unit_roots(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64))
        .collect()
}

/// Contour image `z(xi) = t (1 + h r xi + h r^{-1} xi^{-1} + h^2)`.
fn z_of_xi(t: f64, h: f64, r: f64, xi: Complex64) -> Complex64 {
    t * (1.0 + h * r * xi + h / r / xi + h * h)
}

/// One trapezoid evaluation of the mean integral at radius `r`.
fn mean_at_radius(f: SpectralFn, t: f64, h: f64, r: f64, m: usize) -> Complex64 {
    let rinv2 = 1.0 / (r * r);
    let sum: Complex64 = unit_roots(m)
        .into_iter()
        .map(|xi| {
            let kernel = xi / (xi * xi - rinv2) - 1.0 / xi;
            f.eval(z_of_xi(t, h, r, xi)) * kernel * xi
        })
        .sum();
    sum / m as f64
}

/// `E[X(f, t)]` for `T = I` via the unit-circle representation,
/// extrapolated toward `r = 1` from `r` and `1 + (r-1)/2`.
pub fn circle_mean(f: SpectralFn, t: f64, y: f64, cfg: &ContourConfig) -> Result<f64> {
    if !(t > 0.0 && y > 0.0) {
        return Err(Error::Parameter(format!(
            "circle_mean requires t > 0 and y > 0, got t={t}, y={y}"
        )));
    }
    let h = (y / t).sqrt();
    if f == SpectralFn::Log && h * cfg.r1 >= 1.0 {
        return Err(Error::Domain(format!(
            "log route requires h_t r < 1 (y < t with margin), got h={h}, r={}",
            cfg.r1
        )));
    }
    let d = cfg.r1 - 1.0;
    let i_big = mean_at_radius(f, t, h, 1.0 + d, cfg.nodes);
    let i_small = mean_at_radius(f, t, h, 1.0 + d / 2.0, cfg.nodes);
    // linear Richardson step toward r = 1
    let extrap = 2.0 * i_small - i_big;
    if (i_big - i_small).norm() >= EXTRAPOLATION_TOL {
        return Err(Error::Numeric(format!(
            "circle mean extrapolation disagreement {:.3e} (f={f:?}, t={t}, y={y})",
            (i_big - i_small).norm()
        )));
    }
    Ok(extrap.re)
}

/// The rational kernel of the double unit-circle covariance formula, with
/// `h1 = sqrt(y/t1)`, `h2 = sqrt(y/t2)` and radii `r2 > r1 > 1`; valid for
/// `t2 <= t1`.
///
/// Evaluated as `sigma^2_{t1,t2}(z1(xi1), z2(xi2)) J1(xi1) J2(xi2)` — the
/// proposition's change of variables applied to the covariance kernel, with
/// the on-curve closed form `s_t(z(xi)) = -1/(t (1 + h r xi))` of the
/// companion transform. The pole at `xi1 xi2 = h2 r2 / (h1 r1)` stays off
/// the torus precisely because `t2 <= t1` and `r2 > r1`.
#[allow(clippy::too_many_arguments)]
fn g_ratio(
    x1: Complex64,
    x2: Complex64,
    h1: f64,
    h2: f64,
    r1: f64,
    r2: f64,
    t1: f64,
    t2: f64,
) -> Result<Complex64> {
    let z1 = t1 * (1.0 + h1 * r1 * x1 + h1 / (r1 * x1) + h1 * h1);
    let z2 = t2 * (1.0 + h2 * r2 * x2 + h2 / (r2 * x2) + h2 * h2);
    let s1 = -1.0 / (t1 * (1.0 + h1 * r1 * x1));
    let s2 = -1.0 / (t2 * (1.0 + h2 * r2 * x2));
    // derivative of the transform along its defining equation, in the
    // identity-population closed form
    let d1 = stieltjes_derivative_identity(t1, h1 * h1 * t1, s1)?;
    let d2 = stieltjes_derivative_identity(t2, h2 * h2 * t2, s2)?;
    let p1 = KernelPoint { z: z1, s: s1, ds: d1 };
    let p2 = KernelPoint { z: z2, s: s2, ds: d2 };
    let sigma = sigma_kernel_at(&p1, &p2, t1, t2).map_err(|e| {
        Error::Numeric(format!(
            "node collision in circle covariance kernel at xi1={x1}, xi2={x2} ({e}); perturb the node count"
        ))
    })?;
    let j1 = t1 * h1 * (r1 - 1.0 / (r1 * x1 * x1));
    let j2 = t2 * h2 * (r2 - x2 * x2 / r2);
    Ok(sigma * j1 * j2)
}

/// `ds/dz = 1 / (1/s^2 - y t / (1 + t s)^2)` for `H = delta_1`.
fn stieltjes_derivative_identity(t: f64, y: f64, s: Complex64) -> Result<Complex64> {
    let u = 1.0 + t * s;
    let denom = 1.0 / (s * s) - y * t / (u * u);
    if denom.norm() < 1e-14 {
        return Err(Error::Numeric(
            "circle kernel derivative singular".into(),
        ));
    }
    Ok(1.0 / denom)
}

/// One trapezoid evaluation of the covariance double integral at radii
/// `(r1, r2)` for a batch of function pairs sharing the kernel.
fn cov_at_radii(
    pairs: &[(SpectralFn, SpectralFn)],
    t1: f64,
    t2: f64,
    y: f64,
    r1: f64,
    r2: f64,
    m: usize,
) -> Result<Vec<Complex64>> {
    let h1 = (y / t1).sqrt();
    let h2 = (y / t2).sqrt();
    let roots = unit_roots(m);

    // distinct second functions; each row accumulates against all of them
    let mut f2s: Vec<SpectralFn> = Vec::new();
    for &(_, f2) in pairs {
        if !f2s.contains(&f2) {
            f2s.push(f2);
        }
    }
    let f2_vals: Vec<Vec<Complex64>> = f2s
        .iter()
        .map(|f2| {
            roots
                .iter()
                .map(|&x2| {
                    let w2 = t2 * (1.0 + h2 * r2 / x2 + h2 * x2 / r2 + h2 * h2);
                    f2.eval(w2).conj() * x2
                })
                .collect()
        })
        .collect();

    let rows = exec::map_indexed(m, |a| -> Result<Vec<Complex64>> {
        let x1 = roots[a];
        let mut acc = vec![Complex64::new(0.0, 0.0); f2s.len()];
        for (b, &x2) in roots.iter().enumerate() {
            let k = g_ratio(x1, x2, h1, h2, r1, r2, t1, t2)? * x1;
            for (fi, vals) in f2_vals.iter().enumerate() {
                acc[fi] += k * vals[b];
            }
        }
        Ok(acc)
    });

    // fixed-order reduction over xi1 nodes weighted by f1
    let mut sums = vec![Complex64::new(0.0, 0.0); pairs.len()];
    for (a, row) in rows.into_iter().enumerate() {
        let row = row?;
        let x1 = roots[a];
        let z1 = z_of_xi(t1, h1, r1, x1);
        for (pi, &(f1, f2)) in pairs.iter().enumerate() {
            let fi = f2s.iter().position(|&g| g == f2).unwrap();
            sums[pi] += f1.eval(z1) * row[fi];
        }
    }
    let scale = -2.0 / (m as f64 * m as f64);
    Ok(sums.into_iter().map(|s| s * scale).collect())
}

/// `cov(X(f1, t1), X(f2, t2))` for `T = I`, for a batch of function pairs.
///
/// Canonicalizes to `t2 <= t1` (the orientation in which the kernel is
/// stated), evaluates at three radius ladders `(1 + d, 1 + 2d)` with `d`
/// halving, and extrapolates the `O(d)` bias away by Neville's scheme.
pub fn circle_cov_batch(
    pairs: &[(SpectralFn, SpectralFn)],
    t1: f64,
    t2: f64,
    y: f64,
    class: SymmetryClass,
    cfg: &ContourConfig,
) -> Result<Vec<f64>> {
    if !(cfg.r2 > cfg.r1 && cfg.r1 > 1.0) {
        return Err(Error::Parameter(format!(
            "circle covariance requires 1 < r1 < r2, got r1={}, r2={}",
            cfg.r1, cfg.r2
        )));
    }
    // swap both functions and times when needed; the covariance is symmetric
    // under the joint exchange
    let (pairs_c, tt1, tt2): (Vec<(SpectralFn, SpectralFn)>, f64, f64) = if t2 <= t1 {
        (pairs.to_vec(), t1, t2)
    } else {
        (pairs.iter().map(|&(a, b)| (b, a)).collect(), t2, t1)
    };
    let d1 = cfg.r1 - 1.0;
    let d2 = cfg.r2 - 1.0;
    let scales = [1.0, 0.5, 0.25];
    let mut evals = Vec::with_capacity(scales.len());
    for &sc in &scales {
        evals.push(cov_at_radii(
            &pairs_c,
            tt1,
            tt2,
            y,
            1.0 + d1 * sc,
            1.0 + d2 * sc,
            cfg.nodes,
        )?);
    }
    let class_factor = match class {
        SymmetryClass::Real => 1.0,
        SymmetryClass::Complex => 0.5,
    };
    let mut out = Vec::with_capacity(pairs.len());
    for pi in 0..pairs.len() {
        let xs: Vec<f64> = scales.iter().map(|&sc| d1 * sc).collect();
        let ys: Vec<Complex64> = evals.iter().map(|e| e[pi]).collect();
        let value = neville_at_zero(&xs, &ys) * class_factor;
        if value.im.abs() > 1e-4 {
            return Err(Error::Numeric(format!(
                "circle covariance imaginary defect {:.3e}",
                value.im
            )));
        }
        out.push(value.re);
    }
    Ok(out)
}

/// Single-pair entry point.
pub fn circle_cov(
    f1: SpectralFn,
    f2: SpectralFn,
    t1: f64,
    t2: f64,
    y: f64,
    class: SymmetryClass,
    cfg: &ContourConfig,
) -> Result<f64> {
    Ok(circle_cov_batch(&[(f1, f2)], t1, t2, y, class, cfg)?[0])
}

/// Polynomial extrapolation to 0 through `(x_i, y_i)`.
fn neville_at_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let n = xs.len();
    let mut table = ys.to_vec();
    for level in 1..n {
        for i in 0..n - level {
            let num = -xs[i + level] * table[i] + xs[i] * table[i + 1];
            table[i] = num / (xs[i] - xs[i + level]);
        }
    }
    table[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ContourConfig {
        ContourConfig::circle_default()
    }

    #[test]
    fn mean_identity_function_vanishes() {
        for &(t, y) in &[(1.0, 0.25), (0.5, 0.4), (0.75, 1.5)] {
            let v = circle_mean(SpectralFn::Identity, t, y, &cfg()).unwrap();
            assert!(v.abs() < 1e-8, "t={t}, y={y}: {v}");
        }
    }

    #[test]
    fn mean_square_is_ty() {
        for &(t, y) in &[(1.0, 0.25), (0.5, 0.4), (1.0, 1.0)] {
            let v = circle_mean(SpectralFn::Square, t, y, &cfg()).unwrap();
            assert!((v - t * y).abs() < 1e-8, "t={t}, y={y}: {v}");
        }
    }

    #[test]
    fn mean_log_closed_form() {
        let v = circle_mean(SpectralFn::Log, 1.0, 0.5, &cfg()).unwrap();
        assert!((v - 0.5 * (0.5f64).ln()).abs() < 1e-8, "{v}");
    }

    #[test]
    fn neville_recovers_polynomial() {
        let xs = [0.08, 0.04, 0.02];
        let f = |x: f64| Complex64::new(3.0 - 2.0 * x + 5.0 * x * x, 0.0);
        let ys: Vec<Complex64> = xs.iter().map(|&x| f(x)).collect();
        let v = neville_at_zero(&xs, &ys);
        assert!((v.re - 3.0).abs() < 1e-12);
    }
}

#[doc(hidden)]
#[allow(clippy::too_many_arguments)]
pub fn debug_g_ratio(
    x1: Complex64,
    x2: Complex64,
    h1: f64,
    h2: f64,
    r1: f64,
    r2: f64,
    t1: f64,
    t2: f64,
) -> Complex64 {
    g_ratio(x1, x2, h1, h2, r1, r2, t1, t2).unwrap()
}

#[doc(hidden)]
#[allow(clippy::too_many_arguments)]
pub fn debug_cov_at_radii(
    f1: SpectralFn,
    f2: SpectralFn,
    t1: f64,
    t2: f64,
    y: f64,
    r1: f64,
    r2: f64,
    m: usize,
) -> (f64, f64) {
    let v = cov_at_radii(&[(f1, f2)], t1, t2, y, r1, r2, m).unwrap()[0];
    (v.re, v.im)
}
