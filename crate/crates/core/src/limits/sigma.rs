//! The covariance kernel `sigma^2_{t1,t2}(z1, z2)` of the limiting
//! Gaussian process, evaluated from the companion Stieltjes transforms and
//! their derivatives.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mp::{companion_stieltjes, companion_stieltjes_derivative, SpectralMeasure};

/// Solved transform data for one `(z, t)` pair.
#[derive(Debug, Clone, Copy)]
pub struct KernelPoint {
    pub z: Complex64,
    pub s: Complex64,
    pub ds: Complex64,
}

impl KernelPoint {
    pub fn solve(z: Complex64, t: f64, y: f64, h: &SpectralMeasure) -> Result<Self> {
        let sol = companion_stieltjes(z, t, y, h)?;
        let ds = companion_stieltjes_derivative(t, y, h, sol.s)?;
        Ok(Self { z, s: sol.s, ds })
    }

    pub fn conj(&self) -> Self {
        Self {
            z: self.z.conj(),
            s: self.s.conj(),
            ds: self.ds.conj(),
        }
    }
}

/// Evaluates `sigma^2_{t1,t2}(z1, z2)` given solved transforms at both
/// arguments, as the exact mixed derivative
///
/// `d^2/dz1 dz2 [ -log(1 - min(t1,t2) a(z1,z2)) ]`,
///
/// where `a = (s2 - s1 + (z1 - z2) s1 s2) / (t2 s2 - t1 s1)`. Errs when the
/// arguments collide (the caller must keep the two contours
/// non-overlapping).
pub fn sigma_kernel_at(p1: &KernelPoint, p2: &KernelPoint, t1: f64, t2: f64) -> Result<Complex64> {
    let (z1, s1, d1) = (p1.z, p1.s, p1.ds);
    let (z2, s2, d2) = (p2.z, p2.s, p2.ds);
    let m = t1.min(t2);
    let dz = z1 - z2;

    let nn = s2 - s1 + dz * s1 * s2;
    let dd = t2 * s2 - t1 * s1;
    if dd.norm() < 1e-14 {
        return Err(Error::Numeric(format!(
            "sigma kernel coincidence point: t1 s(z1) = t2 s(z2) at z1={z1}, z2={z2}, t1={t1}, t2={t2}"
        )));
    }
    let a = nn / dd;

    // partials of numerator and denominator of a
    let n1 = -d1 + s1 * s2 + dz * d1 * s2;
    let n2 = d2 - s1 * s2 + dz * s1 * d2;
    let n12 = s1 * d2 - d1 * s2 + dz * d1 * d2;
    let dd1 = -t1 * d1;
    let dd2 = t2 * d2;

    let a1 = (n1 - a * dd1) / dd;
    let a2 = (n2 - a * dd2) / dd;
    let a12 = (n12 - a1 * dd2 - a2 * dd1) / dd;

    let q = 1.0 - m * a;
    if q.norm() < 1e-14 {
        return Err(Error::Numeric(format!(
            "sigma kernel coincidence point: 1 - min(t1,t2) a = {q:.3e} at z1={z1}, z2={z2}"
        )));
    }
    Ok(m * (a12 * q + m * a1 * a2) / (q * q))
}

/// Convenience entry solving the transforms internally.
pub fn sigma_kernel(
    z1: Complex64,
    z2: Complex64,
    t1: f64,
    t2: f64,
    y: f64,
    h: &SpectralMeasure,
) -> Result<Complex64> {
    let p1 = KernelPoint::solve(z1, t1, y, h)?;
    let p2 = KernelPoint::solve(z2, t2, y, h)?;
    sigma_kernel_at(&p1, &p2, t1, t2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(z: Complex64, t: f64, y: f64) -> KernelPoint {
        KernelPoint::solve(z, t, y, &SpectralMeasure::identity()).unwrap()
    }

    #[test]
    fn equal_times_reduce_to_classical_kernel() {
        // For t1 = t2 = t the kernel collapses to
        // s'(z1) s'(z2) / (s(z1) - s(z2))^2 - 1/(z1 - z2)^2,
        // the non-sequential covariance kernel.
        for &(t, y) in &[(1.0, 0.4), (0.8, 0.4), (0.5, 0.15)] {
            let z1 = Complex64::new(1.1, 0.9);
            let z2 = Complex64::new(2.0, -0.7);
            let p1 = point(z1, t, y);
            let p2 = point(z2, t, y);
            let got = sigma_kernel_at(&p1, &p2, t, t).unwrap();
            let classical = p1.ds * p2.ds / ((p1.s - p2.s) * (p1.s - p2.s))
                - 1.0 / ((z1 - z2) * (z1 - z2));
            assert!((got - classical).norm() < 1e-10, "{got} vs {classical}");
        }
    }

    #[test]
    fn symmetric_in_arguments_at_equal_times() {
        let (t, y) = (1.0, 0.5);
        let z1 = Complex64::new(0.7, 1.2);
        let z2 = Complex64::new(2.4, -0.5);
        let a = sigma_kernel(z1, z2, t, t, y, &SpectralMeasure::identity()).unwrap();
        let b = sigma_kernel(z2, z1, t, t, y, &SpectralMeasure::identity()).unwrap();
        assert!((a - b).norm() < 1e-8);
    }

    #[test]
    fn conjugation_symmetry() {
        let h = SpectralMeasure::identity();
        let (t1, t2, y) = (1.0, 0.6, 0.3);
        let z1 = Complex64::new(1.4, 0.8);
        let z2 = Complex64::new(2.2, -0.6);
        let a = sigma_kernel(z1, z2, t1, t2, y, &h).unwrap();
        let b = sigma_kernel(z1.conj(), z2.conj(), t1, t2, y, &h).unwrap();
        assert!((a - b.conj()).norm() < 1e-10);
    }

    #[test]
    fn joint_swap_symmetry() {
        // cov symmetry: swapping both the arguments and the times must give
        // the same kernel value.
        let h = SpectralMeasure::identity();
        let (t1, t2, y) = (0.9, 0.5, 0.4);
        let z1 = Complex64::new(1.2, 1.0);
        let z2 = Complex64::new(2.1, -0.8);
        let a = sigma_kernel(z1, z2, t1, t2, y, &h).unwrap();
        let b = sigma_kernel(z2, z1, t2, t1, y, &h).unwrap();
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn matches_mixed_derivative_of_log_form() {
        // sigma^2 = d^2/dz1 dz2 of -log(1 - min(t1,t2) a(z1,z2)) with
        // a = (s2 - s1 + (z1-z2) s1 s2) / (t2 s2 - t1 s1); finite
        // differences of that expression give an independent oracle.
        let h = SpectralMeasure::identity();
        let (t1, t2, y) = (1.0, 0.65, 0.45);
        let f = |z1: Complex64, z2: Complex64| -> Complex64 {
            let s1 = crate::mp::companion_stieltjes(z1, t1, y, &h).unwrap().s;
            let s2 = crate::mp::companion_stieltjes(z2, t2, y, &h).unwrap().s;
            let a = (s2 - s1 + (z1 - z2) * s1 * s2) / (t2 * s2 - t1 * s1);
            -(1.0 - t1.min(t2) * a).ln()
        };
        let z1 = Complex64::new(1.3, 1.1);
        let z2 = Complex64::new(2.6, -0.9);
        let e = 1e-4;
        let fd = (f(z1 + e, z2 + e) - f(z1 + e, z2 - e) - f(z1 - e, z2 + e)
            + f(z1 - e, z2 - e))
            / (4.0 * e * e);
        let direct = sigma_kernel(z1, z2, t1, t2, y, &h).unwrap();
        assert!(
            (direct - fd).norm() < 1e-5,
            "kernel {direct} vs mixed difference {fd}"
        );
    }
}
