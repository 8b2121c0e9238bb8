//! Marčenko–Pastur machinery: companion Stieltjes transform fixed points
//! for a discrete population spectral distribution, their derivatives,
//! support intervals and the MP moment integrals used as centering terms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{floor_index, Dimensions};

/// Residual required of an accepted fixed-point solution.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Step tolerance of the damped iteration.
const STEP_TOL: f64 = 1e-12;
/// Iteration cap before the Newton fallback takes over.
const MAX_FIXED_POINT_ITERS: usize = 10_000;
const MAX_NEWTON_ITERS: usize = 200;

/// Finite discrete population spectral distribution: atoms `(lambda, w)`
/// with `lambda >= 0`, `w > 0` and weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

impl SpectralMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Parameter("spectral measure needs atoms".into()));
        }
        for &(l, w) in &atoms {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Parameter(format!("atom location {l} invalid")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Parameter(format!("atom weight {w} invalid")));
            }
        }
        let total: f64 = atoms.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { atoms })
    }

    /// The identity population: a single atom at 1.
    pub fn identity() -> Self {
        Self {
            atoms: vec![(1.0, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn lambda_min(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn lambda_max(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn is_identity(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].0 == 1.0
    }

    /// `integral lambda / (1 + lambda t s) dH(lambda)`.
    fn frac_integral(&self, t: f64, s: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .map(|&(l, w)| w * l / (1.0 + l * t * s))
            .sum()
    }

    /// `integral lambda^2 / (1 + lambda t s)^2 dH(lambda)`.
    fn frac_integral_sq(&self, t: f64, s: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .map(|&(l, w)| {
                let d = 1.0 + l * t * s;
                w * l * l / (d * d)
            })
            .sum()
    }

    /// `integral lambda^2 / (1 + lambda t s)^3 dH(lambda)`.
    pub(crate) fn frac_integral_cube(&self, t: f64, s: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .map(|&(l, w)| {
                let d = 1.0 + l * t * s;
                w * l * l / (d * d * d)
            })
            .sum()
    }
}

/// A solved companion Stieltjes transform value at one complex argument.
#[derive(Debug, Clone, Copy)]
pub struct StieltjesValue {
    pub z: Complex64,
    /// The companion transform `s_t(z)` of the limiting spectral law of the
    /// companion matrix, the unique solution of
    /// `z = -1/s + y * integral lambda/(1 + lambda t s) dH(lambda)` with
    /// `Im(s) Im(z) > 0`. The transform of the covariance-side law is the
    /// linear relation `-(1 - y_t)/z + y_t s` and needs no separate solver.
    pub s: Complex64,
    /// Absolute defect of the fixed-point equation at `s`.
    pub residual: f64,
}

fn equation_residual(z: Complex64, s: Complex64, t: f64, y: f64, h: &SpectralMeasure) -> Complex64 {
    z + 1.0 / s - y * h.frac_integral(t, s)
}

/// Solves the companion fixed-point equation at `z` (with `Im z != 0`).
///
/// Damped fixed-point iteration from `s0 = -1/z`, with a complex Newton
/// fallback on the cleared-denominator polynomial when the iteration stalls.
pub fn companion_stieltjes(
    z: Complex64,
    t: f64,
    y: f64,
    h: &SpectralMeasure,
) -> Result<StieltjesValue> {
    if z.im == 0.0 {
        return Err(Error::Domain(format!(
            "companion_stieltjes requires Im(z) != 0, got z={z}"
        )));
    }
    companion_stieltjes_from(z, t, y, h, -1.0 / z)
}

/// Same as [`companion_stieltjes`] but starting from a caller-supplied
/// iterate; contour engines warm-start from the neighbouring node.
pub fn companion_stieltjes_from(
    z: Complex64,
    t: f64,
    y: f64,
    h: &SpectralMeasure,
    start: Complex64,
) -> Result<StieltjesValue> {
    if !(t > 0.0) || !(y > 0.0) {
        return Err(Error::Parameter(format!(
            "companion_stieltjes requires t > 0 and y > 0, got t={t}, y={y}"
        )));
    }
    const MIX: f64 = 0.5;
    let mut s = start;
    let mut best = s;
    let mut best_res = f64::INFINITY;
    for _ in 0..MAX_FIXED_POINT_ITERS {
        let next = MIX * (-1.0 / (z - y * h.frac_integral(t, s))) + (1.0 - MIX) * s;
        let step = (next - s).norm();
        s = next;
        let res = equation_residual(z, s, t, y, h).norm();
        if res < best_res {
            best_res = res;
            best = s;
        }
        // stop once the iteration has essentially settled; Newton finishes
        // the root to machine precision below
        if step < STEP_TOL * s.norm().max(1e-30) || res < RESIDUAL_TOL {
            break;
        }
    }
    // Newton polish on the cleared form: near the spectrum edge the damped
    // map converges slowly and a residual of 1e-10 can still leave 1e-9 in
    // the root itself, so always sharpen.
    let mut s = best;
    for _ in 0..MAX_NEWTON_ITERS {
        let g = equation_residual(z, s, t, y, h);
        let gp = -1.0 / (s * s) + y * t * h.frac_integral_sq(t, s);
        if gp.norm() < 1e-300 {
            break;
        }
        let next = s - g / gp;
        let res = equation_residual(z, next, t, y, h).norm();
        if res < best_res {
            best_res = res;
            best = next;
        }
        if (next - s).norm() < 1e-16 * next.norm().max(1e-30) {
            s = next;
            break;
        }
        s = next;
    }
    if best_res < RESIDUAL_TOL && herglotz_ok(z, best) {
        return Ok(StieltjesValue {
            z,
            s: best,
            residual: best_res,
        });
    }
    Err(Error::Numeric(format!(
        "Stieltjes fixed point did not converge at z={z} (t={t}, y={y}); last residual {best_res:.3e}"
    )))
}

/// The defining branch condition: a Stieltjes transform of a measure on the
/// real line maps each half-plane into itself.
fn herglotz_ok(z: Complex64, s: Complex64) -> bool {
    if z.im == 0.0 {
        return true;
    }
    s.im * z.im > 0.0
}

/// `d s_t / dz` by implicit differentiation of the fixed-point equation.
pub fn companion_stieltjes_derivative(
    t: f64,
    y: f64,
    h: &SpectralMeasure,
    s: Complex64,
) -> Result<Complex64> {
    let denom = 1.0 / (s * s) - y * t * h.frac_integral_sq(t, s);
    if denom.norm() < 1e-14 {
        return Err(Error::Numeric(format!(
            "Stieltjes derivative singular at s={s}: implicit-function denominator {denom}"
        )));
    }
    Ok(1.0 / denom)
}

/// Interval containing the supports of the rescaled MP laws for all
/// `t in [t0, 1]`:
/// `[lambda_min 1(y_{t0} < 1) t0 (1 - sqrt(y_{t0}))^2,
///   lambda_max (1 + sqrt(y_{t0}))^2]`.
pub fn support_interval(t0: f64, y: f64, lambda_range: (f64, f64)) -> Result<(f64, f64)> {
    if !(t0 > 0.0 && t0 <= 1.0) {
        return Err(Error::Parameter(format!("t0={t0} must lie in (0, 1]")));
    }
    if !(y > 0.0) {
        return Err(Error::Parameter(format!("y={y} must be positive")));
    }
    let (lmin, lmax) = lambda_range;
    let yt0 = y / t0;
    let lower = if yt0 < 1.0 {
        lmin * t0 * (1.0 - yt0.sqrt()).powi(2)
    } else {
        0.0
    };
    let upper = lmax * (1.0 + yt0.sqrt()).powi(2);
    Ok((lower, upper))
}

/// The analytic functions shipped with the monitoring statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralFn {
    /// f(x) = x
    Identity,
    /// f(x) = x^2
    Square,
    /// f(x) = x^4
    Quartic,
    /// f(x) = log x
    Log,
}

impl SpectralFn {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            SpectralFn::Identity => z,
            SpectralFn::Square => z * z,
            SpectralFn::Quartic => {
                let z2 = z * z;
                z2 * z2
            }
            SpectralFn::Log => z.ln(),
        }
    }
}

/// Centering term `integral f d F~^{y_{floor(nt)}, H_n}` for `H = delta_1`:
/// the moment of the Marčenko–Pastur law with ratio `y_{floor(nt)}`, rescaled
/// by `floor(nt)/n` per power of `x` (and additively for the log).
pub fn mp_centering(f: SpectralFn, t: f64, dims: Dimensions) -> Result<f64> {
    let n = dims.n();
    let k = floor_index(t, n)?;
    if k == 0 {
        return Err(Error::Domain(format!("centering undefined at t={t}: floor(nt) = 0")));
    }
    let a = k as f64 / n as f64;
    let yk = dims.p() as f64 / k as f64;
    match f {
        SpectralFn::Identity => Ok(a),
        SpectralFn::Square => Ok(a * (a + dims.y())),
        SpectralFn::Quartic => {
            Ok(a.powi(4) * (1.0 + 6.0 * yk + 6.0 * yk * yk + yk.powi(3)))
        }
        SpectralFn::Log => {
            if yk >= 1.0 {
                return Err(Error::Domain(format!(
                    "log centering requires y_(floor(nt)) < 1, got {yk} at t={t}"
                )));
            }
            Ok(-1.0 - (1.0 - yk).ln() / yk + (a - dims.y()).ln())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Closed-form root of `z t s^2 + (z + t - y) s + 1 = 0`, the cleared
    /// form of the fixed-point equation for `H = delta_1`; the Herglotz
    /// branch is the root with `Im(s) Im(z) > 0`.
    pub(crate) fn quadratic_oracle(z: Complex64, t: f64, y: f64) -> Complex64 {
        let a = z * t;
        let b = z + t - y;
        let c = Complex64::new(1.0, 0.0);
        let disc = (b * b - 4.0 * a * c).sqrt();
        let r1 = (-b + disc) / (2.0 * a);
        let r2 = (-b - disc) / (2.0 * a);
        if r1.im * z.im > 0.0 {
            r1
        } else {
            r2
        }
    }

    #[test]
    fn solver_matches_quadratic_oracle_on_grid() {
        let h = SpectralMeasure::identity();
        for &(t, y) in &[(1.0, 0.5), (0.5, 0.25), (0.7, 1.5), (1.0, 2.0)] {
            for i in 0..20 {
                for j in 0..20 {
                    let z = Complex64::new(
                        0.1 + 3.9 * i as f64 / 19.0,
                        0.1 + 1.9 * j as f64 / 19.0,
                    );
                    let sol = companion_stieltjes(z, t, y, &h).unwrap();
                    let oracle = quadratic_oracle(z, t, y);
                    assert!(
                        (sol.s - oracle).norm() < 1e-10,
                        "mismatch at z={z}, t={t}, y={y}: {} vs {oracle}",
                        sol.s
                    );
                    assert!(sol.residual < RESIDUAL_TOL);
                    assert!(sol.s.im * z.im > 0.0, "Herglotz violated");
                }
            }
        }
    }

    #[test]
    fn solver_large_z_asymptotics() {
        let h = SpectralMeasure::identity();
        let z = Complex64::new(0.0, 1e6);
        let sol = companion_stieltjes(z, 0.8, 0.6, &h).unwrap();
        let expected = -1.0 / z;
        assert!(((sol.s - expected) / expected).norm() < 1e-4);
    }

    #[test]
    fn solver_conjugation_symmetry() {
        let h = SpectralMeasure::new(vec![(0.5, 0.3), (1.0, 0.4), (2.5, 0.3)]).unwrap();
        let z = Complex64::new(1.3, 0.7);
        let a = companion_stieltjes(z, 0.9, 0.8, &h).unwrap().s;
        let b = companion_stieltjes(z.conj(), 0.9, 0.8, &h).unwrap().s;
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn solver_general_measure_residual() {
        let h = SpectralMeasure::new(vec![(0.5, 0.5), (2.0, 0.5)]).unwrap();
        for i in 0..5 {
            let z = Complex64::new(0.5 + i as f64, 0.3);
            let sol = companion_stieltjes(z, 0.6, 0.4, &h).unwrap();
            assert!(sol.residual < RESIDUAL_TOL);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let h = SpectralMeasure::identity();
        let (t, y) = (1.0, 0.5);
        let z = Complex64::new(1.0, 1.0);
        let s = companion_stieltjes(z, t, y, &h).unwrap().s;
        let d = companion_stieltjes_derivative(t, y, &h, s).unwrap();
        let hstep = 1e-5;
        let sp = companion_stieltjes(z + hstep, t, y, &h).unwrap().s;
        let sm = companion_stieltjes(z - hstep, t, y, &h).unwrap().s;
        let fd = (sp - sm) / (2.0 * hstep);
        assert!((d - fd).norm() < 1e-6, "derivative {d} vs fd {fd}");
    }

    #[test]
    fn derivative_large_z() {
        let h = SpectralMeasure::identity();
        let z = Complex64::new(0.0, 1e5);
        let s = companion_stieltjes(z, 1.0, 0.5, &h).unwrap().s;
        let d = companion_stieltjes_derivative(1.0, 0.5, &h, s).unwrap();
        let expected = 1.0 / (z * z);
        assert!(((d - expected) / expected).norm() < 1e-3);
    }

    #[test]
    fn support_interval_examples() {
        assert_eq!(support_interval(1.0, 0.25, (1.0, 1.0)).unwrap(), (0.25, 2.25));
        let (lo, hi) = support_interval(0.5, 0.5, (1.0, 2.0)).unwrap();
        assert_eq!(lo, 0.0); // y_{t0} = 1 kills the lower bound
        assert_eq!(hi, 8.0);
    }

    #[test]
    fn centering_examples() {
        let d = Dimensions::new(200, 100).unwrap();
        assert_abs_diff_eq!(
            mp_centering(SpectralFn::Identity, 1.0, d).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            mp_centering(SpectralFn::Square, 0.5, d).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let d = Dimensions::new(100, 20).unwrap();
        assert_abs_diff_eq!(
            mp_centering(SpectralFn::Log, 1.0, d).unwrap(),
            -1.0 - 4.0 * 0.8f64.ln(),
            epsilon = 1e-12
        );
        assert!(mp_centering(SpectralFn::Log, 0.15, d).is_err());
    }

    #[test]
    fn centering_matches_density_quadrature() {
        // Composite-midpoint integration of the MP density over its support,
        // rescaled to F~: an oracle independent of the closed forms.
        let quad = |f: SpectralFn, a: f64, y: f64| -> f64 {
            let (lo, hi) = ((1.0 - y.sqrt()).powi(2), (1.0 + y.sqrt()).powi(2));
            let m = 100_000;
            let dx = (hi - lo) / m as f64;
            let mut acc = 0.0;
            for i in 0..m {
                let x = lo + (i as f64 + 0.5) * dx;
                let dens = ((hi - x) * (x - lo)).sqrt() / (2.0 * std::f64::consts::PI * y * x);
                let fx = match f {
                    SpectralFn::Identity => a * x,
                    SpectralFn::Square => (a * x).powi(2),
                    SpectralFn::Quartic => (a * x).powi(4),
                    SpectralFn::Log => (a * x).ln(),
                };
                acc += fx * dens * dx;
            }
            acc
        };
        let d = Dimensions::new(200, 80).unwrap();
        for &t in &[0.6, 1.0] {
            let k = floor_index(t, 200).unwrap();
            let a = k as f64 / 200.0;
            let yk = 80.0 / k as f64;
            for &f in &[SpectralFn::Identity, SpectralFn::Square] {
                let exact = mp_centering(f, t, d).unwrap();
                assert!(
                    (exact - quad(f, a, yk)).abs() < 1e-6,
                    "{f:?} at t={t}: {exact} vs {}",
                    quad(f, a, yk)
                );
            }
            let exact = mp_centering(SpectralFn::Log, t, d).unwrap();
            assert!((exact - quad(SpectralFn::Log, a, yk)).abs() < 1e-5);
        }
    }

    #[test]
    fn measure_validation() {
        assert!(SpectralMeasure::new(vec![]).is_err());
        assert!(SpectralMeasure::new(vec![(1.0, 0.5)]).is_err());
        assert!(SpectralMeasure::new(vec![(-1.0, 1.0)]).is_err());
        let m = SpectralMeasure::new(vec![(2.0, 0.5), (0.5, 0.5)]).unwrap();
        assert_eq!(m.lambda_min(), 0.5);
        assert_eq!(m.lambda_max(), 2.0);
    }
}
