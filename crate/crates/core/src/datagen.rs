//! Population covariance scenarios (the null and the four structured
//! alternatives) and Gaussian observation streams `y_i = Sigma_i^{1/2} x_i`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{floor_index, Dimensions};

/// Structured population covariance families. The diagonal-shift variants
/// split the coordinates at `p/2` and require an even dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovKind {
    /// `sigma^2 I`; `sigma^2 = 1` is the null hypothesis.
    ScaledIdentity { sigma2: f64 },
    /// `I + diag(0, ..., 0, delta, ..., delta)` with `p/2` zeros.
    DiagShift { delta: f64 },
    /// Diagonal shift plus the sub/superdiagonal couplings `delta` at
    /// `(j, j-1)` for `p/2 < j <= p`.
    DiagShiftOffdiag { delta: f64 },
    /// `(1 + eps) I`.
    ScaledIdentityEps { eps: f64 },
    /// `(1 + eps) I` plus sub/superdiagonal entries `eps` everywhere.
    ScaledTridiag { eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    pub kind: CovKind,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn new(kind: CovKind, p: usize) -> Self {
        Self { kind, p }
    }

    pub fn identity(p: usize) -> Self {
        Self::new(CovKind::ScaledIdentity { sigma2: 1.0 }, p)
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Parameter("covariance dimension must be >= 1".into()));
        }
        match self.kind {
            CovKind::DiagShift { .. } | CovKind::DiagShiftOffdiag { .. } => {
                if self.p % 2 != 0 {
                    return Err(Error::Parameter(format!(
                        "diagonal-shift alternatives split at p/2 and need even p, got {}",
                        self.p
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn is_diagonal(&self) -> bool {
        matches!(
            self.kind,
            CovKind::ScaledIdentity { .. } | CovKind::DiagShift { .. } | CovKind::ScaledIdentityEps { .. }
        )
    }
}

/// Builds the covariance matrix of a spec, rejecting indefinite results.
pub fn build_covariance(spec: &CovarianceSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let p = spec.p;
    let mut m = DMatrix::<f64>::identity(p, p);
    match spec.kind {
        CovKind::ScaledIdentity { sigma2 } => m *= sigma2,
        CovKind::ScaledIdentityEps { eps } => m *= 1.0 + eps,
        CovKind::DiagShift { delta } => {
            for j in p / 2..p {
                m[(j, j)] = 1.0 + delta;
            }
        }
        CovKind::DiagShiftOffdiag { delta } => {
            for j in p / 2..p {
                m[(j, j)] = 1.0 + delta;
            }
            // couplings at (j, j-1) for p/2 < j <= p in 1-based indexing,
            // including the block-boundary entry (p/2 + 1, p/2)
            for j in p / 2..p {
                m[(j, j - 1)] = delta;
                m[(j - 1, j)] = delta;
            }
        }
        CovKind::ScaledTridiag { eps } => {
            for j in 0..p {
                m[(j, j)] = 1.0 + eps;
                if j > 0 {
                    m[(j, j - 1)] = eps;
                    m[(j - 1, j)] = eps;
                }
            }
        }
    }
    let eigmin = if spec.is_diagonal() {
        m.diagonal().iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        m.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    if eigmin <= 0.0 {
        return Err(Error::Parameter(format!(
            "covariance spec {:?} is not positive definite (eigmin = {eigmin:.3e})",
            spec.kind
        )));
    }
    Ok(m)
}

/// Exact `(g, h) = (tr(Sigma)/p, tr(Sigma^2)/p)` from the structured form.
pub fn sphericity_limits(spec: &CovarianceSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let p = spec.p as f64;
    let (g, h) = match spec.kind {
        CovKind::ScaledIdentity { sigma2 } => (sigma2, sigma2 * sigma2),
        CovKind::ScaledIdentityEps { eps } => ((1.0 + eps), (1.0 + eps).powi(2)),
        CovKind::DiagShift { delta } => {
            let g = 1.0 + delta / 2.0;
            let h = (1.0 + (1.0 + delta).powi(2)) / 2.0;
            (g, h)
        }
        CovKind::DiagShiftOffdiag { delta } => {
            let g = 1.0 + delta / 2.0;
            let h = (1.0 + (1.0 + delta).powi(2)) / 2.0 + delta * delta;
            (g, h)
        }
        CovKind::ScaledTridiag { eps } => {
            let g = 1.0 + eps;
            let h = (1.0 + eps).powi(2) + 2.0 * eps * eps * (p - 1.0) / p;
            (g, h)
        }
    };
    debug_assert!(h >= g * g - 1e-12, "Cauchy-Schwarz violated: g={g}, h={h}");
    Ok((g, h))
}

/// Symmetric positive-definite square root. Diagonal matrices take the
/// elementwise root; everything else goes through the symmetric
/// eigendecomposition.
pub fn matrix_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    if m.ncols() != p {
        return Err(Error::Dimension(format!(
            "matrix_sqrt needs a square matrix, got {}x{}",
            p,
            m.ncols()
        )));
    }
    let scale = m.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1.0);
    let mut diagonal = true;
    for i in 0..p {
        for j in 0..p {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Domain("matrix_sqrt input not symmetric".into()));
            }
            if i != j && m[(i, j)] != 0.0 {
                diagonal = false;
            }
        }
    }
    if diagonal {
        let mut r = DMatrix::zeros(p, p);
        for i in 0..p {
            let d = m[(i, i)];
            if d <= 0.0 {
                return Err(Error::Domain(format!(
                    "matrix_sqrt input has non-positive diagonal entry {d}"
                )));
            }
            r[(i, i)] = d.sqrt();
        }
        return Ok(r);
    }
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Domain(
            "matrix_sqrt input is not positive definite".into(),
        ));
    }
    let sqrt_vals = DVector::from_iterator(p, eig.eigenvalues.iter().map(|l| l.sqrt()));
    let r = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    // symmetrize away round-off
    Ok((&r + r.transpose()) / 2.0)
}

/// A covariance change at `floor(n t_star)`: observations up to the break
/// use `pre`, the rest use `post`. `t_star = 1` means no change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangePointScenario {
    pub pre: CovarianceSpec,
    pub post: CovarianceSpec,
    pub t_star: f64,
}

impl ChangePointScenario {
    pub fn new(pre: CovarianceSpec, post: CovarianceSpec, t_star: f64) -> Result<Self> {
        if pre.p != post.p {
            return Err(Error::Dimension(format!(
                "pre/post dimensions differ: {} vs {}",
                pre.p, post.p
            )));
        }
        if !(t_star > 0.0 && t_star <= 1.0) {
            return Err(Error::Parameter(format!(
                "change fraction t_star={t_star} must lie in (0, 1]"
            )));
        }
        Ok(Self { pre, post, t_star })
    }

    pub fn null(p: usize) -> Self {
        let id = CovarianceSpec::identity(p);
        Self {
            pre: id,
            post: id,
            t_star: 1.0,
        }
    }
}

/// An observation batch: column `i` of `data` is `y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    pub data: DMatrix<f64>,
    /// Seed record; absent for externally loaded data.
    pub seed: Option<u64>,
}

impl ObservationBatch {
    pub fn dims(&self) -> Result<Dimensions> {
        Dimensions::new(self.data.ncols(), self.data.nrows())
    }
}

/// Draws `n` independent observations from a change-point scenario.
///
/// Each observation gets its own counter-based stream (ChaCha keyed by the
/// seed, stream = observation index), so draws are reproducible and
/// independent of how replications are scheduled across threads.
pub fn draw_sample(scn: &ChangePointScenario, dims: Dimensions, seed: u64) -> Result<ObservationBatch> {
    let (n, p) = (dims.n(), dims.p());
    if p != scn.pre.p {
        return Err(Error::Dimension(format!(
            "scenario dimension {} does not match p = {p}",
            scn.pre.p
        )));
    }
    let k_star = floor_index(scn.t_star, n)?;
    let pre_root = ScaledRoot::new(&scn.pre)?;
    let post_root = if k_star < n {
        Some(ScaledRoot::new(&scn.post)?)
    } else {
        None
    };
    let mut data = DMatrix::zeros(p, n);
    let mut x = DVector::zeros(p);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for j in 0..p {
            x[j] = rng.sample(StandardNormal);
        }
        let root = if i < k_star {
            &pre_root
        } else {
            post_root.as_ref().unwrap()
        };
        root.apply(&x, &mut data.column_mut(i));
    }
    Ok(ObservationBatch {
        data,
        seed: Some(seed),
    })
}

/// Square root of a structured covariance with a fast diagonal path.
enum ScaledRoot {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl ScaledRoot {
    fn new(spec: &CovarianceSpec) -> Result<Self> {
        let m = build_covariance(spec)?;
        if spec.is_diagonal() {
            Ok(ScaledRoot::Diagonal(DVector::from_iterator(
                spec.p,
                m.diagonal().iter().map(|d| d.sqrt()),
            )))
        } else {
            Ok(ScaledRoot::Dense(matrix_sqrt(&m)?))
        }
    }

    fn apply(&self, x: &DVector<f64>, out: &mut nalgebra::DVectorViewMut<f64>) {
        match self {
            ScaledRoot::Diagonal(d) => {
                for i in 0..x.len() {
                    out[i] = d[i] * x[i];
                }
            }
            ScaledRoot::Dense(r) => {
                out.gemv(1.0, r, x, 0.0);
            }
        }
    }
}

/// Writes a batch as CSV: header `x1,...,xp`, one row per observation,
/// full-precision decimal floats, LF line endings.
pub fn write_csv<W: Write>(batch: &ObservationBatch, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let p = batch.data.nrows();
    w.write_record((1..=p).map(|j| format!("x{j}")))?;
    for i in 0..batch.data.ncols() {
        let row: Vec<String> = (0..p).map(|j| format!("{}", batch.data[(j, i)])).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a batch from the CSV format written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<ObservationBatch> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let p = rdr.headers()?.len();
    if p == 0 {
        return Err(Error::Degenerate("observation CSV has no columns".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != p {
            return Err(Error::Dimension(format!(
                "CSV row {} has {} fields, header has {p}",
                rows.len() + 2,
                record.len()
            )));
        }
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    Error::Degenerate(format!("CSV value {s:?} is not a decimal float"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("CSV contains non-finite values".into()));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Degenerate("observation CSV has no rows".into()));
    }
    let n = rows.len();
    let data = DMatrix::from_fn(p, n, |j, i| rows[i][j]);
    Ok(ObservationBatch { data, seed: None })
}
