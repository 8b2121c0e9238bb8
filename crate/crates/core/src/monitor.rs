//! Centered, scaled test-statistic trajectories over the monitoring grid,
//! the sup-test decision rule, and the deterministic limits the statistic
//! approaches under a structural break.

use crate::datagen::{sphericity_limits, ChangePointScenario, CovKind, ObservationBatch};
use crate::error::{Error, Result};
use crate::model::{floor_index, Dimensions, TimeGrid};
use crate::seqcov::{SeqCovState, Tracking};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticId {
    /// John-ratio process `tr(B^2)/p / (tr(B)/p)^2`.
    U,
    /// Fourth-moment ratio `tr(B^4)/p / (tr(B^2)/p)^2`.
    U2,
    /// Log-determinant process (needs `p < n t0`).
    LogDet,
}

impl StatisticId {
    pub fn name(&self) -> &'static str {
        match self {
            StatisticId::U => "u",
            StatisticId::U2 => "u2",
            StatisticId::LogDet => "logdet",
        }
    }
}

/// A centered, scaled statistic path over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessTrajectory {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub statistic: StatisticId,
}

/// Outcome of a sup test against a critical value.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub statistic: StatisticId,
    pub sup_value: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub reject: bool,
    /// First grid time attaining the supremum. A diagnostic only: the
    /// monitoring scheme comes with no localization theory.
    pub argmax_time: f64,
    pub trajectory: ProcessTrajectory,
}

fn grid_indices(grid: &TimeGrid, dims: Dimensions) -> Result<Vec<usize>> {
    grid.points()
        .iter()
        .map(|&t| {
            let k = floor_index(t, dims.n())?;
            if k == 0 {
                Err(Error::Domain(format!("grid point {t} has floor(nt) = 0")))
            } else {
                Ok(k)
            }
        })
        .collect()
}

fn stream_values(
    batch: &ObservationBatch,
    dims: Dimensions,
    grid: &TimeGrid,
    track: Tracking,
    mut value_at: impl FnMut(&crate::seqcov::Snapshot, usize) -> Result<f64>,
) -> Result<Vec<f64>> {
    let p = dims.p();
    if batch.data.nrows() != p || batch.data.ncols() < dims.n() {
        return Err(Error::Dimension(format!(
            "batch is {}x{}, dims expect p={p}, n={}",
            batch.data.nrows(),
            batch.data.ncols(),
            dims.n()
        )));
    }
    let ks = grid_indices(grid, dims)?;
    let mut state = SeqCovState::with_tracking(p, track);
    let mut values = Vec::with_capacity(ks.len());
    let mut next = 0usize;
    for i in 0..dims.n() {
        state.push(batch.data.column(i).as_slice())?;
        while next < ks.len() && ks[next] == i + 1 {
            let snap = state.snapshot(dims)?;
            values.push(value_at(&snap, ks[next])?);
            next += 1;
        }
        if next == ks.len() {
            break;
        }
    }
    if next != ks.len() {
        return Err(Error::Dimension(
            "batch ended before covering the whole grid".into(),
        ));
    }
    Ok(values)
}

/// `p (U_{n,t} - 1 - y_(floor(nt)))` in one streaming pass.
pub fn u_trajectory(
    batch: &ObservationBatch,
    dims: Dimensions,
    grid: &TimeGrid,
) -> Result<ProcessTrajectory> {
    let p = dims.p() as f64;
    let values = stream_values(
        batch,
        dims,
        grid,
        Tracking {
            tr4: false,
            logdet: false,
        },
        |snap, k| {
            let tr_b = snap.tr_b / p;
            if tr_b <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "tr B_{{n,t}} = {tr_b} at k = {k}; statistic undefined"
                )));
            }
            let u = (snap.tr_b2 / p) / (tr_b * tr_b);
            Ok(p * (u - 1.0 - p / k as f64))
        },
    )?;
    Ok(ProcessTrajectory {
        grid: grid.clone(),
        values,
        statistic: StatisticId::U,
    })
}

/// Centering constant of the fourth-moment ratio at aspect ratio `y`.
pub fn u2_centering(y: f64) -> f64 {
    (1.0 + 6.0 * y + 6.0 * y * y + y.powi(3)) / (1.0 + y).powi(2)
}

/// `p (U^{(2)}_{n,t} - centering(y_(floor(nt))))` in one streaming pass.
pub fn u2_trajectory(
    batch: &ObservationBatch,
    dims: Dimensions,
    grid: &TimeGrid,
) -> Result<ProcessTrajectory> {
    let p = dims.p() as f64;
    let values = stream_values(
        batch,
        dims,
        grid,
        Tracking {
            tr4: true,
            logdet: false,
        },
        |snap, k| {
            let tr_b2 = snap.tr_b2 / p;
            if tr_b2 <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "tr B^2_{{n,t}} = {tr_b2} at k = {k}; statistic undefined"
                )));
            }
            let u2 = (snap.tr_b4.expect("tr4 tracked") / p) / (tr_b2 * tr_b2);
            Ok(p * (u2 - u2_centering(p / k as f64)))
        },
    )?;
    Ok(ProcessTrajectory {
        grid: grid.clone(),
        values,
        statistic: StatisticId::U2,
    })
}

/// The centered log-determinant process
/// `log|B_{n,t}| + p + floor(nt) log(1 - y_(floor(nt))) - p log(floor(nt)/n - y_n)`.
pub fn logdet_trajectory(
    batch: &ObservationBatch,
    dims: Dimensions,
    grid: &TimeGrid,
) -> Result<ProcessTrajectory> {
    let p = dims.p() as f64;
    let n = dims.n() as f64;
    if dims.y() >= grid.t0() {
        return Err(Error::Domain(format!(
            "log-det test requires p < n t0 (y_n = {} >= t0 = {})",
            dims.y(),
            grid.t0()
        )));
    }
    let values = stream_values(
        batch,
        dims,
        grid,
        Tracking {
            tr4: false,
            logdet: true,
        },
        |snap, k| {
            let log_b = snap.log_det_b.ok_or_else(|| {
                Error::Numeric(format!(
                    "log|B| unavailable at k = {k}: accumulator numerically singular"
                ))
            })?;
            let yk = p / k as f64;
            let a = k as f64 / n;
            Ok(log_b + p + k as f64 * (1.0 - yk).ln() - p * (a - dims.y()).ln())
        },
    )?;
    Ok(ProcessTrajectory {
        grid: grid.clone(),
        values,
        statistic: StatisticId::LogDet,
    })
}

pub fn trajectory(
    statistic: StatisticId,
    batch: &ObservationBatch,
    dims: Dimensions,
    grid: &TimeGrid,
) -> Result<ProcessTrajectory> {
    match statistic {
        StatisticId::U => u_trajectory(batch, dims, grid),
        StatisticId::U2 => u2_trajectory(batch, dims, grid),
        StatisticId::LogDet => logdet_trajectory(batch, dims, grid),
    }
}

/// Sup decision: reject when the trajectory maximum exceeds `c_alpha`.
/// The supremum over `[t0, 1]` is exact because the trajectory is constant
/// between grid points; ties resolve to the earliest time.
pub fn run_test(traj: ProcessTrajectory, c_alpha: f64, alpha: f64) -> Result<TestReport> {
    if traj.values.is_empty() {
        return Err(Error::Degenerate("empty trajectory".into()));
    }
    let mut best = 0usize;
    for (i, v) in traj.values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Degenerate(format!(
                "non-finite trajectory value at index {i}"
            )));
        }
        if *v > traj.values[best] {
            best = i;
        }
    }
    let sup_value = traj.values[best];
    Ok(TestReport {
        statistic: traj.statistic,
        sup_value,
        critical_value: c_alpha,
        alpha,
        reject: sup_value > c_alpha,
        argmax_time: traj.grid.points()[best],
        trajectory: traj,
    })
}

/// Deterministic limit of `U_{n,t}` past a structural break, split into the
/// sphericity-violation term and the scale-shift term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternativeLimit {
    pub limit: f64,
    pub delta1: f64,
    pub delta2: f64,
}

/// Limit of `U_{n,t}` for `t` past the break of a scenario whose pre-change
/// covariance is `sigma^2 I`, from the post-change trace limits `(g, h)`.
pub fn predict_alternative_limit(
    t: f64,
    scn: &ChangePointScenario,
    y: f64,
) -> Result<AlternativeLimit> {
    let sigma2 = match scn.pre.kind {
        CovKind::ScaledIdentity { sigma2 } => sigma2,
        CovKind::ScaledIdentityEps { eps } => 1.0 + eps,
        CovKind::DiagShift { delta } | CovKind::DiagShiftOffdiag { delta } if delta == 0.0 => 1.0,
        CovKind::ScaledTridiag { eps } if eps == 0.0 => 1.0,
        other => {
            return Err(Error::Domain(format!(
                "alternative limit assumes a spherical pre-change covariance, got {other:?}"
            )))
        }
    };
    let t_star = scn.t_star;
    if t <= t_star {
        return Err(Error::Domain(format!(
            "alternative limit needs t > t_star, got t={t}, t_star={t_star}"
        )));
    }
    let (g, h) = sphericity_limits(&scn.post)?;
    let dt = t - t_star;
    let den =
        (t_star * sigma2).powi(2) + (dt * g).powi(2) + 2.0 * t_star * sigma2 * dt * g;
    let y_t = y / t;
    let delta1 = dt * dt * (h - g * g) / den;
    let delta2 = y_t * t_star * dt * (sigma2 - g) * (sigma2 - g) / den;
    Ok(AlternativeLimit {
        limit: 1.0 + y_t + delta1 + delta2,
        delta1,
        delta2,
    })
}
