//! Monte Carlo experiment runner for the level/power study: simulated
//! rejection rates of the sup tests over a grid of deviation parameters,
//! with plot-ready CSV output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{draw_sample, ChangePointScenario, CovKind, CovarianceSpec};
use crate::error::{Error, Result};
use crate::exec;
use crate::gp::{CriticalValue, GpSampler};
use crate::limits::{law_u, law_u2, LimitLaw};
use crate::model::{Dimensions, TimeGrid};
use crate::monitor::{trajectory, StatisticId};

/// The four structured alternative families of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlternativeFamily {
    DiagShift,
    DiagShiftOffdiag,
    ScaledIdentity,
    ScaledTridiag,
}

impl AlternativeFamily {
    pub fn all() -> [AlternativeFamily; 4] {
        [
            AlternativeFamily::DiagShift,
            AlternativeFamily::DiagShiftOffdiag,
            AlternativeFamily::ScaledIdentity,
            AlternativeFamily::ScaledTridiag,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlternativeFamily::DiagShift => "diag_shift",
            AlternativeFamily::DiagShiftOffdiag => "diag_shift_offdiag",
            AlternativeFamily::ScaledIdentity => "scaled_identity",
            AlternativeFamily::ScaledTridiag => "scaled_tridiag",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "diag_shift" => Ok(AlternativeFamily::DiagShift),
            "diag_shift_offdiag" => Ok(AlternativeFamily::DiagShiftOffdiag),
            "scaled_identity" => Ok(AlternativeFamily::ScaledIdentity),
            "scaled_tridiag" => Ok(AlternativeFamily::ScaledTridiag),
            other => Err(Error::Parameter(format!(
                "unknown alternative family {other:?}"
            ))),
        }
    }

    pub fn spec(&self, delta: f64, p: usize) -> CovarianceSpec {
        let kind = match self {
            AlternativeFamily::DiagShift => CovKind::DiagShift { delta },
            AlternativeFamily::DiagShiftOffdiag => CovKind::DiagShiftOffdiag { delta },
            AlternativeFamily::ScaledIdentity => CovKind::ScaledIdentityEps { eps: delta },
            AlternativeFamily::ScaledTridiag => CovKind::ScaledTridiag { eps: delta },
        };
        CovarianceSpec::new(kind, p)
    }
}

/// Full experiment description; `delta_grid` must contain 0 (the null).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dims_list: Vec<Dimensions>,
    pub alternative: AlternativeFamily,
    pub delta_grid: Vec<f64>,
    pub t_star: f64,
    pub t0: f64,
    pub alpha: f64,
    pub replications: usize,
    pub draws_for_critval: usize,
    pub seed: u64,
    pub statistic: StatisticId,
}

impl ExperimentConfig {
    /// Desk-scale defaults; `full_scale` switches to the study's 2000
    /// replications.
    pub fn default_study(alternative: AlternativeFamily, seed: u64, full_scale: bool) -> Self {
        Self {
            dims_list: vec![
                Dimensions::new(200, 120).unwrap(),
                Dimensions::new(150, 300).unwrap(),
                Dimensions::new(200, 300).unwrap(),
            ],
            alternative,
            delta_grid: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            t_star: 0.6,
            t0: 0.2,
            alpha: 0.05,
            replications: if full_scale { 2000 } else { 500 },
            draws_for_critval: 100_000,
            seed,
            statistic: StatisticId::U,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Parameter("replications must be >= 1".into()));
        }
        if !self.delta_grid.contains(&0.0) {
            return Err(Error::Parameter(
                "delta grid must include 0 (the null case)".into(),
            ));
        }
        if self.dims_list.is_empty() {
            return Err(Error::Parameter("dims list must be nonempty".into()));
        }
        Ok(())
    }
}

/// One point of a power curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRow {
    pub n: usize,
    pub p: usize,
    pub delta: f64,
    pub rate: f64,
    pub std_err: f64,
}

/// Simulated rejection rates over the delta grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub rows: Vec<PowerRow>,
}

impl PowerCurve {
    /// CSV with header `n,p,delta,rate,stderr`, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,p,delta,rate,stderr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n, r.p, r.delta, r.rate, r.std_err
            ));
        }
        out
    }
}

/// Cached critical value together with the parameters that produced it.
#[derive(Debug, Serialize, Deserialize, PartialEq, Clone)]
struct CritvalRecord {
    law: String,
    n: usize,
    p: usize,
    t0: f64,
    alpha: f64,
    draws: usize,
    seed: u64,
    c_alpha: f64,
    std_err: f64,
}

fn critval_key(record: &CritvalRecord) -> String {
    // content-derived key: every parameter the value depends on
    format!(
        "{}_n{}_p{}_t0{}_a{}_d{}_s{}",
        record.law, record.n, record.p, record.t0, record.alpha, record.draws, record.seed
    )
}

fn law_for(statistic: StatisticId, dims: Dimensions, grid: &TimeGrid) -> Result<LimitLaw> {
    match statistic {
        StatisticId::U => Ok(law_u(dims, grid.clone())),
        StatisticId::U2 => Ok(law_u2(dims, grid.clone())),
        StatisticId::LogDet => crate::limits::law_logdet(
            dims,
            grid.clone(),
            crate::model::SymmetryClass::Real,
        ),
    }
}

/// Critical value for one `(statistic, dims, t0)`; cached on disk when a
/// cache directory is given. The estimate is independent of the deviation
/// parameter, so one value serves a whole curve.
pub fn critical_value(
    statistic: StatisticId,
    dims: Dimensions,
    t0: f64,
    alpha: f64,
    draws: usize,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<CriticalValue> {
    let grid = TimeGrid::canonical(dims.n(), t0)?;
    let mut record = CritvalRecord {
        law: statistic.name().to_string(),
        n: dims.n(),
        p: dims.p(),
        t0,
        alpha,
        draws,
        seed,
        c_alpha: 0.0,
        std_err: 0.0,
    };
    let cache_path: Option<PathBuf> =
        cache_dir.map(|d| d.join(format!("critval_{}.json", critval_key(&record))));
    if let Some(path) = &cache_path {
        if let Ok(text) = fs::read_to_string(path) {
            if let Ok(cached) = serde_json::from_str::<CritvalRecord>(&text) {
                let mut expect = record.clone();
                expect.c_alpha = cached.c_alpha;
                expect.std_err = cached.std_err;
                if cached == expect {
                    return Ok(CriticalValue {
                        c_alpha: cached.c_alpha,
                        std_err: cached.std_err,
                        alpha,
                        draws,
                        grid_len: grid.len(),
                    });
                }
            }
        }
    }
    let law = law_for(statistic, dims, &grid)?;
    let sampler = GpSampler::new(&law, grid, seed)?;
    let cv = sampler.sup_quantile(alpha, draws)?;
    if let Some(path) = &cache_path {
        record.c_alpha = cv.c_alpha;
        record.std_err = cv.std_err;
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serde_json::to_string_pretty(&record).unwrap())?;
    }
    Ok(cv)
}

/// Runs the experiment: for every `(n, p)` and every delta, the rejection
/// fraction of the sup test over independent replications. Deterministic
/// under the config seed for any thread count.
pub fn run_experiment(cfg: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<PowerCurve> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &dims in &cfg.dims_list {
        let cv = critical_value(
            cfg.statistic,
            dims,
            cfg.t0,
            cfg.alpha,
            cfg.draws_for_critval,
            cfg.seed,
            cache_dir,
        )?;
        let grid = TimeGrid::canonical(dims.n(), cfg.t0)?;
        for (di, &delta) in cfg.delta_grid.iter().enumerate() {
            let pre = CovarianceSpec::identity(dims.p());
            let post = cfg.alternative.spec(delta, dims.p());
            let t_star = if delta == 0.0 { 1.0 } else { cfg.t_star };
            let scn = ChangePointScenario::new(pre, post, t_star)?;
            let outcomes = exec::map_indexed(cfg.replications, |rep| -> Result<bool> {
                let rep_seed = exec::derive_seed(&[
                    cfg.seed,
                    dims.n() as u64,
                    dims.p() as u64,
                    di as u64,
                    rep as u64,
                ]);
                let batch = draw_sample(&scn, dims, rep_seed)?;
                let traj = trajectory(cfg.statistic, &batch, dims, &grid)?;
                Ok(traj.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    > cv.c_alpha)
            });
            let mut rejections = 0usize;
            for o in outcomes {
                if o? {
                    rejections += 1;
                }
            }
            let rate = rejections as f64 / cfg.replications as f64;
            rows.push(PowerRow {
                n: dims.n(),
                p: dims.p(),
                delta,
                rate,
                std_err: (rate * (1.0 - rate) / cfg.replications as f64).sqrt(),
            });
        }
    }
    Ok(PowerCurve { rows })
}

/// Emits one CSV per `(dims, alternative)` into `out_dir`; returns the
/// written paths in a fixed order.
pub fn figures(
    alternatives: &[AlternativeFamily],
    seed: u64,
    full_scale: bool,
    statistic: StatisticId,
    out_dir: &Path,
    cache_dir: Option<&Path>,
    overrides: Option<&ExperimentOverrides>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for &alt in alternatives {
        let mut cfg = ExperimentConfig::default_study(alt, seed, full_scale);
        cfg.statistic = statistic;
        if let Some(ov) = overrides {
            ov.apply(&mut cfg);
        }
        for &dims in &cfg.dims_list.clone() {
            let mut sub = cfg.clone();
            sub.dims_list = vec![dims];
            let curve = run_experiment(&sub, cache_dir)?;
            let path = out_dir.join(format!(
                "fig_{}_{}_n{}_p{}.csv",
                statistic.name(),
                alt.name(),
                dims.n(),
                dims.p()
            ));
            fs::write(&path, curve.to_csv())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Optional overrides for the default study (smaller runs, custom grids).
#[derive(Debug, Clone, Default)]
pub struct ExperimentOverrides {
    pub dims_list: Option<Vec<Dimensions>>,
    pub delta_grid: Option<Vec<f64>>,
    pub replications: Option<usize>,
    pub draws_for_critval: Option<usize>,
    pub t_star: Option<f64>,
    pub t0: Option<f64>,
    pub alpha: Option<f64>,
}

impl ExperimentOverrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(d) = &self.dims_list {
            cfg.dims_list = d.clone();
        }
        if let Some(g) = &self.delta_grid {
            cfg.delta_grid = g.clone();
        }
        if let Some(r) = self.replications {
            cfg.replications = r;
        }
        if let Some(d) = self.draws_for_critval {
            cfg.draws_for_critval = d;
        }
        if let Some(t) = self.t_star {
            cfg.t_star = t;
        }
        if let Some(t) = self.t0 {
            cfg.t0 = t;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critval_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let dims = Dimensions::new(60, 30).unwrap();
        let a = critical_value(StatisticId::U, dims, 0.2, 0.05, 2000, 7, Some(dir.path()))
            .unwrap();
        // second call must hit the cache and return the identical value
        let b = critical_value(StatisticId::U, dims, 0.2, 0.05, 2000, 7, Some(dir.path()))
            .unwrap();
        assert_eq!(a.c_alpha, b.c_alpha);
        assert_eq!(a.std_err, b.std_err);
        let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
        // different parameters get their own entry
        let _ = critical_value(StatisticId::U, dims, 0.2, 0.05, 3000, 7, Some(dir.path()))
            .unwrap();
        let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 2);
    }

    #[test]
    fn experiment_is_seed_deterministic() {
        let cfg = ExperimentConfig {
            dims_list: vec![Dimensions::new(60, 30).unwrap()],
            alternative: AlternativeFamily::DiagShift,
            delta_grid: vec![0.0, 1.0],
            t_star: 0.6,
            t0: 0.2,
            alpha: 0.05,
            replications: 40,
            draws_for_critval: 2000,
            seed: 11,
            statistic: StatisticId::U,
        };
        let a = run_experiment(&cfg, None).unwrap();
        let b = run_experiment(&cfg, None).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for r in &a.rows {
            assert!((0.0..=1.0).contains(&r.rate));
        }
    }

    #[test]
    fn delta_grid_must_contain_null() {
        let mut cfg = ExperimentConfig::default_study(AlternativeFamily::DiagShift, 1, false);
        cfg.delta_grid = vec![0.5, 1.0];
        assert!(run_experiment(&cfg, None).is_err());
    }
}
