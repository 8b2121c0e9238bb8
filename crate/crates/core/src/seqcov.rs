//! Streaming engine for the sequential sample covariance.
//!
//! Maintains the unnormalized accumulator `S = sum y_i y_i^T` together with
//! cached `tr(S)`, `tr(S^2)`, `tr(S^4)` and (once `S` is positive definite)
//! a Cholesky factor for `log det S`, at `O(p^2)` per observation. Snapshots
//! report the normalized quantities of `B_{n,t} = S/n`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Dimensions;

/// Dense recomputation interval bounding floating-point drift of the trace
/// caches on long streams.
const REFRESH_INTERVAL: usize = 256;

/// Which expensive caches to maintain. `tr1`/`tr2` are always on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tracking {
    pub tr4: bool,
    pub logdet: bool,
}

impl Tracking {
    pub fn full() -> Self {
        Self {
            tr4: true,
            logdet: true,
        }
    }
}

/// Streaming state for `B_{n,t}`; one instance per replication, single
/// writer. Snapshots are value copies and safe to hand across threads.
#[derive(Debug, Clone)]
pub struct SeqCovState {
    p: usize,
    count: usize,
    s: DMatrix<f64>,
    tr1: f64,
    tr2: f64,
    tr4: f64,
    chol: Option<DMatrix<f64>>,
    logdet_s: f64,
    track: Tracking,
    since_refresh: usize,
}

/// Normalized view of the state at `t = count/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub count: usize,
    pub t: f64,
    pub tr_b: f64,
    pub tr_b2: f64,
    /// Absent when fourth-power tracking is disabled.
    pub tr_b4: Option<f64>,
    /// `log |B|`; absent until `S` is positive definite (`count >= p`).
    pub log_det_b: Option<f64>,
}

impl SeqCovState {
    /// Fully tracked state (traces up to the fourth power and log-det).
    pub fn new(p: usize) -> Self {
        Self::with_tracking(p, Tracking::full())
    }

    /// State maintaining only the caches a statistic needs.
    pub fn with_tracking(p: usize, track: Tracking) -> Self {
        Self {
            p,
            count: 0,
            s: DMatrix::zeros(p, p),
            tr1: 0.0,
            tr2: 0.0,
            tr4: 0.0,
            chol: None,
            logdet_s: 0.0,
            track,
            since_refresh: 0,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Absorbs one observation: `S <- S + y y^T` with the trace caches
    /// updated from the rank-one expansion
    /// `tr((S + vv^T)^k) = tr(S^k) + ...` via three matrix-vector products.
    pub fn push(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.p {
            return Err(Error::Dimension(format!(
                "observation has length {}, state expects {}",
                y.len(),
                self.p
            )));
        }
        let v = DVector::from_column_slice(y);
        let q1 = v.dot(&v); // |v|^2
        let w1 = &self.s * &v;
        let a = v.dot(&w1); // v' S v
        self.tr1 += q1;
        self.tr2 += 2.0 * a + q1 * q1;
        if self.track.tr4 {
            let w2 = &self.s * &w1;
            let b = w1.dot(&w1); // v' S^2 v
            let c = w1.dot(&w2); // v' S^3 v
            self.tr4 += 4.0 * c + 4.0 * q1 * b + 2.0 * a * a + 4.0 * q1 * q1 * a + q1.powi(4);
        }
        self.s.ger(1.0, &v, &v, 1.0);
        self.count += 1;

        if self.track.logdet {
            self.update_cholesky(&v);
        }

        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            self.refresh_traces();
            self.since_refresh = 0;
        }
        Ok(())
    }

    fn update_cholesky(&mut self, v: &DVector<f64>) {
        match self.chol.take() {
            Some(mut l) => {
                if rank_one_update(&mut l, v) {
                    self.logdet_s = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
                    self.chol = Some(l);
                } else {
                    // degraded pivot: rebuild from S
                    self.try_full_factorization();
                }
            }
            None => {
                if self.count >= self.p {
                    self.try_full_factorization();
                }
            }
        }
    }

    fn try_full_factorization(&mut self) {
        match nalgebra::Cholesky::new(self.s.clone()) {
            Some(c) => {
                let l = c.unpack();
                self.logdet_s = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
                self.chol = Some(l);
            }
            None => {
                self.chol = None;
            }
        }
    }

    fn refresh_traces(&mut self) {
        self.tr1 = self.s.trace();
        self.tr2 = self.s.iter().map(|x| x * x).sum();
        if self.track.tr4 {
            let s2 = &self.s * &self.s;
            self.tr4 = s2.iter().map(|x| x * x).sum();
        }
    }

    /// Traces of `B = S/n` plus `log|B|` when available.
    pub fn snapshot(&self, dims: Dimensions) -> Result<Snapshot> {
        if self.count == 0 {
            return Err(Error::Degenerate("snapshot of empty state".into()));
        }
        let n = dims.n() as f64;
        Ok(Snapshot {
            count: self.count,
            t: self.count as f64 / n,
            tr_b: self.tr1 / n,
            tr_b2: self.tr2 / (n * n),
            tr_b4: self.track.tr4.then(|| self.tr4 / n.powi(4)),
            log_det_b: self
                .chol
                .as_ref()
                .map(|_| self.logdet_s - self.p as f64 * n.ln()),
        })
    }

    /// The accumulator itself (tests recompute snapshots densely from it).
    pub fn accumulator(&self) -> &DMatrix<f64> {
        &self.s
    }
}

/// Rank-one Cholesky update `L L^T + v v^T -> L' L'^T` by the standard
/// rotation-free sweep. Returns false when a pivot degrades below
/// `1e-12` times the running scale, signalling a rebuild.
fn rank_one_update(l: &mut DMatrix<f64>, v: &DVector<f64>) -> bool {
    let p = l.nrows();
    let mut w = v.clone();
    for j in 0..p {
        let ljj = l[(j, j)];
        let wj = w[j];
        let r = (ljj * ljj + wj * wj).sqrt();
        if r <= 1e-12 * (ljj.abs() + wj.abs() + 1.0) || ljj <= 0.0 {
            return false;
        }
        let c = r / ljj;
        let s = wj / ljj;
        l[(j, j)] = r;
        for i in (j + 1)..p {
            let lij = (l[(i, j)] + s * w[i]) / c;
            w[i] = c * w[i] - s * lij;
            l[(i, j)] = lij;
        }
    }
    true
}
