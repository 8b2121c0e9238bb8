//! Gaussian-process path sampling on a time grid and Monte Carlo
//! estimation of sup-statistic critical values.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec;
use crate::limits::LimitLaw;
use crate::model::TimeGrid;

/// Paths are generated in chunks of this many draws; chunk `c` uses RNG
/// stream `c`, so the concatenation is independent of thread scheduling.
const CHUNK: usize = 1024;

/// Jitter ladder applied to the Gram diagonal when the kernel factorization
/// fails; kernels of matching-increment processes are near-singular by
/// construction.
const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// A factorized limit law ready for path sampling.
pub struct GpSampler {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    grid: TimeGrid,
    /// Relative jitter that was needed to factorize the Gram matrix.
    jitter: f64,
    seed: u64,
}

/// A critical-value estimate with its Monte Carlo uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValue {
    pub c_alpha: f64,
    pub std_err: f64,
    pub alpha: f64,
    pub draws: usize,
    pub grid_len: usize,
}

impl GpSampler {
    pub fn new(law: &LimitLaw, grid: TimeGrid, seed: u64) -> Result<Self> {
        let m = grid.len();
        let mean = DVector::from_vec(law.mean_vector(&grid));
        let gram = law.gram(&grid);
        let max_diag = gram.diagonal().iter().fold(0.0f64, |a, &d| a.max(d));
        if max_diag == 0.0 {
            // degenerate law: all paths equal the mean
            return Ok(Self {
                mean,
                chol: DMatrix::zeros(m, m),
                grid,
                jitter: 0.0,
                seed,
            });
        }
        for &jit in &JITTER_LADDER {
            let mut g = gram.clone();
            for i in 0..m {
                g[(i, i)] += jit * max_diag;
            }
            if let Some(c) = nalgebra::Cholesky::new(g.clone()) {
                let chol = c.unpack();
                // the factor must reproduce the jittered Gram matrix
                let defect = (&chol * chol.transpose() - &g).abs().max();
                if defect > 1e-8 * max_diag {
                    continue;
                }
                return Ok(Self {
                    mean,
                    chol,
                    grid,
                    jitter: jit,
                    seed,
                });
            }
        }
        Err(Error::Numeric(
            "limit-law covariance is not positive semidefinite even with jitter".into(),
        ))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn chunk_paths(&self, chunk_idx: usize, count: usize) -> Vec<Vec<f64>> {
        let m = self.mean.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk_idx as u64);
        let mut z = DVector::zeros(m);
        let mut paths = Vec::with_capacity(count);
        for _ in 0..count {
            for i in 0..m {
                z[i] = rng.sample(StandardNormal);
            }
            let mut path = self.mean.clone();
            path.gemv(1.0, &self.chol, &z, 1.0);
            paths.push(path.as_slice().to_vec());
        }
        paths
    }

    /// Draws `count` paths; row `j` is `mean + L z_j`. Reproducible under
    /// the sampler's seed for any thread count.
    pub fn sample_paths(&self, count: usize) -> Result<DMatrix<f64>> {
        if count == 0 {
            return Err(Error::Parameter("path count must be >= 1".into()));
        }
        let m = self.mean.len();
        let chunks = count.div_ceil(CHUNK);
        let per_chunk = exec::map_indexed(chunks, |c| {
            let take = CHUNK.min(count - c * CHUNK);
            self.chunk_paths(c, take)
        });
        let mut out = DMatrix::zeros(count, m);
        let mut row = 0;
        for chunk in per_chunk {
            for path in chunk {
                for (i, v) in path.iter().enumerate() {
                    out[(row, i)] = *v;
                }
                row += 1;
            }
        }
        Ok(out)
    }

    /// Per-path grid maxima, generated chunkwise without materializing the
    /// full path matrix. Same RNG layout as [`Self::sample_paths`].
    pub fn sample_sup(&self, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::Parameter("path count must be >= 1".into()));
        }
        let chunks = count.div_ceil(CHUNK);
        let per_chunk = exec::map_indexed(chunks, |c| {
            let take = CHUNK.min(count - c * CHUNK);
            self.chunk_paths(c, take)
                .into_iter()
                .map(|path| path.into_iter().fold(f64::NEG_INFINITY, f64::max))
                .collect::<Vec<f64>>()
        });
        Ok(per_chunk.into_iter().flatten().collect())
    }

    /// Empirical `(1 - alpha)` quantile of the sup statistic, as the order
    /// statistic at index `ceil((1 - alpha) count)` (conservative), plus a
    /// standard error from the binomial variance of the empirical CDF.
    pub fn sup_quantile(&self, alpha: f64, count: usize) -> Result<CriticalValue> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("alpha={alpha} outside (0, 1)")));
        }
        if count < 1000 {
            return Err(Error::Parameter(format!(
                "critical values need at least 1000 draws, got {count}"
            )));
        }
        let mut sups = self.sample_sup(count)?;
        sups.sort_by(f64::total_cmp);
        let k = (((1.0 - alpha) * count as f64).ceil() as usize).clamp(1, count);
        let c_alpha = sups[k - 1];
        // CDF binomial band mapped through neighbouring order statistics
        let m = ((count as f64 * alpha * (1.0 - alpha)).sqrt().ceil() as usize).max(1);
        let hi = sups[(k - 1 + m).min(count - 1)];
        let lo = sups[k.saturating_sub(1 + m)];
        let std_err = (hi - lo) / 2.0;
        Ok(CriticalValue {
            c_alpha,
            std_err,
            alpha,
            draws: count,
            grid_len: self.grid.len(),
        })
    }
}
