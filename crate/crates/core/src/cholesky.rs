//! Exact-law fBm sampling by dense Cholesky factorization of the node
//! covariance. Used as the oracle the coupled generator is checked against.

use alloc::vec;
use alloc::vec::Vec;

use crate::fbm::{fbm_covariance, FbmPath, Provenance};
use crate::math::sqrt;
use crate::rng::StreamRng;
use crate::{Error, HurstParam, Result, TimeGrid};

/// Largest grid the dense oracle accepts.
pub const MAX_ORACLE_STEPS: usize = 4096;

/// Lower-triangular factor of the covariance of `B_H(t_1), ..., B_H(t_N)`.
#[derive(Debug, Clone)]
pub struct CholeskyPlan {
    hurst: HurstParam,
    grid: TimeGrid,
    // packed rows: row j holds j + 1 entries
    lower: Vec<f64>,
}

fn row_start(j: usize) -> usize {
    j * (j + 1) / 2
}

/// In-place Cholesky factorization of a packed lower-triangular matrix.
fn factorize(n: usize, packed: &mut [f64]) -> Result<()> {
    for j in 0..n {
        let rj = row_start(j);
        for i in 0..=j {
            let ri = row_start(i);
            let mut acc = packed[rj + i];
            for k in 0..i {
                acc -= packed[rj + k] * packed[ri + k];
            }
            if i == j {
                if !(acc > 0.0 && acc.is_finite()) {
                    return Err(Error::NotPositiveDefinite { minor: j + 1 });
                }
                packed[rj + j] = sqrt(acc);
            } else {
                packed[rj + i] = acc / packed[ri + i];
            }
        }
    }
    Ok(())
}

impl CholeskyPlan {
    pub fn new(hurst: HurstParam, grid: &TimeGrid) -> Result<Self> {
        Self::from_covariance(hurst, grid, |s, t| fbm_covariance(hurst, s, t))
    }

    /// Factorizes an arbitrary covariance kernel on the grid nodes
    /// `t_1..t_N`.
    pub fn from_covariance<F: Fn(f64, f64) -> f64>(
        hurst: HurstParam,
        grid: &TimeGrid,
        covariance: F,
    ) -> Result<Self> {
        let n = grid.steps();
        if n > MAX_ORACLE_STEPS {
            return Err(Error::OracleTooLarge { steps: n, cap: MAX_ORACLE_STEPS });
        }
        let mut lower = vec![0.0; row_start(n)];
        for j in 0..n {
            let tj = grid.node(j + 1);
            let rj = row_start(j);
            for i in 0..=j {
                lower[rj + i] = covariance(grid.node(i + 1), tj);
            }
        }
        factorize(n, &mut lower)?;
        Ok(Self { hurst, grid: *grid, lower })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn sample(&self, seed: u64, stream_id: u64) -> FbmPath {
        let n = self.grid.steps();
        let mut z = vec![0.0; n];
        StreamRng::new(seed, stream_id).fill_standard_normal(&mut z);
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        for j in 0..n {
            let row = &self.lower[row_start(j)..row_start(j) + j + 1];
            values.push(row.iter().zip(&z).map(|(l, x)| l * x).sum());
        }
        FbmPath::new_unchecked(
            self.grid,
            self.hurst,
            values,
            Provenance::ExactCholesky { seed, stream_id },
        )
    }
}

/// One exact-law path. Factorizes on every call; use [`CholeskyPlan`] for
/// repeated sampling.
pub fn cholesky_path(h: HurstParam, grid: &TimeGrid, seed: u64, stream_id: u64) -> Result<FbmPath> {
    Ok(CholeskyPlan::new(h, grid)?.sample(seed, stream_id))
}
