//! The standard Brownian driver `B` on `[-L, T]`.
//!
//! On `[0, T]` the driver lives on the uniform [`TimeGrid`]. The history
//! `[-L, 0]` uses a graded mesh whose cells start at one grid step next to
//! the origin and grow geometrically into the past: the moving-average kernel
//! varies on the scale of the distance to the origin, and the truncation
//! lengths needed for `H` close to 1 are far too long for uniform cells.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::rng::StreamRng;
use crate::{Error, Result, TimeGrid};

/// Growth ratio of consecutive history cells.
pub const DEFAULT_MESH_RATIO: f64 = 1.05;

/// Cell edges of the history, stored as distances `v_k = -q_k` from the
/// origin: `0 = v_0 < v_1 < ... < v_K = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryMesh {
    edges: Vec<f64>,
}

impl HistoryMesh {
    pub fn empty() -> Self {
        Self { edges: vec![0.0] }
    }

    /// Cells of width `first_width * ratio^k`, as many as needed to reach
    /// `min_length`.
    pub fn graded(first_width: f64, ratio: f64, min_length: f64) -> Result<Self> {
        if !(first_width.is_finite() && first_width > 0.0) {
            return Err(Error::InvalidHistory(format!("first cell width {first_width}")));
        }
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(Error::InvalidHistory(format!("growth ratio {ratio} below 1")));
        }
        if !(min_length.is_finite() && min_length >= 0.0) {
            return Err(Error::InvalidHistory(format!(
                "history length must be a nonnegative real, got {min_length}"
            )));
        }
        let mut edges = vec![0.0];
        let mut width = first_width;
        let mut reach = 0.0;
        while reach < min_length {
            reach += width;
            edges.push(reach);
            width *= ratio;
            if edges.len() > 1 << 24 {
                return Err(Error::InvalidHistory(format!(
                    "history length {min_length} needs too many cells"
                )));
            }
        }
        Ok(Self { edges })
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn length(&self) -> f64 {
        *self.edges.last().expect("mesh has an origin edge")
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// `(near, far)` edge distances of cell `k`.
    pub fn cell(&self, k: usize) -> (f64, f64) {
        (self.edges[k], self.edges[k + 1])
    }
}

/// Increments of the Brownian driver.
///
/// `increments[i]` is `B(t_{i+1}) - B(t_i)` on the grid and `history[k]` is
/// the increment over history cell `k`, so each draw has variance equal to
/// its cell width.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverPath {
    grid: TimeGrid,
    mesh: Arc<HistoryMesh>,
    increments: Vec<f64>,
    history: Vec<f64>,
    seed: u64,
    stream_id: u64,
}

impl DriverPath {
    /// Assembles a driver from explicit increments.
    pub fn from_parts(
        grid: TimeGrid,
        mesh: Arc<HistoryMesh>,
        increments: Vec<f64>,
        history: Vec<f64>,
    ) -> Result<Self> {
        if increments.len() != grid.steps() {
            return Err(Error::GridMismatch(format!(
                "{} increments for {} steps",
                increments.len(),
                grid.steps()
            )));
        }
        if history.len() != mesh.cells() {
            return Err(Error::InvalidHistory(format!(
                "{} history increments for {} cells",
                history.len(),
                mesh.cells()
            )));
        }
        Ok(Self { grid, mesh, increments, history, seed: 0, stream_id: 0 })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn mesh(&self) -> &Arc<HistoryMesh> {
        &self.mesh
    }

    pub fn history_length(&self) -> f64 {
        self.mesh.length()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn increments_mut(&mut self) -> &mut [f64] {
        &mut self.increments
    }

    pub fn history_mut(&mut self) -> &mut [f64] {
        &mut self.history
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Total number of increments over `[-L, T]`.
    pub fn len(&self) -> usize {
        self.increments.len() + self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `B(t_i)` for `i = 0..=N`, with `B(0) = 0`.
    pub fn running_sum(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for &dx in &self.increments {
            acc += dx;
            out.push(acc);
        }
        out
    }

    /// The same Brownian path observed on a grid `factor` times coarser.
    /// Grid increments are summed in groups; the history is shared.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let increments = self.increments.chunks_exact(factor).map(|c| c.iter().sum()).collect();
        Ok(Self {
            grid,
            mesh: Arc::clone(&self.mesh),
            increments,
            history: self.history.clone(),
            seed: self.seed,
            stream_id: self.stream_id,
        })
    }
}

/// The history mesh used by [`sample_driver`] for a grid.
pub fn standard_mesh(grid: &TimeGrid, history_length: f64) -> Result<HistoryMesh> {
    if history_length == 0.0 {
        return Ok(HistoryMesh::empty());
    }
    HistoryMesh::graded(grid.step(), DEFAULT_MESH_RATIO, history_length)
}

/// Samples a driver over `[-L, T]` with the standard graded history mesh.
/// The mesh is extended until it covers at least `history_length`.
pub fn sample_driver(
    grid: &TimeGrid,
    history_length: f64,
    seed: u64,
    stream_id: u64,
) -> Result<DriverPath> {
    let mesh = Arc::new(standard_mesh(grid, history_length)?);
    Ok(sample_driver_on(grid, mesh, seed, stream_id))
}

/// Samples a driver on a prescribed mesh. Grid increments are drawn first,
/// then history cells from the origin outward, so a longer mesh with the
/// same first cells extends the same path.
pub fn sample_driver_on(
    grid: &TimeGrid,
    mesh: Arc<HistoryMesh>,
    seed: u64,
    stream_id: u64,
) -> DriverPath {
    let mut rng = StreamRng::new(seed, stream_id);
    let step_scale = sqrt(grid.step());
    let increments = (0..grid.steps()).map(|_| step_scale * rng.standard_normal()).collect();
    let history = (0..mesh.cells())
        .map(|k| {
            let (near, far) = mesh.cell(k);
            sqrt(far - near) * rng.standard_normal()
        })
        .collect();
    DriverPath { grid: *grid, mesh, increments, history, seed, stream_id }
}
