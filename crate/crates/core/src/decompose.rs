//! Splitting an fBm increment at a node `s`:
//!
//! ```text
//! B_H(t) - B_H(s) = W(t) + R(t),
//! W(t) = c_H ∫_s^t (t-q)^{H-1/2} dB(q),
//! R(t) = c_H ∫_{-L}^s [(t-q)^{H-1/2} - (s-q)^{H-1/2}] dB(q).
//! ```
//!
//! `W` (the innovation) is driven only by increments after `s`; `R` (the
//! memory) only by increments up to `s`, and is differentiable in `t` with
//! derivative `c_H (H-1/2) ∫_{-L}^s (t-q)^{H-3/2} dB(q)`.
//!
//! All three use the same cell averages as [`crate::fbm::KernelPlan`], so
//! `W + R` reproduces the increments of the coupled path up to rounding.

use alloc::vec::Vec;

use crate::driver::{DriverPath, HistoryMesh};
use crate::fbm::ch_coefficient;
use crate::math::{pow, pow_diff, CompensatedSum};
use crate::{Error, HurstParam, Result, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    hurst: HurstParam,
    split: usize,
    innovation: Vec<f64>,
    memory: Vec<f64>,
    memory_rate: Vec<f64>,
}

impl Decomposition {
    pub fn split(&self) -> usize {
        self.split
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    /// `W(t_j)` for `j = split+1..=N`.
    pub fn innovation(&self) -> &[f64] {
        &self.innovation
    }

    /// `R(t_j)` for `j = split+1..=N`.
    pub fn memory(&self) -> &[f64] {
        &self.memory
    }

    /// `DR(t_j)` for `j = split+1..=N`.
    pub fn memory_rate(&self) -> &[f64] {
        &self.memory_rate
    }
}

/// Edge distances `(v_near, v_far)`, `v = s - q`, of the driver cells up
/// to the split: grid cells from the split backwards, then the history.
pub(crate) fn past_cell_edges<'a>(
    grid: &'a TimeGrid,
    mesh: &'a HistoryMesh,
    split: usize,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let s = grid.node(split);
    let on_grid = (0..split).rev().map(move |i| (s - grid.node(i + 1), s - grid.node(i)));
    let history = (0..mesh.cells()).map(move |k| {
        let (v0, v1) = mesh.cell(k);
        (s + v0, s + v1)
    });
    on_grid.chain(history)
}

/// Driver increments in the order of [`past_cell_edges`].
pub(crate) fn past_increments(driver: &DriverPath, split: usize) -> impl Iterator<Item = f64> + '_ {
    driver.increments()[..split].iter().rev().chain(driver.history()).copied()
}

/// Cell average of `(τ+v)^a - v^a` over `[v0, v1]`, times `c`.
pub(crate) fn memory_weight(c: f64, a: f64, tau: f64, v0: f64, v1: f64) -> f64 {
    let p = a + 1.0;
    c * (pow_diff(v1, tau, p) - pow_diff(v0, tau, p)) / (p * (v1 - v0))
}

/// Cell average of `a (τ+v)^{a-1}` over `[v0, v1]`, times `c`.
pub(crate) fn memory_rate_weight(c: f64, a: f64, tau: f64, v0: f64, v1: f64) -> f64 {
    let width = v1 - v0;
    c * pow_diff(tau + v0, width, a) / width
}

fn past_cells(driver: &DriverPath, split: usize) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    past_cell_edges(driver.grid(), driver.mesh(), split)
        .zip(past_increments(driver, split))
        .map(|((v0, v1), x)| (v0, v1, x))
}

fn check_split(driver: &DriverPath, split: usize) -> Result<()> {
    let steps = driver.grid().steps();
    if split >= steps {
        return Err(Error::EmptyWindow { split, steps });
    }
    Ok(())
}

fn check_node(driver: &DriverPath, split: usize, node: usize) -> Result<()> {
    check_split(driver, split)?;
    if node <= split || node > driver.grid().steps() {
        return Err(Error::NodeNotAfterSplit { node, split });
    }
    Ok(())
}

fn memory_at(driver: &DriverPath, h: HurstParam, split: usize, tau: f64) -> f64 {
    let (a, c) = (h.exponent(), ch_coefficient(h));
    past_cells(driver, split)
        .map(|(v0, v1, x)| memory_weight(c, a, tau, v0, v1) * x)
        .collect::<CompensatedSum>()
        .value()
}

fn memory_rate_at(driver: &DriverPath, h: HurstParam, split: usize, tau: f64) -> f64 {
    let (a, c) = (h.exponent(), ch_coefficient(h));
    past_cells(driver, split)
        .map(|(v0, v1, x)| memory_rate_weight(c, a, tau, v0, v1) * x)
        .collect::<CompensatedSum>()
        .value()
}

/// `R(t)` at grid node `node > split`.
pub fn memory_part(driver: &DriverPath, h: HurstParam, split: usize, node: usize) -> Result<f64> {
    check_node(driver, split, node)?;
    if h.is_brownian() {
        return Ok(0.0);
    }
    let g = driver.grid();
    Ok(memory_at(driver, h, split, g.node(node) - g.node(split)))
}

/// `DR(t)` at grid node `node > split`.
pub fn dr_process(driver: &DriverPath, h: HurstParam, split: usize, node: usize) -> Result<f64> {
    check_node(driver, split, node)?;
    let g = driver.grid();
    dr_process_at(driver, h, split, g.node(node))
}

/// `DR(t)` at an arbitrary time `t` after the split node.
pub fn dr_process_at(driver: &DriverPath, h: HurstParam, split: usize, t: f64) -> Result<f64> {
    check_split(driver, split)?;
    let tau = t - driver.grid().node(split);
    if !(tau > 0.0) {
        return Err(Error::NodeNotAfterSplit { node: split, split });
    }
    if h.is_brownian() {
        return Ok(0.0);
    }
    Ok(memory_rate_at(driver, h, split, tau))
}

pub fn decompose(driver: &DriverPath, h: HurstParam, split: usize) -> Result<Decomposition> {
    check_split(driver, split)?;
    let grid = driver.grid();
    let n = grid.steps();
    let s = grid.node(split);
    let nodes = split + 1..=n;

    if h.is_brownian() {
        let b = driver.running_sum();
        return Ok(Decomposition {
            hurst: h,
            split,
            innovation: nodes.clone().map(|j| b[j] - b[split]).collect(),
            memory: nodes.clone().map(|_| 0.0).collect(),
            memory_rate: nodes.map(|_| 0.0).collect(),
        });
    }

    let a = h.exponent();
    let p = a + 1.0;
    let c = ch_coefficient(h);
    let scale = c * pow(grid.step(), a) / p;
    let lag: Vec<f64> = (0..n - split).map(|k| scale * pow_diff(k as f64, 1.0, p)).collect();
    let xi = driver.increments();

    let innovation = nodes
        .clone()
        .map(|j| (split..j).map(|i| lag[j - 1 - i] * xi[i]).collect::<CompensatedSum>().value())
        .collect();
    let memory = nodes.clone().map(|j| memory_at(driver, h, split, grid.node(j) - s)).collect();
    let memory_rate = nodes.map(|j| memory_rate_at(driver, h, split, grid.node(j) - s)).collect();
    Ok(Decomposition { hurst: h, split, innovation, memory, memory_rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::sample_driver;
    use crate::fbm::{history_length, mvn_path};
    use crate::TimeGrid;

    fn setup(h: f64, n: usize, stream: u64) -> (DriverPath, HurstParam) {
        let hp = HurstParam::new(h).unwrap();
        let g = TimeGrid::new(1.0, n).unwrap();
        let l = history_length(HurstParam::new(0.75).unwrap(), 1.0, 1e-4).unwrap();
        (sample_driver(&g, l, 77, stream).unwrap(), hp)
    }

    #[test]
    fn brownian_split_is_trivial() {
        let (d, h) = setup(0.5, 32, 0);
        let dec = decompose(&d, h, 10).unwrap();
        let b = d.running_sum();
        for (k, j) in (11..=32).enumerate() {
            assert_eq!(dec.innovation()[k], b[j] - b[10]);
            assert_eq!(dec.memory()[k], 0.0);
            assert_eq!(dec.memory_rate()[k], 0.0);
        }
        assert_eq!(dr_process(&d, h, 3, 7).unwrap(), 0.0);
    }

    #[test]
    fn reconstructs_coupled_increments() {
        for h in [0.6, 0.75, 0.9] {
            let (d, hp) = setup(h, 128, 1);
            let path = mvn_path(&d, hp);
            let split = 40;
            let dec = decompose(&d, hp, split).unwrap();
            let step = d.grid().step();
            let tol = 10.0 * step.sqrt() * step.powf(h - 0.5);
            let mut worst = 0.0f64;
            for (k, j) in (split + 1..=128).enumerate() {
                let target = path.values()[j] - path.values()[split];
                let got = dec.innovation()[k] + dec.memory()[k];
                worst = worst.max((got - target).abs());
            }
            assert!(worst < tol, "H={h}: {worst} vs {tol}");
            assert!(worst < 1e-10, "H={h}: shared quadrature should agree to rounding, {worst}");
        }
    }

    #[test]
    fn parts_vanish_as_t_approaches_s() {
        let (d, hp) = setup(0.75, 4096, 2);
        let dec = decompose(&d, hp, 2048).unwrap();
        assert!(dec.innovation()[0].abs() < 0.2);
        assert!(dec.memory()[0].abs() < 0.01, "{}", dec.memory()[0]);
    }

    #[test]
    fn parts_depend_only_on_their_side_of_the_split() {
        let (d, hp) = setup(0.75, 64, 3);
        let split = 20;
        let full = decompose(&d, hp, split).unwrap();

        let mut past_zeroed = d.clone();
        past_zeroed.increments_mut()[..split].fill(0.0);
        past_zeroed.history_mut().fill(0.0);
        let a = decompose(&past_zeroed, hp, split).unwrap();
        assert_eq!(a.innovation(), full.innovation());
        assert!(a.memory().iter().all(|&r| r == 0.0));

        let mut future_zeroed = d.clone();
        future_zeroed.increments_mut()[split..].fill(0.0);
        let b = decompose(&future_zeroed, hp, split).unwrap();
        assert_eq!(b.memory(), full.memory());
        assert_eq!(b.memory_rate(), full.memory_rate());
        assert!(b.innovation().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn rejects_degenerate_windows() {
        let (d, hp) = setup(0.75, 16, 0);
        assert_eq!(decompose(&d, hp, 16), Err(Error::EmptyWindow { split: 16, steps: 16 }));
        assert!(dr_process(&d, hp, 5, 5).is_err());
        assert!(dr_process(&d, hp, 5, 4).is_err());
        assert!(memory_part(&d, hp, 5, 17).is_err());
    }

    #[test]
    fn memory_part_matches_decomposition() {
        let (d, hp) = setup(0.8, 32, 4);
        let dec = decompose(&d, hp, 8).unwrap();
        assert_eq!(memory_part(&d, hp, 8, 20).unwrap(), dec.memory()[20 - 9]);
        assert_eq!(dr_process(&d, hp, 8, 20).unwrap(), dec.memory_rate()[20 - 9]);
    }
}
