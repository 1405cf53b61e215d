//! Left-point Riemann sums against sampled paths and the fractional
//! operator
//!
//! ```text
//! G_H(τ, g) = c_H (H-1/2) ∫_τ^T (t-τ)^{H-3/2} g(t) dt
//! ```
//!
//! which turns a deterministic integrand into its weight against the
//! Brownian driver.

use alloc::format;
use alloc::vec::Vec;

use alloc::sync::Arc;

use crate::decompose::{memory_rate_weight, memory_weight, past_cell_edges, past_increments};
use crate::driver::{DriverPath, HistoryMesh};
use crate::fbm::{ch_coefficient, Convolver, DirectConvolver, FbmPath, KernelPlan};
use crate::math::{pow, pow_diff, sqrt, two_diff, two_prod, CompensatedSum};
use crate::{Error, HurstParam, Result, TimeGrid};

/// Integrand values at the left endpoints `t_0..t_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandSample {
    grid: TimeGrid,
    values: Vec<f64>,
    deterministic: bool,
}

impl IntegrandSample {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.steps() {
            return Err(Error::InvalidIntegrand(format!(
                "{} values for {} steps",
                values.len(),
                grid.steps()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidIntegrand(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values, deterministic: false })
    }

    /// A non-random integrand, as required by
    /// [`representation_check`].
    pub fn deterministic(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        let mut g = Self::new(grid, values)?;
        g.deterministic = true;
        Ok(g)
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: TimeGrid, f: F) -> Result<Self> {
        Self::deterministic(grid, (0..grid.steps()).map(|i| f(grid.node(i))).collect())
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        Self::from_fn(grid, |_| value)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    RiemannLeft,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub steps: usize,
    pub method: Method,
}

/// `Σ_i γ_i (x_{i+1} - x_i)`. Increments and products are split into
/// exact pairs before the compensated accumulation, so the sum telescopes
/// against [`quadratic_variation_of`] to near working precision.
pub fn riemann_sum(gamma: &[f64], path: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (&g, w) in gamma.iter().zip(path.windows(2)) {
        let (d, dl) = two_diff(w[1], w[0]);
        let (p, pl) = two_prod(g, d);
        acc.add(p);
        acc.add(pl + g * dl);
    }
    acc.value()
}

/// `Σ_i γ_i Δx_i + Σ_i Δx_i^2` in a single accumulation. Adding the two
/// separately rounded sums loses about one ulp of the larger one, which
/// dominates when the result is small next to either sum.
pub fn riemann_sum_plus_quadratic_variation(gamma: &[f64], path: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (&g, w) in gamma.iter().zip(path.windows(2)) {
        let (d, dl) = two_diff(w[1], w[0]);
        let (p, pl) = two_prod(g, d);
        let (q, ql) = two_prod(d, d);
        acc.add(p);
        acc.add(q);
        acc.add(pl + ql + (g + 2.0 * d) * dl);
    }
    acc.value()
}

pub fn riemann_integral(gamma: &IntegrandSample, path: &FbmPath) -> Result<IntegralEstimate> {
    if gamma.grid() != path.grid() {
        return Err(Error::GridMismatch(format!(
            "integrand on {} steps, path on {}",
            gamma.grid().steps(),
            path.grid().steps()
        )));
    }
    Ok(IntegralEstimate {
        value: riemann_sum(gamma.values(), path.values()),
        steps: path.grid().steps(),
        method: Method::RiemannLeft,
    })
}

/// `Σ_i (x_{i+1} - x_i)^2`.
pub fn quadratic_variation_of(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for w in values.windows(2) {
        let (d, dl) = two_diff(w[1], w[0]);
        let (p, pl) = two_prod(d, d);
        acc.add(p);
        acc.add(pl + 2.0 * d * dl);
    }
    acc.value()
}

pub fn quadratic_variation(path: &FbmPath) -> f64 {
    quadratic_variation_of(path.values())
}

/// `G_H(t_tau, g)` for a window starting at node `start`.
///
/// `g` is interpolated linearly between its left-endpoint samples (the last
/// cell extrapolates the previous slope) and the singular kernel is
/// integrated exactly against each linear piece.
pub fn g_operator(h: HurstParam, g: &IntegrandSample, start: usize, tau: usize) -> Result<f64> {
    let n = g.grid().steps();
    if tau < start || tau > n {
        return Err(Error::InvalidIntegrand(format!(
            "node {tau} outside window [{start}, {n}]"
        )));
    }
    if tau == n {
        return Ok(0.0);
    }
    let v = g.values();
    if h.is_brownian() {
        return Ok(v[tau]);
    }
    let grid = g.grid();
    let step = grid.step();
    let a = h.exponent();
    let c = ch_coefficient(h);
    let slope = |i: usize| -> f64 {
        if n == 1 {
            0.0
        } else if i + 1 < n {
            (v[i + 1] - v[i]) / step
        } else {
            (v[i] - v[i - 1]) / step
        }
    };
    let mut acc = CompensatedSum::new();
    for i in tau..n {
        // u = t - t_tau over [lo, lo + step]
        let lo = (i - tau) as f64 * step;
        let level = pow_diff(lo, step, a);
        // ∫ a u^{a-1} (u - lo) du = a/(a+1) [u^{a+1}] - lo [u^a]
        let linear = a / (a + 1.0) * pow_diff(lo, step, a + 1.0) - lo * level;
        acc.add(v[i] * level + slope(i) * linear);
    }
    Ok(c * acc.value())
}

/// `G_H(t_tau, g)` for every node of the window `[start, N)`.
pub fn g_operator_values(h: HurstParam, g: &IntegrandSample, start: usize) -> Result<Vec<f64>> {
    (start..g.grid().steps()).map(|tau| g_operator(h, g, start, tau)).collect()
}

/// Left-endpoint rectangle norm over the window `[start, N)`.
pub fn l2_norm(values: &[f64], step: f64) -> f64 {
    sqrt(values.iter().map(|x| x * x).collect::<CompensatedSum>().value() * step)
}

/// `‖g - G_H g‖` in the grid `L2(t_start, T)` norm.
pub fn g_operator_l2_distance(h: HurstParam, g: &IntegrandSample, start: usize) -> Result<f64> {
    let gh = g_operator_values(h, g, start)?;
    let diff: Vec<f64> = g.values()[start..].iter().zip(&gh).map(|(x, y)| x - y).collect();
    Ok(l2_norm(&diff, g.grid().step()))
}

/// Both sides of the representation, for a deterministic integrand on
/// `[t_split, T]`:
///
/// * `lhs = ∫ γ dB_H` as a left Riemann sum on the coupled path;
/// * `rhs = ∫ G_H(τ, γ) dB(τ) + ∫ γ(t) DR(t) dt`.
///
/// The drift integral uses `DR` at cell midpoints, except on the first cell
/// where `DR` is singular and its exact integral `R(t_{split+1})` is used.
/// Everything that does not depend on the driver is computed once.
#[derive(Debug, Clone)]
pub struct RepresentationPlan {
    hurst: HurstParam,
    split: usize,
    gamma: Vec<f64>,
    kernel: KernelPlan,
    brownian_weights: Vec<f64>,
    drift_weights: Vec<f64>,
}

impl RepresentationPlan {
    pub fn new(
        h: HurstParam,
        mesh: Arc<HistoryMesh>,
        split: usize,
        gamma: &IntegrandSample,
    ) -> Result<Self> {
        if !gamma.is_deterministic() {
            return Err(Error::NotDeterministic);
        }
        let grid = *gamma.grid();
        let n = grid.steps();
        if split >= n {
            return Err(Error::EmptyWindow { split, steps: n });
        }
        let g = gamma.values()[split..].to_vec();
        let (brownian_weights, drift_weights) = if h.is_brownian() {
            (g.clone(), Vec::new())
        } else {
            let (a, c) = (h.exponent(), ch_coefficient(h));
            let step = grid.step();
            let s = grid.node(split);
            let drift = past_cell_edges(&grid, &mesh, split)
                .map(|(v0, v1)| {
                    let mut acc = CompensatedSum::new();
                    acc.add(g[0] * memory_weight(c, a, step, v0, v1));
                    for (k, &gk) in g.iter().enumerate().skip(1) {
                        let tau = grid.node(split + k) + 0.5 * step - s;
                        acc.add(gk * step * memory_rate_weight(c, a, tau, v0, v1));
                    }
                    acc.value()
                })
                .collect();
            (g_operator_values(h, gamma, split)?, drift)
        };
        Ok(Self {
            hurst: h,
            split,
            gamma: g,
            kernel: KernelPlan::new(h, &grid, mesh),
            brownian_weights,
            drift_weights,
        })
    }

    pub fn kernel(&self) -> &KernelPlan {
        &self.kernel
    }

    pub fn evaluate(&self, driver: &DriverPath) -> Result<(f64, f64)> {
        self.evaluate_with(driver, &DirectConvolver::new(self.kernel.lag_weights()))
    }

    pub fn evaluate_with(&self, driver: &DriverPath, conv: &dyn Convolver) -> Result<(f64, f64)> {
        if driver.grid() != self.kernel.grid() {
            return Err(Error::GridMismatch(format!("driver and integrand grids differ")));
        }
        let xi = &driver.increments()[self.split..];
        let brownian = self
            .brownian_weights
            .iter()
            .zip(xi)
            .map(|(w, x)| w * x)
            .collect::<CompensatedSum>()
            .value();
        if self.hurst.is_brownian() {
            // The H = 1/2 path increments are the driver increments.
            return Ok((brownian, brownian));
        }
        let path = self.kernel.synthesize_with(driver, conv)?;
        let lhs = riemann_sum(&self.gamma, &path.values()[self.split..]);
        let drift = self
            .drift_weights
            .iter()
            .zip(past_increments(driver, self.split))
            .map(|(w, x)| w * x)
            .collect::<CompensatedSum>()
            .value();
        Ok((lhs, brownian + drift))
    }
}

/// One-shot form of [`RepresentationPlan`].
pub fn representation_check(
    driver: &DriverPath,
    h: HurstParam,
    split: usize,
    gamma: &IntegrandSample,
) -> Result<(f64, f64)> {
    if gamma.grid() != driver.grid() {
        return Err(Error::GridMismatch(format!("integrand and driver grids differ")));
    }
    RepresentationPlan::new(h, Arc::clone(driver.mesh()), split, gamma)?.evaluate(driver)
}

/// Closed form of `G_H` applied to `g ≡ 1`: `c_H (T - τ)^{H-1/2}`.
pub fn g_operator_of_constant(h: HurstParam, horizon: f64, tau: f64) -> f64 {
    if h.is_brownian() {
        return if tau < horizon { 1.0 } else { 0.0 };
    }
    ch_coefficient(h) * pow(horizon - tau, h.exponent())
}
