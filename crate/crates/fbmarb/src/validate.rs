//! Fast invariant suite run by `fbmarb validate`.

use std::sync::Arc;

use fbmarb_core::cholesky::CholeskyPlan;
use fbmarb_core::driver::{sample_driver_on, standard_mesh};
use fbmarb_core::fbm::{ch_coefficient, fbm_covariance, history_length, KernelPlan};
use fbmarb_core::integrator::{quadratic_variation, riemann_sum};
use fbmarb_core::market::{measurability_audit, Lookahead, MarketModel, Strategy, StrategyKind};
use fbmarb_core::{HurstParam, TimeGrid};

use crate::stats::summarize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmokeOptions {
    /// Multiplies `c_H` in the coupled generator. Anything but 1 is a
    /// deliberate fault.
    pub coefficient_scale: f64,
    pub seed: u64,
}

impl Default for SmokeOptions {
    fn default() -> Self {
        Self { coefficient_scale: 1.0, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmokeCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for SmokeCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn coupled_plan(h: HurstParam, grid: &TimeGrid, opts: &SmokeOptions) -> KernelPlan {
    let l = history_length(h, grid.horizon(), 1e-4).expect("valid tolerance");
    let mesh = Arc::new(standard_mesh(grid, l).expect("valid history"));
    KernelPlan::with_coefficient(h, grid, mesh, opts.coefficient_scale * ch_coefficient(h))
}

fn coupling_anchor(opts: &SmokeOptions) -> SmokeCheck {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let plan = coupled_plan(HurstParam::BROWNIAN, &grid, opts);
    let mut worst: f64 = 0.0;
    for r in 0..50 {
        let d = sample_driver_on(&grid, Arc::clone(plan.mesh()), opts.seed, r);
        let p = plan.synthesize(&d).expect("matching grid");
        for (x, y) in p.values().iter().zip(d.running_sum()) {
            let err = (x - y).abs();
            worst = worst.max(if y != 0.0 { err / y.abs() } else { err });
        }
    }
    SmokeCheck { name: "coupling-anchor", passed: worst < 1e-12, detail: format!("max relative error {worst:e}") }
}

fn quadratic_identity(opts: &SmokeOptions) -> SmokeCheck {
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let mut worst: f64 = 0.0;
    for h in [0.5, 0.6, 0.75, 0.9] {
        let h = HurstParam::new(h).unwrap();
        let plan = coupled_plan(h, &grid, opts);
        for r in 0..10 {
            let d = sample_driver_on(&grid, Arc::clone(plan.mesh()), opts.seed, r);
            let p = plan.synthesize(&d).expect("matching grid");
            let v = p.values();
            let gamma: Vec<f64> = v[..128].iter().map(|x| 2.0 * x).collect();
            let lhs = riemann_sum(&gamma, v) + quadratic_variation(&p);
            let rhs = p.terminal().powi(2);
            worst = worst.max((lhs - rhs).abs() / rhs.max(f64::MIN_POSITIVE));
        }
    }
    SmokeCheck { name: "quadratic-identity", passed: worst < 1e-10, detail: format!("max relative error {worst:e}") }
}

fn normalization(opts: &SmokeOptions) -> SmokeCheck {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let h = HurstParam::new(0.75).unwrap();
    let plan = coupled_plan(h, &grid, opts);
    let sq: Vec<f64> = (0..2000)
        .map(|r| {
            let d = sample_driver_on(&grid, Arc::clone(plan.mesh()), opts.seed + 1, r);
            plan.synthesize(&d).expect("matching grid").terminal().powi(2)
        })
        .collect();
    let s = summarize(&sq);
    SmokeCheck {
        name: "normalization",
        passed: (s.mean - 1.0).abs() <= 3.0 * s.se,
        detail: format!("Var B_H(1) = {:.4} (se {:.4}) at H = 0.75, target 1", s.mean, s.se),
    }
}

fn generator_equivalence(opts: &SmokeOptions) -> SmokeCheck {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let h = HurstParam::new(0.75).unwrap();
    let plan = coupled_plan(h, &grid, opts);
    let chol = CholeskyPlan::new(h, &grid).expect("positive definite");
    let nodes = [16usize, 32, 48, 64];
    let m = 2000;
    let coupled: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            plan.synthesize(&sample_driver_on(&grid, Arc::clone(plan.mesh()), opts.seed + 2, r))
                .expect("matching grid")
                .into_values()
        })
        .collect();
    let exact: Vec<Vec<f64>> = (0..m).map(|r| chol.sample(opts.seed + 3, r).into_values()).collect();
    let mut worst: f64 = 0.0;
    for (a, &i) in nodes.iter().enumerate() {
        for &j in &nodes[a..] {
            let pc: Vec<f64> = coupled.iter().map(|p| p[i] * p[j]).collect();
            let pe: Vec<f64> = exact.iter().map(|p| p[i] * p[j]).collect();
            let (sc, se) = (summarize(&pc), summarize(&pe));
            let pooled = (sc.se * sc.se + se.se * se.se).sqrt();
            worst = worst.max((sc.mean - se.mean).abs() / pooled);
            let oracle = fbm_covariance(h, grid.node(i), grid.node(j));
            worst = worst.max((se.mean - oracle).abs() / se.se);
        }
    }
    SmokeCheck {
        name: "generator-equivalence",
        passed: worst <= 3.0,
        detail: format!("largest covariance discrepancy {worst:.2} SE over {} node pairs", nodes.len() * (nodes.len() + 1) / 2),
    }
}

fn measurability(opts: &SmokeOptions) -> SmokeCheck {
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let h = HurstParam::new(0.75).unwrap();
    let plan = coupled_plan(h, &grid, opts);
    let p = plan.synthesize(&sample_driver_on(&grid, Arc::clone(plan.mesh()), opts.seed, 0)).expect("matching grid");
    let mkt = MarketModel::default().price_path(&p);
    let lookahead = Strategy::new("lookahead", StrategyKind::Adapted, Lookahead);
    let flagged = measurability_audit(&lookahead, &mkt).map(|r| !r.passed()).unwrap_or(false);
    let clean = measurability_audit(&Strategy::delayed_quadratic(0.125), &mkt).map(|r| r.passed()).unwrap_or(false);
    SmokeCheck {
        name: "measurability-audit",
        passed: flagged && clean,
        detail: format!("lookahead flagged: {flagged}, delayed quadratic clean: {clean}"),
    }
}

/// Runs every smoke check; the run passes when all of them do.
pub fn run_smoke_suite(opts: &SmokeOptions) -> Vec<SmokeCheck> {
    vec![
        coupling_anchor(opts),
        quadratic_identity(opts),
        normalization(opts),
        generator_equivalence(opts),
        measurability(opts),
    ]
}
