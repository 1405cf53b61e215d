//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use fbmarb::config::{ExperimentConfig, ExperimentKind};
use fbmarb::fft::FastPlan;
use fbmarb::report::{ExperimentReport, Outcome, Verdict};
use fbmarb::run_experiment;
use fbmarb::stats::summarize;
use fbmarb_core::cholesky::CholeskyPlan;
use fbmarb_core::decompose::dr_process;
use fbmarb_core::driver::{sample_driver, sample_driver_on, standard_mesh, HistoryMesh};
use fbmarb_core::fbm::{ch_coefficient, fbm_covariance, history_length, KernelPlan, DEFAULT_TAIL_TOLERANCE};
use fbmarb_core::integrator::{
    g_operator_l2_distance, g_operator_of_constant, g_operator_values, quadratic_variation, riemann_sum,
    IntegrandSample, RepresentationPlan,
    riemann_sum_plus_quadratic_variation,
};
use fbmarb_core::{HurstParam, TimeGrid};

const SEED: u64 = 1_000_003;
const SWEEP: [f64; 6] = [0.5, 0.51, 0.55, 0.6, 0.75, 0.9];

type Outcome1 = Result<String, String>;

fn hp(h: f64) -> HurstParam {
    HurstParam::new(h).unwrap()
}

fn coupled(h: HurstParam, grid: &TimeGrid) -> (FastPlan, Arc<HistoryMesh>) {
    let l = history_length(h, grid.horizon(), DEFAULT_TAIL_TOLERANCE).unwrap();
    let mesh = Arc::new(standard_mesh(grid, l).unwrap());
    (FastPlan::new(KernelPlan::new(h, grid, Arc::clone(&mesh))), mesh)
}

fn ensure(ok: bool, detail: String) -> Outcome1 {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn normalization() -> Outcome1 {
    let grid = TimeGrid::new(1.0, 512).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for h in [0.55, 0.6, 0.75, 0.9] {
        let (plan, mesh) = coupled(hp(h), &grid);
        let sq: Vec<f64> = (0..10_000)
            .map(|r| plan.synthesize(&sample_driver_on(&grid, Arc::clone(&mesh), SEED, r)).unwrap().terminal().powi(2))
            .collect();
        let s = summarize(&sq);
        let z = (s.mean - 1.0) / s.se;
        ok &= z.abs() <= 3.0;
        parts.push(format!("H={h}: {:.4} ({z:+.2} SE)", s.mean));
    }
    ensure(ok, parts.join(", "))
}

fn generator_equivalence() -> Outcome1 {
    let h = hp(0.75);
    let grid = TimeGrid::new(1.0, 256).unwrap();
    let nodes: Vec<usize> = (1..=8).map(|k| 32 * k).collect();
    let (plan, mesh) = coupled(h, &grid);
    let chol = CholeskyPlan::new(h, &grid).unwrap();
    let m = 10_000;
    let a: Vec<Vec<f64>> =
        (0..m).map(|r| plan.synthesize(&sample_driver_on(&grid, Arc::clone(&mesh), SEED + 1, r)).unwrap().into_values()).collect();
    let b: Vec<Vec<f64>> = (0..m).map(|r| chol.sample(SEED + 2, r).into_values()).collect();
    let (mut worst, mut worst_se) = (0.0f64, 0.0f64);
    let mut ok = true;
    for (k, &i) in nodes.iter().enumerate() {
        for &j in &nodes[k..] {
            let oracle = fbm_covariance(h, grid.node(i), grid.node(j));
            for paths in [&a, &b] {
                let s = summarize(&paths.iter().map(|p| p[i] * p[j]).collect::<Vec<_>>());
                let dev = (s.mean - oracle).abs();
                ok &= dev <= 3.0 * s.se;
                worst = worst.max(dev);
                worst_se = worst_se.max(dev / s.se);
            }
        }
    }
    ensure(ok, format!("36 node pairs x 2 generators: max |dev| {worst:.4}, max {worst_se:.2} SE"))
}

fn coupling_anchor() -> Outcome1 {
    let grid = TimeGrid::new(1.0, 512).unwrap();
    let plan = FastPlan::new(KernelPlan::new(HurstParam::BROWNIAN, &grid, Arc::new(HistoryMesh::empty())));
    let mut worst = 0.0f64;
    for r in 0..10_000 {
        let d = sample_driver(&grid, 0.0, SEED + 3, r).unwrap();
        let p = plan.synthesize(&d).unwrap();
        for (x, y) in p.values().iter().zip(d.running_sum()) {
            let e = (x - y).abs();
            worst = worst.max(if y == 0.0 { e } else { e / y.abs() });
        }
    }
    ensure(worst < 1e-12, format!("10000 replicates x 513 nodes: max relative error {worst:e}"))
}

fn quadratic_identity() -> Outcome1 {
    let grid = TimeGrid::new(1.0, 1024).unwrap();
    let (mut worst, mut split) = (0.0f64, 0.0f64);
    for h in SWEEP {
        let (plan, mesh) = coupled(hp(h), &grid);
        for r in 0..1000 {
            let p = plan.synthesize(&sample_driver_on(&grid, Arc::clone(&mesh), SEED + 4, r)).unwrap();
            let v = p.values();
            let gamma: Vec<f64> = v[..1024].iter().map(|x| 2.0 * (x - v[0])).collect();
            let rhs = (p.terminal() - v[0]).powi(2);
            let lhs = riemann_sum_plus_quadratic_variation(&gamma, v);
            worst = worst.max((lhs - rhs).abs() / rhs);
            let separate = riemann_sum(&gamma, v) + quadratic_variation(&p);
            split = split.max((separate - rhs).abs() / rhs);
        }
    }
    ensure(
        worst < 1e-10,
        format!("6 H values x 1000 paths: max relative error {worst:e} (adding separately rounded sums: {split:e})"),
    )
}

fn quadratic_variation_slope() -> Outcome1 {
    let ns = [128usize, 256, 512, 1024, 2048, 4096];
    let fine = TimeGrid::new(1.0, 4096).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for h in [0.6, 0.75] {
        let h = hp(h);
        let l = history_length(h, 1.0, DEFAULT_TAIL_TOLERANCE).unwrap();
        let mesh = Arc::new(standard_mesh(&fine, l).unwrap());
        let plans: Vec<FastPlan> = ns
            .iter()
            .map(|&n| FastPlan::new(KernelPlan::new(h, &TimeGrid::new(1.0, n).unwrap(), Arc::clone(&mesh))))
            .collect();
        let mut sums = [0.0; 6];
        let m = 400;
        for r in 0..m {
            let d = sample_driver_on(&fine, Arc::clone(&mesh), SEED + 5, r);
            for (k, &n) in ns.iter().enumerate() {
                sums[k] += quadratic_variation(&plans[k].synthesize(&d.coarsen(4096 / n).unwrap()).unwrap());
            }
        }
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = sums.iter().map(|s| (s / m as f64).ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 6.0, ys.iter().sum::<f64>() / 6.0);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        let target = 1.0 - 2.0 * h.value();
        ok &= (slope - target).abs() <= 0.1;
        parts.push(format!("H={}: slope {slope:.4} vs {target}", h.value()));
    }
    ensure(ok, parts.join(", "))
}

fn experiment(kind: ExperimentKind, text: &str) -> ExperimentReport {
    let cfg = ExperimentConfig::from_toml(kind, text).unwrap();
    run_experiment(&cfg, None).unwrap()
}

fn describe_failures(r: &ExperimentReport) -> String {
    let rows = r.tables.iter().flat_map(|t| t.rows.iter()).filter(|x| matches!(x.verdict, Verdict::Fail | Verdict::Breach)).count();
    let checks = r.checks.iter().filter(|c| !c.passed).map(|c| c.rule.clone()).collect::<Vec<_>>();
    format!("{rows} failing rows, failing checks {checks:?}")
}

fn arbitrage() -> Outcome1 {
    let r = experiment(ExperimentKind::Arbitrage, "hurst = [0.5, 0.75]\nsteps = [128, 512, 1024, 2048]\nreplicates = 10000\n");
    let mean = r.table("mean_wealth").unwrap();
    let cell = mean.rows.iter().find(|x| x.h == 0.75 && x.n == 1024).unwrap();
    let bm: Vec<_> = mean.rows.iter().filter(|x| x.h == 0.5).collect();
    let loss: Vec<f64> = r
        .table("loss_probability")
        .unwrap()
        .rows
        .iter()
        .filter(|x| x.h == 0.75 && [128, 512, 2048].contains(&x.n))
        .map(|x| x.estimate)
        .collect();
    let oracle_ok = (cell.oracle.unwrap() - 0.96875).abs() < 1e-12;
    let means_ok = mean.rows.iter().all(|x| x.verdict == Verdict::Pass);
    let loss_ok = loss.windows(2).all(|w| w[1] < w[0]);
    ensure(
        oracle_ok && means_ok && loss_ok && r.outcome == Outcome::Pass,
        format!(
            "H=0.75 N=1024: {:.5} +- {:.5} vs {}; H=0.5 means {:?}; P(X<0) at N=128,512,2048: {:?}; {}",
            cell.estimate,
            cell.se.unwrap(),
            cell.oracle.unwrap(),
            bm.iter().map(|x| format!("{:.4}", x.estimate)).collect::<Vec<_>>(),
            loss,
            describe_failures(&r)
        ),
    )
}

fn continuity() -> Outcome1 {
    let r = experiment(ExperimentKind::Continuity, "hurst = [0.5, 0.51, 0.75]\neps = [0.05]\nsteps = [1024]\nreplicates = 10000\n");
    let d = r.table("distance").unwrap();
    let at = |h: f64| d.rows.iter().find(|x| x.h == h).unwrap().estimate;
    let (d0, d1, d2) = (at(0.5), at(0.51), at(0.75));
    ensure(
        d0 == 0.0 && d1 < 0.25 * d2 && r.outcome == Outcome::Pass,
        format!("D(0.5) = {d0}, D(0.51) = {d1:.5}, D(0.75) = {d2:.5}, ratio {:.4}", d1 / d2),
    )
}

fn delay_gap() -> Outcome1 {
    let r = experiment(ExperimentKind::DelayGap, "hurst = [0.75]\neps = [0.2, 0.1, 0.05, 0.025]\nsteps = [1024]\nreplicates = 10000\n");
    let t = r.table("mean_wealth").unwrap();
    let rows: Vec<_> = t.rows.iter().filter(|x| x.eps.is_some()).collect();
    let ok = rows.len() == 4 && rows.iter().all(|x| x.verdict == Verdict::Pass);
    ensure(
        ok,
        rows.iter()
            .map(|x| {
                format!(
                    "eps {}: {:.4} vs {:.4} ({:+.2} SE)",
                    x.eps.unwrap(),
                    x.estimate,
                    x.oracle.unwrap(),
                    (x.estimate - x.oracle.unwrap()) / x.se.unwrap()
                )
            })
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn no_arbitrage() -> Outcome1 {
    let r = experiment(ExperimentKind::NoArbitrage, "replicates = 10000\n");
    let loss: Vec<_> = r.tables.iter().filter(|t| t.name.starts_with("loss_probability__")).collect();
    let mut min_lo = f64::INFINITY;
    let mut ok = loss.len() == r.config.family.len() && r.excluded.is_empty();
    for t in &loss {
        ok &= t.rows.len() == SWEEP.len();
        for x in &t.rows {
            ok &= x.lo.unwrap() > 0.0;
            min_lo = min_lo.min(x.lo.unwrap());
        }
    }
    ensure(ok, format!("{} members x {} H values: smallest 99% lower bound on P(X<0) {min_lo:.4}", loss.len(), SWEEP.len()))
}

fn g_operator() -> Outcome1 {
    let grid = TimeGrid::new(1.0, 1024).unwrap();
    let family: [(&str, fn(f64) -> f64); 3] =
        [("1", |_| 1.0), ("t", |t| t), ("sin 2 pi t", |t| (2.0 * std::f64::consts::PI * t).sin())];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, f) in family {
        let g = IntegrandSample::from_fn(grid, f).unwrap();
        let d: Vec<f64> = [0.75, 0.6, 0.55, 0.51].iter().map(|&h| g_operator_l2_distance(hp(h), &g, 0).unwrap()).collect();
        ok &= d.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("{name}: {}", d.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" > ")));
    }
    let one = IntegrandSample::constant(grid, 1.0).unwrap();
    let mut worst = 0.0f64;
    for h in [0.51, 0.55, 0.6, 0.75, 0.9] {
        let vals = g_operator_values(hp(h), &one, 0).unwrap();
        for (i, v) in vals.iter().enumerate() {
            let tau = grid.node(i);
            let oracle = ch_coefficient(hp(h)) * (1.0 - tau).powf(h - 0.5);
            assert!((g_operator_of_constant(hp(h), 1.0, tau) - oracle).abs() < 1e-12);
            worst = worst.max((v - oracle).abs());
        }
    }
    ok &= worst < 1e-6;
    parts.push(format!("max |G 1 - c (T - tau)^(H - 1/2)| = {worst:e}"));
    ensure(ok, parts.join("; "))
}

fn representation() -> Outcome1 {
    let fine = TimeGrid::new(1.0, 1024).unwrap();
    let coarse = fine.coarsen(8).unwrap();
    let mut errs = Vec::new();
    for h in [0.75, 0.5] {
        let h = hp(h);
        let l = history_length(h, 1.0, DEFAULT_TAIL_TOLERANCE).unwrap();
        let mesh = Arc::new(standard_mesh(&fine, l).unwrap());
        let pf = RepresentationPlan::new(h, Arc::clone(&mesh), 0, &IntegrandSample::constant(fine, 1.0).unwrap()).unwrap();
        let pc = RepresentationPlan::new(h, Arc::clone(&mesh), 0, &IntegrandSample::constant(coarse, 1.0).unwrap()).unwrap();
        let (mut ef, mut ec, mut exact) = (0.0, 0.0, true);
        for r in 0..2000 {
            let d = sample_driver_on(&fine, Arc::clone(&mesh), SEED + 6, r);
            let (a, b) = pf.evaluate(&d).unwrap();
            let (c, e) = pc.evaluate(&d.coarsen(8).unwrap()).unwrap();
            ef += (a - b).abs();
            ec += (c - e).abs();
            exact &= a == b && c == e;
        }
        errs.push((ef / 2000.0, ec / 2000.0, exact));
    }
    let (f, c, _) = errs[0];
    let brownian_exact = errs[1].2;
    ensure(
        f < c && brownian_exact,
        format!("H=0.75: E|lhs - rhs| = {f:.5} at N=1024 vs {c:.5} at N=128; H=0.5 exact: {brownian_exact}"),
    )
}

/// `∫_a^∞ u^{2H-3} du` by Simpson's rule after `u = a w^{-1/(1-H)}`.
fn rate_kernel_quadrature(h: f64, a: f64) -> f64 {
    let n = 2_000;
    let k = 1.0 / (1.0 - h);
    let f = |w: f64| if w == 0.0 { 0.0 } else { (a * w.powf(-k)).powf(2.0 * h - 3.0) * a * k * w.powf(-k - 1.0) };
    let step = 1.0 / n as f64;
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * step)).sum();
    (f(0.0) + f(1.0) + inner) * step / 3.0
}

fn memory_rate_variance() -> Outcome1 {
    let grid = TimeGrid::new(2.0, 256).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for h in [0.75, 0.6] {
        let hpar = hp(h);
        let c = ch_coefficient(hpar);
        let quadrature = c * c * (h - 0.5).powi(2) * rate_kernel_quadrature(h, 1.0);
        let linear = c * c * (h - 0.5) / 2.0;
        let l = history_length(hpar, 2.0, DEFAULT_TAIL_TOLERANCE).unwrap();
        let sq: Vec<f64> = (0..10_000)
            .map(|r| dr_process(&sample_driver(&grid, l, SEED + 7, r).unwrap(), hpar, 128, 256).unwrap().powi(2))
            .collect();
        let s = summarize(&sq);
        let z_q = (s.mean - quadrature) / s.se;
        let z_p = (s.mean - linear) / s.se;
        ok &= z_q.abs() <= 3.0;
        if h == 0.75 {
            ok &= (linear - quadrature).abs() < 1e-9;
        }
        parts.push(format!(
            "H={h}, t-s=1: MC {:.5} +- {:.5}; quadrature {quadrature:.5} ({z_q:+.2} SE); c^2 (H-1/2)/2 = {linear:.5} ({z_p:+.1} SE, {})",
            s.mean,
            s.se,
            if z_p.abs() <= 3.0 { "agrees" } else { "rejected" }
        ));
    }
    ensure(ok, parts.join("; "))
}

fn determinism() -> Outcome1 {
    let configs = [
        (ExperimentKind::Arbitrage, "hurst = [0.5, 0.75]\nsteps = [128, 512]\nreplicates = 300\n"),
        (ExperimentKind::Continuity, "hurst = [0.5, 0.6]\nsteps = [256]\nreplicates = 300\n"),
        (ExperimentKind::DelayGap, "eps = [0.1, 0.05]\nsteps = [256]\nreplicates = 300\n"),
        (ExperimentKind::NoArbitrage, "hurst = [0.5, 0.9]\nsteps = [256]\nreplicates = 300\n"),
    ];
    let mut tables = 0;
    for (kind, text) in configs {
        let cfg = ExperimentConfig::from_toml(kind, text).unwrap();
        let runs: Vec<Vec<String>> = [1usize, 2, 4, 1]
            .iter()
            .map(|&t| run_experiment(&cfg, Some(t)).unwrap().tables.iter().map(|t| t.to_csv()).collect())
            .collect();
        if runs.iter().any(|r| r != &runs[0]) {
            return Err(format!("{kind}: CSV tables differ between thread counts 1, 2, 4"));
        }
        tables += runs[0].len();
    }
    ensure(true, format!("{tables} CSV tables byte-identical across runs with 1, 2, 4 and 1 threads"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome1); 13] = [
        ("normalization of Var B_H(1)", normalization),
        ("coupled vs exact generator covariance", generator_equivalence),
        ("coupling anchor at H = 1/2", coupling_anchor),
        ("quadratic strategy finite identity", quadratic_identity),
        ("quadratic variation scaling", quadratic_variation_slope),
        ("arbitrage reproduction", arbitrage),
        ("continuity in H with common drivers", continuity),
        ("delay gap against the covariance oracle", delay_gap),
        ("loss probability of delayed and piecewise strategies", no_arbitrage),
        ("G_H operator approach to the identity", g_operator),
        ("Brownian representation under refinement", representation),
        ("variance of the memory rate", memory_rate_variance),
        ("determinism across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {:>2}: {name} [{secs:.1}s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} [{secs:.1}s] {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
