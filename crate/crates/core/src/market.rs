//! Bachelier-type market `S(t) = S0 + sigma B_H(t)` with a constant bond
//! `b ≡ 1`, strategy classes distinguished by their information window, and
//! self-financing wealth `X(T) = ∫ γ dS`, `X(0) = 0`.
//!
//! A strategy pairs a [`StrategyKind`], which fixes for every node the last
//! node whose price may be observed, with a [`PositionRule`] that reads
//! prices only through a [`PriceView`]. Reads past the window fail, so
//! measurability is enforced by construction; [`measurability_audit`]
//! checks it independently by perturbing the forbidden part of the path.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;
use core::fmt;

use crate::fbm::{fbm_covariance, FbmPath};
use crate::integrator::{quadratic_variation_of, riemann_sum, IntegrandSample};
use crate::math::{two_diff, two_prod, CompensatedSum};
use crate::{Error, HurstParam, Result, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketModel {
    pub initial_price: f64,
    pub sigma: f64,
}

impl Default for MarketModel {
    fn default() -> Self {
        Self { initial_price: 0.0, sigma: 1.0 }
    }
}

impl MarketModel {
    pub fn new(initial_price: f64, sigma: f64) -> Result<Self> {
        if !(initial_price.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "market needs finite S0 and sigma > 0, got S0 = {initial_price}, sigma = {sigma}"
            )));
        }
        Ok(Self { initial_price, sigma })
    }

    pub fn price_path(&self, path: &FbmPath) -> MarketPath {
        MarketPath {
            model: *self,
            grid: *path.grid(),
            hurst: path.hurst(),
            prices: path.values().iter().map(|b| self.initial_price + self.sigma * b).collect(),
        }
    }
}

/// Prices `S(t_i)`, `i = 0..=N`, of one market scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPath {
    model: MarketModel,
    grid: TimeGrid,
    hurst: HurstParam,
    prices: Vec<f64>,
}

impl MarketPath {
    pub fn model(&self) -> &MarketModel {
        &self.model
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }
}

/// Information class of a strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyKind {
    /// `γ(t)` may use prices up to `t`.
    Adapted,
    /// `γ(t)` may use prices up to `t - eps` (only `S(0)` while `t < eps`).
    Delayed { eps: f64 },
    /// Constant on blocks `[T_k, T_{k+1})` with `T_{k+1} - T_k >= eps`,
    /// decided from prices up to `T_k`. Without explicit times the blocks
    /// are `eps` long, the last one absorbing any remainder.
    Piecewise { eps: f64, times: Option<Vec<f64>> },
}

impl StrategyKind {
    pub fn delay(&self) -> Option<f64> {
        match self {
            StrategyKind::Adapted => None,
            StrategyKind::Delayed { eps } | StrategyKind::Piecewise { eps, .. } => Some(*eps),
        }
    }

    /// The delay in whole grid steps, floored.
    pub fn delay_steps(&self, grid: &TimeGrid) -> Result<usize> {
        match self.delay() {
            None => Ok(0),
            Some(eps) => {
                if !(eps.is_finite() && eps > 0.0) {
                    return Err(Error::DelayBelowStep { eps, step: grid.step() });
                }
                let d = grid.whole_steps(eps);
                if d == 0 {
                    Err(Error::DelayBelowStep { eps, step: grid.step() })
                } else {
                    Ok(d)
                }
            }
        }
    }

    /// For every node `i < N`, the last node whose price `γ(t_i)` may use.
    pub fn observation_schedule(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        let n = grid.steps();
        let d = self.delay_steps(grid)?;
        match self {
            StrategyKind::Adapted => Ok((0..n).collect()),
            StrategyKind::Delayed { .. } => Ok((0..n).map(|i| i.saturating_sub(d)).collect()),
            StrategyKind::Piecewise { times, .. } => {
                let starts = match times {
                    None => {
                        let mut s: Vec<usize> = (0..n).step_by(d).collect();
                        if s.len() > 1 && n - s[s.len() - 1] < d {
                            s.pop();
                        }
                        s
                    }
                    Some(times) => rebalance_nodes(grid, times)?,
                };
                validate_blocks(&starts, n, d)?;
                let mut schedule = vec![0; n];
                for (k, &start) in starts.iter().enumerate() {
                    let end = starts.get(k + 1).copied().unwrap_or(n);
                    schedule[start..end].fill(start);
                }
                Ok(schedule)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            StrategyKind::Adapted => String::from("adapted"),
            StrategyKind::Delayed { eps } => format!("delayed(eps={eps})"),
            StrategyKind::Piecewise { eps, .. } => format!("piecewise(eps={eps})"),
        }
    }
}

fn rebalance_nodes(grid: &TimeGrid, times: &[f64]) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let r = t / grid.step();
            let node = libm::round(r);
            if !(t.is_finite() && t >= 0.0) || libm::fabs(r - node) > 1e-9 * node.max(1.0) {
                Err(Error::InvalidSchedule(format!("rebalance time {t} is not a grid node")))
            } else {
                Ok(node as usize)
            }
        })
        .collect()
}

fn validate_blocks(starts: &[usize], n: usize, d: usize) -> Result<()> {
    if starts.first() != Some(&0) {
        return Err(Error::InvalidSchedule(format!("first rebalance must be at t = 0")));
    }
    let mut ends: Vec<usize> = starts[1..].to_vec();
    ends.push(n);
    for (start, end) in starts.iter().zip(&ends) {
        if end <= start {
            return Err(Error::InvalidSchedule(format!("rebalance nodes must increase")));
        }
        if end - start < d {
            return Err(Error::InvalidSchedule(format!(
                "block [{start}, {end}) is shorter than the minimum gap of {d} steps"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Access<'a> {
    Enforced,
    Audit { shift: f64, touched: &'a Cell<bool> },
}

/// The prices a rule may see when choosing `γ(t_now)`.
#[derive(Debug, Clone, Copy)]
pub struct PriceView<'a> {
    prices: &'a [f64],
    now: usize,
    latest: usize,
    initial_price: f64,
    access: Access<'a>,
}

impl PriceView<'_> {
    /// Node at which the position is held.
    pub fn now(&self) -> usize {
        self.now
    }

    /// Last node inside the information window.
    pub fn latest(&self) -> usize {
        self.latest
    }

    pub fn initial_price(&self) -> f64 {
        self.initial_price
    }

    pub fn price(&self, node: usize) -> Result<f64> {
        if node <= self.latest {
            return Ok(self.prices[node]);
        }
        match self.access {
            Access::Enforced => {
                Err(Error::AccessViolation { node, now: self.now, latest: self.latest })
            }
            Access::Audit { shift, touched } => {
                touched.set(true);
                match self.prices.get(node) {
                    Some(p) => Ok(p + shift * (1.0 + node as f64)),
                    None => Err(Error::AccessViolation { node, now: self.now, latest: self.latest }),
                }
            }
        }
    }

    /// Price at the last observable node.
    pub fn latest_price(&self) -> f64 {
        self.prices[self.latest]
    }
}

/// Maps an information window to a position.
pub trait PositionRule: Send + Sync {
    fn position(&self, view: &PriceView<'_>) -> Result<f64>;
}

impl<F> PositionRule for F
where
    F: Fn(&PriceView<'_>) -> Result<f64> + Send + Sync,
{
    fn position(&self, view: &PriceView<'_>) -> Result<f64> {
        self(view)
    }
}

/// `γ = 2 (S_latest - S0)`, the quadratic arbitrage integrand observed at
/// the end of the information window.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

impl PositionRule for Quadratic {
    fn position(&self, view: &PriceView<'_>) -> Result<f64> {
        Ok(2.0 * (view.latest_price() - view.initial_price()))
    }
}

/// `γ = sign(S_latest - S_{latest - lag})`.
#[derive(Debug, Clone, Copy)]
pub struct Momentum {
    pub lag: usize,
}

impl PositionRule for Momentum {
    fn position(&self, view: &PriceView<'_>) -> Result<f64> {
        let latest = view.latest();
        let back = view.price(latest.saturating_sub(self.lag))?;
        Ok(sign(view.latest_price() - back))
    }
}

/// `γ = sign(S_latest - S0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignOfGain;

impl PositionRule for SignOfGain {
    fn position(&self, view: &PriceView<'_>) -> Result<f64> {
        Ok(sign(view.latest_price() - view.initial_price()))
    }
}

/// `γ = 2 (S(t_now) - S0)` regardless of the window.
#[derive(Debug, Clone, Copy, Default)]
pub struct CurrentQuadratic;

impl PositionRule for CurrentQuadratic {
    fn position(&self, view: &PriceView<'_>) -> Result<f64> {
        Ok(2.0 * (view.price(view.now())? - view.initial_price()))
    }
}

/// `γ = sign(S(t_{now+1}) - S(t_now))`: perfect foresight of the next move.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lookahead;

impl PositionRule for Lookahead {
    fn position(&self, view: &PriceView<'_>) -> Result<f64> {
        let now = view.now();
        Ok(sign(view.price(now + 1)? - view.price(now)?))
    }
}

/// `γ ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flat;

impl PositionRule for Flat {
    fn position(&self, _view: &PriceView<'_>) -> Result<f64> {
        Ok(0.0)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Clone)]
pub struct Strategy {
    name: String,
    kind: StrategyKind,
    rule: Arc<dyn PositionRule>,
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Strategy").field("name", &self.name).field("kind", &self.kind).finish()
    }
}

impl Strategy {
    pub fn new<R: PositionRule + 'static>(name: impl Into<String>, kind: StrategyKind, rule: R) -> Self {
        Self { name: name.into(), kind, rule: Arc::new(rule) }
    }

    pub fn from_boxed(name: impl Into<String>, kind: StrategyKind, rule: Box<dyn PositionRule>) -> Self {
        Self { name: name.into(), kind, rule: Arc::from(rule) }
    }

    /// The arbitrage strategy `γ(t) = 2 (S(t) - S0)`.
    pub fn adapted_quadratic() -> Self {
        Self::new("adapted-quadratic", StrategyKind::Adapted, Quadratic)
    }

    /// `γ(t) = 2 (S((t - eps)^+) - S0)`.
    pub fn delayed_quadratic(eps: f64) -> Self {
        Self::new(format!("delayed-quadratic-eps{eps}"), StrategyKind::Delayed { eps }, Quadratic)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &StrategyKind {
        &self.kind
    }

    pub fn rule(&self) -> &dyn PositionRule {
        &*self.rule
    }
}

fn check_position(now: usize, g: f64) -> Result<f64> {
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::NonFinitePosition { now })
    }
}

/// Positions `γ(t_i)`, `i = 0..N-1`, with every price read checked against
/// the strategy's information window.
pub fn evaluate_strategy(strategy: &Strategy, market: &MarketPath) -> Result<IntegrandSample> {
    let schedule = strategy.kind.observation_schedule(&market.grid)?;
    let positions = evaluate_on_schedule(strategy, market, &schedule)?;
    IntegrandSample::new(market.grid, positions)
}

/// As [`evaluate_strategy`] with a schedule from
/// [`StrategyKind::observation_schedule`], reused across paths.
pub fn evaluate_on_schedule(
    strategy: &Strategy,
    market: &MarketPath,
    schedule: &[usize],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(schedule.len());
    let mut held: Option<(usize, f64)> = None;
    for (now, &latest) in schedule.iter().enumerate() {
        let piecewise = matches!(strategy.kind, StrategyKind::Piecewise { .. });
        if piecewise {
            if let Some((start, g)) = held {
                if start == latest {
                    out.push(g);
                    continue;
                }
            }
        }
        // a piecewise block is decided at its start
        let at = if piecewise { latest } else { now };
        let view = PriceView {
            prices: &market.prices,
            now: at,
            latest,
            initial_price: market.model.initial_price,
            access: Access::Enforced,
        };
        let g = check_position(now, strategy.rule.position(&view)?)?;
        held = Some((latest, g));
        out.push(g);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// The rule read a price after the end of its window.
    ReadOutsideWindow,
    /// The position changed when prices outside the window were perturbed.
    ChangedUnderPerturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub node: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub strategy: String,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<Violation> {
        self.violations.first().copied()
    }
}

/// Re-evaluates every position with prices past the window shifted, and
/// flags nodes whose position reads or depends on those prices.
pub fn measurability_audit(strategy: &Strategy, market: &MarketPath) -> Result<AuditReport> {
    let schedule = strategy.kind.observation_schedule(&market.grid)?;
    let piecewise = matches!(strategy.kind, StrategyKind::Piecewise { .. });
    let mut violations = Vec::new();
    for (now, &latest) in schedule.iter().enumerate() {
        let at = if piecewise { latest } else { now };
        let touched = Cell::new(false);
        let eval = |shift: f64| {
            let view = PriceView {
                prices: &market.prices,
                now: at,
                latest,
                initial_price: market.model.initial_price,
                access: Access::Audit { shift, touched: &touched },
            };
            strategy.rule.position(&view)
        };
        let base = eval(0.0);
        let shifted = eval(1.0);
        let shifted_down = eval(-3.5);
        if touched.get() {
            violations.push(Violation { node: now, kind: ViolationKind::ReadOutsideWindow });
        } else if base != shifted || base != shifted_down {
            violations.push(Violation { node: now, kind: ViolationKind::ChangedUnderPerturbation });
        }
    }
    Ok(AuditReport { strategy: strategy.name.clone(), violations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WealthOutcome {
    pub terminal_wealth: f64,
    pub replicate_id: u64,
    pub strategy: String,
    pub hurst: HurstParam,
    pub steps: usize,
}

/// `X(T) = Σ γ(t_i) (S(t_{i+1}) - S(t_i))` from `X(0) = 0`.
pub fn terminal_wealth(strategy: &Strategy, market: &MarketPath, replicate_id: u64) -> Result<WealthOutcome> {
    let gamma = evaluate_strategy(strategy, market)?;
    Ok(WealthOutcome {
        terminal_wealth: riemann_sum(gamma.values(), &market.prices),
        replicate_id,
        strategy: strategy.name.clone(),
        hurst: market.hurst,
        steps: market.grid.steps(),
    })
}

/// Node-wise wealth `X(t_i)` and bond holding `β(t_i) = X(t_i) - γ(t_i) S(t_i)`
/// for `i = 0..N-1`, plus `X(T)`.
pub fn wealth_process(gamma: &[f64], prices: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let mut wealth = Vec::with_capacity(gamma.len());
    let mut bond = Vec::with_capacity(gamma.len());
    let mut acc = CompensatedSum::new();
    for (i, &g) in gamma.iter().enumerate() {
        let x = acc.value();
        wealth.push(x);
        bond.push(x - g * prices[i]);
        let (d, dl) = two_diff(prices[i + 1], prices[i]);
        let (q, ql) = two_prod(g, d);
        acc.add(q);
        acc.add(ql + g * dl);
    }
    (wealth, bond, acc.value())
}

/// `(S(T) - S0)^2 - sigma^2 QV(B_H)`, which the adapted quadratic wealth
/// equals path by path.
pub fn quadratic_identity_wealth(market: &MarketPath) -> f64 {
    let p = &market.prices;
    let gain = p[p.len() - 1] - market.model.initial_price;
    gain * gain - quadratic_variation_of(p)
}

/// Exact expectation of the finite-grid wealth of the quadratic rule
/// `γ(t_i) = 2 (S(t_{a_i}) - S0)`, where `a_i` is the observation node the
/// strategy class allows:
///
/// ```text
/// E X(T) = sigma^2 Σ_i [t_{i+1}^{2H} - t_i^{2H} - |t_{i+1} - a_i|^{2H} + |t_i - a_i|^{2H}].
/// ```
pub fn closed_form_wealth_expectation(
    kind: &StrategyKind,
    h: HurstParam,
    grid: &TimeGrid,
    sigma: f64,
) -> Result<f64> {
    let schedule = kind.observation_schedule(grid)?;
    let mut acc = CompensatedSum::new();
    for (i, &obs) in schedule.iter().enumerate() {
        let a = grid.node(obs);
        let (c, d) = (grid.node(i), grid.node(i + 1));
        acc.add(2.0 * (fbm_covariance(h, a, d) - fbm_covariance(h, a, c)));
    }
    Ok(sigma * sigma * acc.value())
}
