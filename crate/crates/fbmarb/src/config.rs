//! Experiment configuration: TOML input, per-kind defaults and validation.

use std::fmt;
use std::path::PathBuf;

use fbmarb_core::market::{
    CurrentQuadratic, Flat, Lookahead, Momentum, Quadratic, SignOfGain, Strategy, StrategyKind,
};
use fbmarb_core::{HurstParam, TimeGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Arbitrage,
    Continuity,
    DelayGap,
    NoArbitrage,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Arbitrage => "arbitrage",
            ExperimentKind::Continuity => "continuity",
            ExperimentKind::DelayGap => "delay-gap",
            ExperimentKind::NoArbitrage => "no-arbitrage",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyClass {
    Adapted,
    Delayed,
    Piecewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    /// `2 (S_obs - S0)`
    Quadratic,
    /// `sign(S_obs - S_{obs - lag})`
    Momentum,
    /// `sign(S_obs - S0)`
    Sign,
    /// reads `S(t)` whatever the class allows
    Current,
    /// reads `S(t + step)`
    Lookahead,
    Zero,
}

/// One member of the strategy family tested for losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyMember {
    pub name: String,
    pub class: StrategyClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub rule: RuleName,
    /// Momentum lag in steps; defaults to the delay in steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl FamilyMember {
    fn new(name: &str, class: StrategyClass, eps: f64, rule: RuleName) -> Self {
        Self { name: name.into(), class, eps: Some(eps), rule, lag: None, times: None }
    }

    pub fn kind(&self) -> StrategyKind {
        let eps = self.eps.unwrap_or(f64::NAN);
        match self.class {
            StrategyClass::Adapted => StrategyKind::Adapted,
            StrategyClass::Delayed => StrategyKind::Delayed { eps },
            StrategyClass::Piecewise => StrategyKind::Piecewise { eps, times: self.times.clone() },
        }
    }

    /// The strategy on a given grid (the momentum lag depends on the step).
    pub fn strategy(&self, grid: &TimeGrid) -> fbmarb_core::Result<Strategy> {
        let kind = self.kind();
        let name = self.name.clone();
        Ok(match self.rule {
            RuleName::Quadratic => Strategy::new(name, kind, Quadratic),
            RuleName::Momentum => {
                let lag = match self.lag {
                    Some(lag) => lag,
                    None => kind.delay_steps(grid)?.max(1),
                };
                Strategy::new(name, kind, Momentum { lag })
            }
            RuleName::Sign => Strategy::new(name, kind, SignOfGain),
            RuleName::Current => Strategy::new(name, kind, CurrentQuadratic),
            RuleName::Lookahead => Strategy::new(name, kind, Lookahead),
            RuleName::Zero => Strategy::new(name, kind, Flat),
        })
    }

    /// Whether the closed-form quadratic wealth expectation applies.
    pub fn has_oracle(&self) -> bool {
        self.rule == RuleName::Quadratic
    }
}

/// The delayed and minimum-gap piecewise strategies checked for losses by
/// default.
pub fn default_family() -> Vec<FamilyMember> {
    use RuleName as R;
    use StrategyClass as C;
    vec![
        FamilyMember::new("delayed-quadratic-eps0.2", C::Delayed, 0.2, R::Quadratic),
        FamilyMember::new("delayed-quadratic-eps0.1", C::Delayed, 0.1, R::Quadratic),
        FamilyMember::new("delayed-quadratic-eps0.05", C::Delayed, 0.05, R::Quadratic),
        FamilyMember::new("delayed-quadratic-eps0.025", C::Delayed, 0.025, R::Quadratic),
        FamilyMember::new("delayed-momentum-eps0.05", C::Delayed, 0.05, R::Momentum),
        FamilyMember::new("piecewise-sign-eps0.1", C::Piecewise, 0.1, R::Sign),
        FamilyMember::new("piecewise-quadratic-eps0.1", C::Piecewise, 0.1, R::Quadratic),
    ]
}

/// Configuration file contents; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<ExperimentKind>,
    hurst: Option<Vec<f64>>,
    eps: Option<Vec<f64>>,
    steps: Option<Vec<usize>>,
    replicates: Option<usize>,
    seed: Option<u64>,
    horizon: Option<f64>,
    tail_tolerance: Option<f64>,
    output: Option<PathBuf>,
    s0: Option<f64>,
    sigma: Option<f64>,
    se_pass: Option<f64>,
    se_fail: Option<f64>,
    confidence: Option<f64>,
    ratio_bound: Option<f64>,
    reference_hurst: Option<f64>,
    export_wealth: Option<bool>,
    family: Option<Vec<FamilyMember>>,
}

/// A validated configuration with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub hurst: Vec<f64>,
    pub eps: Vec<f64>,
    pub steps: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub horizon: f64,
    pub tail_tolerance: f64,
    pub output: PathBuf,
    pub s0: f64,
    pub sigma: f64,
    /// Pass threshold in standard errors.
    pub se_pass: f64,
    /// Oracle breaches beyond this many standard errors are numerical failures.
    pub se_fail: f64,
    /// Two-sided confidence of the exact binomial intervals.
    pub confidence: f64,
    /// Continuity: required `D(lowest H > 1/2) / D(reference H)` upper bound.
    pub ratio_bound: f64,
    pub reference_hurst: f64,
    pub export_wealth: bool,
    pub family: Vec<FamilyMember>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldIssue>),
}

impl ExperimentConfig {
    /// Defaults for one experiment kind.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let sweep = vec![0.5, 0.51, 0.55, 0.6, 0.75, 0.9];
        let (hurst, eps, steps) = match kind {
            ExperimentKind::Arbitrage => (sweep, vec![], vec![128, 512, 1024, 2048]),
            ExperimentKind::Continuity => (sweep, vec![0.05], vec![1024]),
            ExperimentKind::DelayGap => (vec![0.75], vec![0.2, 0.1, 0.05, 0.025], vec![1024]),
            ExperimentKind::NoArbitrage => (sweep, vec![], vec![1024]),
        };
        Self {
            kind,
            hurst,
            eps,
            steps,
            replicates: 10_000,
            seed: 20_240_601,
            horizon: 1.0,
            tail_tolerance: fbmarb_core::fbm::DEFAULT_TAIL_TOLERANCE,
            output: PathBuf::from("out").join(kind.name()),
            s0: 0.0,
            sigma: 1.0,
            se_pass: 3.0,
            se_fail: 4.0,
            confidence: 0.99,
            ratio_bound: 0.25,
            reference_hurst: 0.75,
            export_wealth: false,
            family: default_family(),
        }
    }

    /// Parses TOML text for `kind`, filling defaults and validating.
    pub fn from_toml(kind: ExperimentKind, text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if let Some(k) = raw.kind {
            if k != kind {
                return Err(ConfigError::Invalid(vec![FieldIssue {
                    path: "kind".into(),
                    message: format!("config is for '{k}', requested '{kind}'"),
                }]));
            }
        }
        let d = Self::defaults(kind);
        let mut cfg = Self {
            kind,
            hurst: raw.hurst.unwrap_or(d.hurst),
            eps: raw.eps.unwrap_or(d.eps),
            steps: raw.steps.unwrap_or(d.steps),
            replicates: raw.replicates.unwrap_or(d.replicates),
            seed: raw.seed.unwrap_or(d.seed),
            horizon: raw.horizon.unwrap_or(d.horizon),
            tail_tolerance: raw.tail_tolerance.unwrap_or(d.tail_tolerance),
            output: raw.output.unwrap_or(d.output),
            s0: raw.s0.unwrap_or(d.s0),
            sigma: raw.sigma.unwrap_or(d.sigma),
            se_pass: raw.se_pass.unwrap_or(d.se_pass),
            se_fail: raw.se_fail.unwrap_or(d.se_fail),
            confidence: raw.confidence.unwrap_or(d.confidence),
            ratio_bound: raw.ratio_bound.unwrap_or(d.ratio_bound),
            reference_hurst: raw.reference_hurst.unwrap_or(d.reference_hurst),
            export_wealth: raw.export_wealth.unwrap_or(d.export_wealth),
            family: raw.family.unwrap_or(d.family),
        };
        cfg.steps.sort_unstable();
        cfg.steps.dedup();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn max_steps(&self) -> usize {
        self.steps.iter().copied().max().unwrap_or(0)
    }

    pub fn grid(&self, steps: usize) -> TimeGrid {
        TimeGrid::new(self.horizon, steps).expect("validated grid")
    }

    pub fn hurst_params(&self) -> Vec<HurstParam> {
        self.hurst.iter().map(|&h| HurstParam::new(h).expect("validated Hurst values")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let mut bad = |path: String, message: String| issues.push(FieldIssue { path, message });

        if self.hurst.is_empty() {
            bad("hurst".into(), "at least one Hurst value is required".into());
        }
        for (i, &h) in self.hurst.iter().enumerate() {
            if HurstParam::new(h).is_err() {
                bad(format!("hurst[{i}]"), format!("{h} is outside [0.5, 1)"));
            }
        }
        let horizon_ok = self.horizon.is_finite() && self.horizon > 0.0;
        if !horizon_ok {
            bad("horizon".into(), format!("{} is not a positive finite time", self.horizon));
        }
        if self.steps.is_empty() {
            bad("steps".into(), "at least one grid size is required".into());
        }
        let max = self.max_steps();
        for (i, &n) in self.steps.iter().enumerate() {
            if n == 0 {
                bad(format!("steps[{i}]"), "grid size must be positive".into());
            } else if max % n != 0 {
                bad(format!("steps[{i}]"), format!("{n} does not divide the finest grid size {max}"));
            }
        }
        if self.replicates < 100 {
            bad("replicates".into(), format!("{} is below the minimum of 100", self.replicates));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            bad("tail_tolerance".into(), format!("{} is outside (0, 1)", self.tail_tolerance));
        }
        if self.output.as_os_str().is_empty() {
            bad("output".into(), "output directory must be set".into());
        }
        if !self.s0.is_finite() {
            bad("s0".into(), "initial price must be finite".into());
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            bad("sigma".into(), format!("{} is not a positive scale", self.sigma));
        }
        if !(self.se_pass > 0.0 && self.se_pass.is_finite()) {
            bad("se_pass".into(), "must be positive".into());
        }
        if !(self.se_fail >= self.se_pass && self.se_fail.is_finite()) {
            bad("se_fail".into(), "must be at least se_pass".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            bad("confidence".into(), format!("{} is outside (0, 1)", self.confidence));
        }
        if !(self.ratio_bound > 0.0 && self.ratio_bound.is_finite()) {
            bad("ratio_bound".into(), "must be positive".into());
        }
        if HurstParam::new(self.reference_hurst).is_err() {
            bad("reference_hurst".into(), format!("{} is outside [0.5, 1)", self.reference_hurst));
        }

        let grids: Vec<TimeGrid> = if horizon_ok {
            self.steps.iter().filter(|&&n| n > 0).map(|&n| TimeGrid::new(self.horizon, n).unwrap()).collect()
        } else {
            Vec::new()
        };
        let check_eps = |path: String, eps: f64, bad: &mut dyn FnMut(String, String)| {
            if !(eps.is_finite() && eps > 0.0) {
                bad(path, format!("{eps} is not a positive delay"));
                return;
            }
            if horizon_ok && eps > self.horizon {
                bad(path.clone(), format!("{eps} exceeds the horizon {}", self.horizon));
            }
            for g in &grids {
                if g.whole_steps(eps) == 0 {
                    bad(
                        path.clone(),
                        format!("{eps} is shorter than the grid step {} of N = {}", g.step(), g.steps()),
                    );
                }
            }
        };

        match self.kind {
            ExperimentKind::Continuity | ExperimentKind::DelayGap if self.eps.is_empty() => {
                bad("eps".into(), "at least one delay is required".into());
            }
            _ => {}
        }
        if matches!(self.kind, ExperimentKind::Continuity | ExperimentKind::DelayGap) {
            for (i, &eps) in self.eps.iter().enumerate() {
                check_eps(format!("eps[{i}]"), eps, &mut bad);
            }
        }
        if self.kind == ExperimentKind::Continuity && !self.hurst.contains(&0.5) {
            bad("hurst".into(), "must contain 0.5, the Brownian reference arm".into());
        }
        if self.kind == ExperimentKind::NoArbitrage {
            if self.family.is_empty() {
                bad("family".into(), "at least one strategy is required".into());
            }
            let mut names = std::collections::BTreeSet::new();
            for (i, m) in self.family.iter().enumerate() {
                if !names.insert(m.name.clone()) {
                    bad(format!("family[{i}].name"), format!("duplicate member name '{}'", m.name));
                }
                if m.name.is_empty() || !m.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                    bad(format!("family[{i}].name"), "use letters, digits, '-', '_' or '.'".into());
                }
                match (m.class, m.eps) {
                    (StrategyClass::Adapted, Some(_)) => {
                        bad(format!("family[{i}].eps"), "adapted strategies take no delay".into())
                    }
                    (StrategyClass::Adapted, None) => {}
                    (_, None) => bad(format!("family[{i}].eps"), "delay is required".into()),
                    (_, Some(eps)) => check_eps(format!("family[{i}].eps"), eps, &mut bad),
                }
                if m.times.is_some() && m.class != StrategyClass::Piecewise {
                    bad(format!("family[{i}].times"), "only piecewise strategies take rebalance times".into());
                }
                if m.lag.is_some() && m.rule != RuleName::Momentum {
                    bad(format!("family[{i}].lag"), "only the momentum rule takes a lag".into());
                }
                if m.lag == Some(0) {
                    bad(format!("family[{i}].lag"), "lag must be positive".into());
                }
                if m.class == StrategyClass::Piecewise && m.eps.is_some_and(|e| e > 0.0) {
                    for g in &grids {
                        if g.whole_steps(m.eps.unwrap()) == 0 {
                            continue;
                        }
                        if let Err(e) = m.kind().observation_schedule(g) {
                            bad(format!("family[{i}].times"), format!("N = {}: {e}", g.steps()));
                        }
                    }
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }

    /// Canonical JSON text of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Self::canonical_json`].
    pub fn checksum(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        for kind in [
            ExperimentKind::Arbitrage,
            ExperimentKind::Continuity,
            ExperimentKind::DelayGap,
            ExperimentKind::NoArbitrage,
        ] {
            let cfg = ExperimentConfig::from_toml(kind, "").unwrap();
            assert_eq!(cfg, ExperimentConfig::defaults(kind));
        }
    }

    #[test]
    fn overrides_apply() {
        let cfg = ExperimentConfig::from_toml(
            ExperimentKind::DelayGap,
            "hurst = [0.6]\neps = [0.5]\nsteps = [64, 16]\nreplicates = 200\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.hurst, vec![0.6]);
        assert_eq!(cfg.steps, vec![16, 64]);
        assert_eq!(cfg.seed, 3);
    }

    fn issues(kind: ExperimentKind, text: &str) -> Vec<FieldIssue> {
        match ExperimentConfig::from_toml(kind, text) {
            Err(ConfigError::Invalid(v)) => v,
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn delay_below_step_is_named() {
        let v = issues(ExperimentKind::DelayGap, "eps = [0.1, 0.0001]\nsteps = [1024]\n");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "eps[1]");
        assert!(v[0].message.contains("shorter than the grid step"), "{}", v[0].message);
    }

    #[test]
    fn several_issues_reported_together() {
        let v = issues(ExperimentKind::Arbitrage, "hurst = [1.2, 0.4]\nsteps = [100, 30]\nreplicates = 10\n");
        let paths: Vec<&str> = v.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(paths, ["hurst[0]", "hurst[1]", "steps[0]", "replicates"]);
    }

    #[test]
    fn family_checks() {
        let text = r#"
[[family]]
name = "a"
class = "delayed"
rule = "quadratic"

[[family]]
name = "a"
class = "piecewise"
eps = 0.3
times = [0.0, 0.1]
rule = "sign"
"#;
        let v = issues(ExperimentKind::NoArbitrage, text);
        let paths: Vec<&str> = v.iter().map(|i| i.path.as_str()).collect();
        assert_eq!(paths, ["family[0].eps", "family[1].name", "family[1].times"]);
    }

    #[test]
    fn unknown_keys_and_kind_mismatch_fail() {
        assert!(matches!(
            ExperimentConfig::from_toml(ExperimentKind::Arbitrage, "hurts = [0.6]"),
            Err(ConfigError::Parse(_))
        ));
        let v = issues(ExperimentKind::Arbitrage, "kind = \"continuity\"");
        assert_eq!(v[0].path, "kind");
    }

    #[test]
    fn continuity_needs_the_brownian_arm() {
        let v = issues(ExperimentKind::Continuity, "hurst = [0.6, 0.75]");
        assert_eq!(v[0].path, "hurst");
    }

    #[test]
    fn checksum_tracks_the_parsed_config() {
        let a = ExperimentConfig::from_toml(ExperimentKind::Arbitrage, "seed = 1").unwrap();
        let b = ExperimentConfig::from_toml(ExperimentKind::Arbitrage, "# comment\nseed = 1\n").unwrap();
        let c = ExperimentConfig::from_toml(ExperimentKind::Arbitrage, "seed = 2").unwrap();
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
        assert_eq!(a.checksum().len(), 64);
    }
}
