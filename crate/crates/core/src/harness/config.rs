//! Experiment configuration: TOML text, dotted-path overrides, validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::OraclePalette;
use crate::error::{Result, SearchError};
use crate::obs::{Dynamics, HmmParams};
use crate::policy::{
    BaselineLlrMode, BeliefSource, PolicyConfig, PolicyKind, PolicyModel, DEFAULT_LLR_CLAMP,
};
use crate::{Distribution, Hmm, Palette};

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_HORIZON: usize = 1_000_000;

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_grid() -> Vec<f64> {
    (1..=30).map(f64::from).collect()
}

fn default_clamp() -> f64 {
    DEFAULT_LLR_CLAMP
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorldSpec {
    /// The anomalous cell follows the hidden Markov chain.
    #[default]
    Hmm,
    /// Each step the anomalous cell draws a palette level `P_d` and emits
    /// from `P_d·f + (1 − P_d)·g`; `d` is revealed to oracle policies.
    Oracle { palette: Palette },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Name used in output rows and seed derivation; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub p_th: f64,
    /// Absolute idle cost per step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Idle cost as a multiple of `c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_per_c: Option<f64>,
    #[serde(default)]
    pub belief_source: BeliefSource,
    #[serde(default)]
    pub llr_mode: BaselineLlrMode,
    #[serde(default = "default_clamp")]
    pub llr_clamp: f64,
    #[serde(default)]
    pub explore: f64,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            label: None,
            p_th: 0.0,
            gamma: None,
            gamma_per_c: None,
            belief_source: BeliefSource::default(),
            llr_mode: BaselineLlrMode::default(),
            llr_clamp: DEFAULT_LLR_CLAMP,
            explore: 0.0,
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.label())
    }

    /// Idle cost at observation cost `c`.
    pub fn gamma_at(&self, c: f64) -> f64 {
        match (self.gamma, self.gamma_per_c) {
            (Some(g), _) => g,
            (None, Some(ratio)) => ratio * c,
            (None, None) => 0.0,
        }
    }

    pub fn policy_config(&self, cells: usize, probes: usize, c: f64) -> PolicyConfig<f64> {
        let mut config = PolicyConfig::new(self.kind, cells, probes, c);
        config.p_th = self.p_th;
        config.gamma = self.gamma_at(c);
        config.baseline_llr_mode = self.llr_mode;
        config.belief_source = self.belief_source;
        config.llr_clamp = self.llr_clamp;
        config.explore = self.explore;
        config
    }
}

/// Settings of the `verify` suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub tol: f64,
    pub seed: u64,
    pub kl_pairs: usize,
    pub mixture_instances: usize,
    pub palettes: usize,
    pub oracle_trials: usize,
    pub oracle_neg_log_c: Vec<f64>,
    /// Allowed band for `avg_delay · I* / (−ln c)` at the largest `−ln c`.
    pub oracle_band: [f64; 2],
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            seed: 7,
            kl_pairs: 100,
            mixture_instances: 500,
            palettes: 200,
            oracle_trials: 1000,
            oracle_neg_log_c: vec![10.0, 15.0, 20.0, 25.0],
            oracle_band: [0.8, 1.2],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub cells: usize,
    pub probes: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Grid of `−ln c` values, ascending (so `c` is descending).
    #[serde(default = "default_grid")]
    pub neg_log_c: Vec<f64>,
    /// Law of normal cells, `f`.
    pub normal: Distribution,
    /// Law of the anomalous cell in the abnormal state, `g`.
    pub anomalous: Distribution,
    pub hmm: Hmm,
    #[serde(default)]
    pub world: WorldSpec,
    pub policies: Vec<PolicySpec>,
    #[serde(default)]
    pub verify: VerifySettings,
}

impl ExperimentConfig {
    /// Parse TOML, apply `key.path=value` overrides, and validate.
    pub fn from_toml(text: &str, origin: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            SearchError::ConfigParse {
                path: origin.to_string(),
                message: e.to_string(),
            }
        })?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            SearchError::ConfigParse {
                path: origin.to_string(),
                message: e.to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SearchError::Io {
            context: format!("reading config {}", path.display()),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Observation costs `c = e^{−v}` for the grid, largest first.
    pub fn costs(&self) -> Vec<f64> {
        self.neg_log_c.iter().map(|v| (-v).exp()).collect()
    }

    pub fn dynamics(&self) -> Dynamics<f64> {
        match &self.world {
            WorldSpec::Hmm => Dynamics::Hmm(self.hmm),
            WorldSpec::Oracle { palette } => Dynamics::Oracle(palette.clone()),
        }
    }

    pub fn palette(&self) -> Option<&OraclePalette<f64>> {
        match &self.world {
            WorldSpec::Hmm => None,
            WorldSpec::Oracle { palette } => Some(palette),
        }
    }

    pub fn policy_model(&self, spec: &PolicySpec) -> PolicyModel<f64> {
        PolicyModel::new(
            self.normal.clone(),
            self.anomalous.clone(),
            self.hmm,
            self.palette().cloned(),
            spec.llr_mode,
        )
    }

    pub fn policy(&self, label: &str) -> Option<&PolicySpec> {
        self.policies.iter().find(|p| p.label() == label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 2 {
            return Err(SearchError::invalid(
                "cells",
                format!("need at least 2 cells for the stopping rule, got {}", self.cells),
            ));
        }
        if self.probes == 0 || self.probes > self.cells {
            return Err(SearchError::invalid(
                "probes",
                format!("must lie in 1..={}, got {}", self.cells, self.probes),
            ));
        }
        if self.trials == 0 {
            return Err(SearchError::invalid("trials", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(SearchError::invalid("horizon", "must be at least 1"));
        }
        if self.neg_log_c.is_empty() {
            return Err(SearchError::invalid("neg_log_c", "grid is empty"));
        }
        for (i, v) in self.neg_log_c.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                return Err(SearchError::invalid(
                    format!("neg_log_c[{i}]"),
                    format!("must be finite and > 0 (so that 0 < c < 1), got {v}"),
                ));
            }
            if i > 0 && *v <= self.neg_log_c[i - 1] {
                return Err(SearchError::invalid(
                    format!("neg_log_c[{i}]"),
                    "grid must be strictly ascending (c strictly descending)",
                ));
            }
        }
        self.normal.validate().map_err(|e| e.within("normal"))?;
        self.anomalous.validate().map_err(|e| e.within("anomalous"))?;
        if self.normal.support_kind() != self.anomalous.support_kind() {
            return Err(SearchError::invalid(
                "anomalous",
                format!(
                    "{} law cannot be paired with a {} normal law",
                    self.anomalous.name(),
                    self.normal.name()
                ),
            ));
        }
        HmmParams::degenerate(self.hmm.alpha, self.hmm.beta).map_err(|e| e.within("hmm"))?;
        if self.hmm.alpha + self.hmm.beta <= 0.0 {
            return Err(SearchError::invalid(
                "hmm",
                "alpha + beta must be > 0 for a stationary law",
            ));
        }
        if let WorldSpec::Oracle { palette } = &self.world {
            palette.validate().map_err(|e| e.within("world.palette"))?;
        }
        if self.policies.is_empty() {
            return Err(SearchError::invalid("policies", "at least one policy is required"));
        }
        for (i, spec) in self.policies.iter().enumerate() {
            self.validate_policy(spec).map_err(|e| e.within(&format!("policies[{i}]")))?;
            if self.policies[..i].iter().any(|p| p.label() == spec.label()) {
                return Err(SearchError::invalid(
                    format!("policies[{i}].label"),
                    format!("duplicate label {:?}", spec.label()),
                ));
            }
        }
        self.verify.validate().map_err(|e| e.within("verify"))?;
        Ok(())
    }

    fn validate_policy(&self, spec: &PolicySpec) -> Result<()> {
        if spec.gamma.is_some() && spec.gamma_per_c.is_some() {
            return Err(SearchError::invalid("gamma", "set either gamma or gamma_per_c, not both"));
        }
        if let Some(r) = spec.gamma_per_c {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(SearchError::invalid("gamma_per_c", format!("must be >= 0, got {r}")));
            }
        }
        if spec.kind == PolicyKind::AdhmOracle && self.palette().is_none() {
            return Err(SearchError::invalid(
                "kind",
                "adhm_oracle needs an oracle world (world.mode = \"oracle\")",
            ));
        }
        if spec.label().is_empty() {
            return Err(SearchError::invalid("label", "must not be empty"));
        }
        for c in self.costs() {
            spec.policy_config(self.cells, self.probes, c).validate()?;
        }
        Ok(())
    }
}

impl VerifySettings {
    fn validate(&self) -> Result<()> {
        if self.oracle_neg_log_c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SearchError::invalid("oracle_neg_log_c", "values must be finite and > 0"));
        }
        if self.oracle_band[0] > self.oracle_band[1] {
            return Err(SearchError::invalid("oracle_band", "lower bound exceeds upper bound"));
        }
        Ok(())
    }
}

/// Apply one `a.b.c=value` override. The value is read as a TOML literal
/// when it parses as one, otherwise as a bare string. Numeric segments index
/// into arrays (`policies.1.p_th=0.5`).
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (path, raw) = item.split_once('=').ok_or_else(|| {
        SearchError::invalid("--set", format!("expected key=value, got {item:?}"))
    })?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(SearchError::invalid("--set", format!("malformed key path {path:?}")));
    }
    let value = parse_literal(raw.trim());
    let segments: Vec<&str> = path.split('.').collect();
    let (last, parents) = segments.split_last().expect("non-empty path");

    let mut node: &mut toml::Value = table_entry(table, parents.first().copied(), last)?;
    if parents.is_empty() {
        *node = value;
        return Ok(());
    }
    for (depth, seg) in parents.iter().enumerate().skip(1) {
        node = descend(node, seg, &segments[..=depth].join("."))?;
    }
    match node {
        toml::Value::Table(t) => {
            t.insert((*last).to_string(), value);
        }
        toml::Value::Array(a) => {
            let slot = index_into(a, last, path)?;
            *slot = value;
        }
        _ => {
            return Err(SearchError::invalid(
                path,
                "cannot set a field inside a scalar value",
            ))
        }
    }
    Ok(())
}

fn table_entry<'a>(
    table: &'a mut toml::Table,
    first_parent: Option<&str>,
    last: &str,
) -> Result<&'a mut toml::Value> {
    let key = first_parent.unwrap_or(last);
    let default = if first_parent.is_some() {
        toml::Value::Table(toml::Table::new())
    } else {
        toml::Value::Boolean(false)
    };
    Ok(table.entry(key.to_string()).or_insert(default))
}

fn descend<'a>(node: &'a mut toml::Value, seg: &str, at: &str) -> Result<&'a mut toml::Value> {
    match node {
        toml::Value::Table(t) => Ok(t
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))),
        toml::Value::Array(a) => index_into(a, seg, at),
        _ => Err(SearchError::invalid(at, "cannot descend into a scalar value")),
    }
}

fn index_into<'a>(array: &'a mut [toml::Value], seg: &str, at: &str) -> Result<&'a mut toml::Value> {
    let len = array.len();
    let i: usize = seg
        .parse()
        .map_err(|_| SearchError::invalid(at, format!("{seg:?} is not an array index")))?;
    array
        .get_mut(i)
        .ok_or_else(|| SearchError::invalid(at, format!("index {i} out of range ({len} entries)")))
}

fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
cells = 4
probes = 2
trials = 10
neg_log_c = [1, 2.5]

[normal]
kind = "exponential"
rate = 0.5

[anomalous]
kind = "exponential"
rate = 10.0

[hmm]
alpha = 0.9
beta = 0.9

[[policies]]
kind = "adhm"

[[policies]]
kind = "adhm_p"
p_th = 0.7
gamma_per_c = 2.0
"#;

    fn parse(overrides: &[&str]) -> Result<ExperimentConfig> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        ExperimentConfig::from_toml(MINIMAL, "minimal", &o)
    }

    fn field_of(err: SearchError) -> String {
        match err {
            SearchError::InvalidParameter { field, .. } => field,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse(&[]).unwrap();
        assert_eq!(c.horizon, DEFAULT_HORIZON);
        assert_eq!(c.world, WorldSpec::Hmm);
        assert_eq!(c.policies[0].label(), "ADHM");
        assert_eq!(c.policies[1].gamma_at(0.01), 0.02);
        assert_eq!(c.costs()[0], (-1.0f64).exp());
        assert_eq!(c.verify, VerifySettings::default());
    }

    #[test]
    fn overrides_reach_nested_and_indexed_fields() {
        let c = parse(&["trials=3", "hmm.alpha=0.2", "policies.1.p_th=0.5", "name=renamed"]).unwrap();
        assert_eq!(c.trials, 3);
        assert_eq!(c.hmm.alpha, 0.2);
        assert_eq!(c.policies[1].p_th, 0.5);
        assert_eq!(c.name, "renamed");
        let c = parse(&["neg_log_c=[3, 4]", "world.mode=oracle", "world.palette.levels=[0.2]", "world.palette.weights=[1.0]"]).unwrap();
        assert_eq!(c.neg_log_c, vec![3.0, 4.0]);
        assert!(c.palette().is_some());
    }

    #[test]
    fn validation_names_the_field() {
        let cases = [
            ("cells=1", "cells"),
            ("probes=5", "probes"),
            ("trials=0", "trials"),
            ("neg_log_c=[2, 1]", "neg_log_c[1]"),
            ("neg_log_c=[0]", "neg_log_c[0]"),
            ("hmm.alpha=1.5", "hmm.alpha"),
            ("normal.rate=-1", "normal.rate"),
            ("policies.1.p_th=2", "policies[1].p_th"),
            ("policies.1.gamma=0.1", "policies[1].gamma"),
            ("policies.0.kind=adhm_oracle", "policies[0].kind"),
            ("policies.1.label=ADHM", "policies[1].label"),
        ];
        for (item, field) in cases {
            let err = parse(&[item]).unwrap_err();
            assert_eq!(field_of(err), field, "{item}");
        }
    }

    #[test]
    fn malformed_text_and_overrides_are_config_errors() {
        assert!(matches!(
            ExperimentConfig::from_toml("cells = [", "x", &[]),
            Err(SearchError::ConfigParse { .. })
        ));
        assert!(matches!(parse(&["unknown_key=1"]), Err(SearchError::ConfigParse { .. })));
        assert!(parse(&["no_equals_sign"]).unwrap_err().is_config_error());
        assert!(parse(&["policies.9.p_th=1"]).unwrap_err().is_config_error());
        assert!(parse(&["trials.x=1"]).unwrap_err().is_config_error());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = parse(&[]).unwrap();
        let again = ExperimentConfig::from_toml(&c.to_toml(), "rt", &[]).unwrap();
        assert_eq!(c, again);
    }
}
