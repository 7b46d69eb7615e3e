//! Scenario files: TOML describing the agents, norm injections, observer
//! preferences and numeric knobs of a run.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::agent::{AgentSettings, Audience};
use crate::lang::{
    parse_agent_program, parse_feedback, parse_norm_literal, AgentProgram, CondLit, LangError,
    NormDecl, Pad,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{path}:{error}")]
    Agent { path: PathBuf, error: LangError },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Knobs {
    pub delta: f64,
    pub decay_affect: f64,
    pub decay_relevance: f64,
    pub relevance_threshold: f64,
    pub deviation_threshold: f64,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            delta: 0.1,
            decay_affect: 0.05,
            decay_relevance: 0.05,
            relevance_threshold: 25.0,
            deviation_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: String,
    /// Path of the `.nea` program, relative to the scenario file.
    pub source: PathBuf,
    #[serde(default)]
    pub roles: Vec<String>,
    #[serde(default)]
    pub public_beliefs: Vec<String>,
    /// Roles that receive this agent's public-state digests; empty means all.
    #[serde(default)]
    pub state_audience: Vec<String>,
    #[serde(default)]
    pub observer: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub tick: u64,
    pub sender: String,
    pub norm: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preference {
    /// `(+lit;-lit;...)`
    pub condition: String,
    pub pair: [f64; 2],
    /// Overrides the observer-wide response probability.
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverConfig {
    /// Reaction to seeing a norm complied with; a violation gets the opposite.
    pub compliance_pair: [f64; 2],
    pub response_probability: f64,
    pub preferences: Vec<Preference>,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            compliance_pair: [0.1, 0.1],
            response_probability: 1.0,
            preferences: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ticks")]
    pub ticks: u64,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub knobs: Knobs,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub injections: Vec<Injection>,
    #[serde(default)]
    pub observer: ObserverConfig,
}

fn default_ticks() -> u64 {
    300
}

/// Parses `(+a;-b)` into its conjuncts.
pub fn parse_condition(text: &str) -> Result<Vec<CondLit>, LangError> {
    parse_feedback(&format!("{text},[0,0]")).map(|f| f.condition)
}

impl ScenarioConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<ScenarioConfig, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn settings_for(&self, spec: &AgentSpec) -> AgentSettings {
        let k = &self.knobs;
        AgentSettings {
            relevance_threshold: k.relevance_threshold,
            delta: k.delta,
            decay_affect: k.decay_affect,
            decay_relevance: k.decay_relevance,
            deviation_threshold: Pad::new(k.deviation_threshold, k.deviation_threshold),
            public_beliefs: spec.public_beliefs.clone(),
            state_audience: if spec.state_audience.is_empty() {
                Audience::All
            } else {
                Audience::Roles(spec.state_audience.clone())
            },
            ..AgentSettings::default()
        }
    }

    /// Checks every knob range and cross-reference.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let k = &self.knobs;
        if !(k.delta >= 0.0 && k.delta.is_finite()) {
            return bad(format!("delta must be >= 0, got {}", k.delta));
        }
        if !(0.0..=1.0).contains(&k.decay_affect) {
            return bad(format!("decay_affect must lie in [0,1], got {}", k.decay_affect));
        }
        if !(k.decay_relevance >= 0.0 && k.decay_relevance.is_finite()) {
            return bad(format!("decay_relevance must be >= 0, got {}", k.decay_relevance));
        }
        if !(k.relevance_threshold >= 0.0 && k.relevance_threshold.is_finite()) {
            return bad(format!(
                "relevance_threshold must be >= 0, got {}",
                k.relevance_threshold
            ));
        }
        if !(k.deviation_threshold > 0.0 && k.deviation_threshold.is_finite()) {
            return bad(format!(
                "deviation_threshold must be > 0, got {}",
                k.deviation_threshold
            ));
        }
        if self.agents.is_empty() {
            return bad("a scenario needs at least one agent".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        for a in &self.agents {
            if a.id.is_empty() || a.id.contains(['\t', '\n', '#']) {
                return bad(format!("agent id {:?} is not allowed", a.id));
            }
            if !ids.insert(a.id.as_str()) {
                return bad(format!("duplicate agent id {}", a.id));
            }
        }
        for inj in &self.injections {
            if !ids.contains(inj.sender.as_str()) {
                return bad(format!("injection sender {} is not an agent", inj.sender));
            }
            if let Err(e) = parse_norm_literal(&inj.norm) {
                return bad(format!("injection at tick {}: {e}", inj.tick));
            }
        }
        let o = &self.observer;
        let pair_ok = |p: [f64; 2]| p.iter().all(|v| (-1.0..=1.0).contains(v));
        if !pair_ok(o.compliance_pair) {
            return bad("observer compliance_pair must lie in [-1,1]²".into());
        }
        if !(0.0..=1.0).contains(&o.response_probability) {
            return bad("observer response_probability must lie in [0,1]".into());
        }
        for p in &o.preferences {
            if let Err(e) = parse_condition(&p.condition) {
                return bad(format!("preference condition {}: {e}", p.condition));
            }
            if !pair_ok(p.pair) {
                return bad(format!("preference pair for {} must lie in [-1,1]²", p.condition));
            }
            if p.probability.is_some_and(|q| !(0.0..=1.0).contains(&q)) {
                return bad(format!("preference probability for {} must lie in [0,1]", p.condition));
            }
        }
        Ok(())
    }

    pub fn injected_norms(&self) -> Vec<NormDecl> {
        self.injections
            .iter()
            .filter_map(|i| parse_norm_literal(&i.norm).ok())
            .collect()
    }
}

/// A validated scenario with its agent programs loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub programs: Vec<AgentProgram>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config = ScenarioConfig::from_toml(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut programs = Vec::new();
        for spec in &config.agents {
            let p = base.join(&spec.source);
            let src = std::fs::read_to_string(&p).map_err(|source| ConfigError::Io {
                path: p.clone(),
                source,
            })?;
            let prog = parse_agent_program(&src).map_err(|error| ConfigError::Agent {
                path: p.clone(),
                error,
            })?;
            programs.push(prog);
        }
        Scenario::new(config, programs)
    }

    pub fn new(config: ScenarioConfig, programs: Vec<AgentProgram>) -> Result<Scenario, ConfigError> {
        if programs.len() != config.agents.len() {
            return Err(ConfigError::Invalid(format!(
                "{} agents declared but {} programs given",
                config.agents.len(),
                programs.len()
            )));
        }
        config.validate()?;
        Ok(Scenario { config, programs })
    }

    /// Roles of each agent: those in its program plus those in the scenario.
    pub fn roles(&self) -> Vec<(String, Vec<String>)> {
        self.config
            .agents
            .iter()
            .zip(&self.programs)
            .map(|(spec, prog)| {
                let mut roles = prog.roles.clone();
                for r in &spec.roles {
                    if !roles.contains(r) {
                        roles.push(r.clone());
                    }
                }
                (spec.id.clone(), roles)
            })
            .collect()
    }
}
