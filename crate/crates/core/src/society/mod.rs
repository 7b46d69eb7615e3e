//! A society of agents stepped in lock-step ticks over a message bus.

pub mod metrics;
pub mod observer;
pub mod scenario;
pub mod sweep;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::agent::{AgentConfig, Audience, Message, RoleRegistry};
use crate::cycle::{run_cycle, Environment, InterpreterFault, TraceEntry};
use crate::lang::{AffectedRoles, Literal, Pad};

pub use metrics::{society_mood, MetricsRow, CSV_HEADER};
pub use observer::observer_react;
pub use scenario::{ConfigError, Scenario, ScenarioConfig};

#[derive(Debug, Error)]
pub enum SocietyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// The trace up to and including the faulting tick.
    #[error("{fault}")]
    Fault {
        fault: InterpreterFault,
        trace: Vec<TraceEntry>,
    },
}

/// |agents holding an affected role| / |agents|.
pub fn fraction_affected(affected: &AffectedRoles, registry: &RoleRegistry) -> f64 {
    registry.fraction_affected(affected)
}

#[derive(Debug, Clone)]
pub struct SocietyState {
    pub config: ScenarioConfig,
    pub agents: Vec<AgentConfig>,
    pub observers: Vec<bool>,
    pub registry: RoleRegistry,
    /// Next tick to run.
    pub tick: u64,
    /// Sent last tick, delivered at the start of the next.
    pub bus: Vec<Message>,
    rngs: Vec<ChaCha8Rng>,
    percepts: BTreeSet<Literal>,
}

/// What one tick did.
#[derive(Debug, Clone, Default)]
pub struct TickReport {
    pub trace: Vec<TraceEntry>,
    pub rows: Vec<MetricsRow>,
    /// (recipient, message id) in delivery order.
    pub delivered: Vec<(String, String)>,
    pub sent: Vec<Message>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SocietyState,
    /// One row per agent before the first tick.
    pub initial: Vec<MetricsRow>,
    pub metrics: Vec<MetricsRow>,
    pub trace: Vec<TraceEntry>,
}

type AgentTick = Result<(Vec<TraceEntry>, Vec<Message>), InterpreterFault>;

fn agent_tick(
    agent: &mut AgentConfig,
    rng: &mut ChaCha8Rng,
    observer: bool,
    cfg: &ScenarioConfig,
    env: &Environment,
) -> AgentTick {
    let mut trace = Vec::new();
    if observer {
        let n = env.registry.len();
        let inbox = std::mem::take(&mut agent.m.inbox);
        for msg in inbox {
            if !observer::is_observation(&msg) {
                agent.m.inbox.push_back(msg);
                continue;
            }
            let out = observer_react(agent, &msg, &cfg.observer, rng, n);
            trace.push(TraceEntry {
                tick: env.tick,
                agent: agent.id.clone(),
                step: "Observe".into(),
                summary: format!("{} from {}: {} repl{}", msg.content, msg.sender, out.len(),
                                 if out.len() == 1 { "y" } else { "ies" }),
                payload: Some(serde_json::json!({
                    "mid": msg.mid,
                    "sender": msg.sender,
                    "content": msg.content,
                    "replies": out.iter().map(|m| &m.content).collect::<Vec<_>>(),
                })),
            });
            agent.m.outbox.extend(out);
        }
    }
    trace.extend(run_cycle(agent, env)?);
    Ok((trace, std::mem::take(&mut agent.m.outbox)))
}

impl SocietyState {
    pub fn new(scenario: &Scenario) -> SocietyState {
        let config = scenario.config.clone();
        let roles = scenario.roles();
        let registry = RoleRegistry::new(roles.clone());
        let mut agents = Vec::new();
        let mut rngs = Vec::new();
        for (i, ((spec, prog), (_, roles))) in config
            .agents
            .iter()
            .zip(&scenario.programs)
            .zip(roles)
            .enumerate()
        {
            let mut a = AgentConfig::new(spec.id.clone(), prog, config.settings_for(spec));
            a.roles = roles;
            agents.push(a);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            rngs.push(rng);
        }
        SocietyState {
            observers: config.agents.iter().map(|a| a.observer).collect(),
            config,
            agents,
            registry,
            tick: 0,
            bus: Vec::new(),
            rngs,
            percepts: BTreeSet::new(),
        }
    }

    pub fn mood(&self) -> Pad {
        society_mood(self.agents.iter().map(|a| &a.ta.sigma))
    }

    pub fn agent(&self, id: &str) -> Option<&AgentConfig> {
        self.agents.iter().find(|a| a.id == id)
    }

    fn deliver(&mut self, msg: &Message, report: &mut TickReport) {
        for to in self.registry.recipients(&msg.sender, &msg.to) {
            if let Some(a) = self.agents.iter_mut().find(|a| a.id == to) {
                a.m.inbox.push_back(msg.clone());
                report.delivered.push((to, msg.mid.clone()));
            }
        }
    }

    /// Rows describing every agent now, without running anything.
    pub fn initial_rows(&self) -> Vec<MetricsRow> {
        let mood = self.mood();
        self.agents
            .iter()
            .map(|a| metrics::row(a, self.tick, &[], mood))
            .collect()
    }

    /// Delivers the bus and this tick's injections, runs one cycle per agent
    /// in declaration order and queues what they sent.
    pub fn step_tick(&mut self) -> Result<TickReport, (InterpreterFault, TickReport)> {
        let tick = self.tick;
        let mut report = TickReport::default();

        let injections: Vec<Message> = self
            .config
            .injections
            .iter()
            .enumerate()
            .filter(|(_, inj)| inj.tick == tick)
            .map(|(k, inj)| {
                Message::tell(format!("{}#inj{k}", inj.sender), &inj.sender, Audience::All, inj.norm.clone())
            })
            .collect();
        let bus = std::mem::take(&mut self.bus);
        for msg in injections.iter().chain(&bus) {
            self.deliver(msg, &mut report);
        }

        let env = Environment {
            tick,
            percepts: &self.percepts,
            registry: &self.registry,
        };
        let cfg = &self.config;
        let results: Vec<AgentTick> = if cfg.parallel {
            self.agents
                .par_iter_mut()
                .zip(self.rngs.par_iter_mut())
                .zip(self.observers.par_iter().copied())
                .map(|((a, r), o)| agent_tick(a, r, o, cfg, &env))
                .collect()
        } else {
            self.agents
                .iter_mut()
                .zip(self.rngs.iter_mut())
                .zip(self.observers.iter().copied())
                .map(|((a, r), o)| agent_tick(a, r, o, cfg, &env))
                .collect()
        };

        let mut traces = Vec::new();
        for res in results {
            match res {
                Ok((trace, sent)) => {
                    report.trace.extend(trace.iter().cloned());
                    report.sent.extend(sent);
                    traces.push(trace);
                }
                Err(fault) => return Err((fault, report)),
            }
        }
        let mood = self.mood();
        report.rows = self
            .agents
            .iter()
            .zip(&traces)
            .map(|(a, t)| metrics::row(a, tick, t, mood))
            .collect();
        self.bus = report.sent.clone();
        self.tick += 1;
        Ok(report)
    }
}

/// Runs the configured number of ticks.
pub fn run(scenario: &Scenario) -> Result<RunOutput, SocietyError> {
    scenario.config.validate()?;
    let mut state = SocietyState::new(scenario);
    let initial = state.initial_rows();
    let mut metrics = Vec::new();
    let mut trace = Vec::new();
    for _ in 0..scenario.config.ticks {
        match state.step_tick() {
            Ok(r) => {
                trace.extend(r.trace);
                metrics.extend(r.rows);
            }
            Err((fault, r)) => {
                trace.extend(r.trace);
                return Err(SocietyError::Fault { fault, trace });
            }
        }
    }
    Ok(RunOutput {
        state,
        initial,
        metrics,
        trace,
    })
}

/// Trace as tab-separated lines.
pub fn trace_text(trace: &[TraceEntry]) -> String {
    let mut s = String::new();
    for e in trace {
        s.push_str(&e.text_line());
        s.push('\n');
    }
    s
}

/// Trace as one JSON object per line.
pub fn trace_jsonl(trace: &[TraceEntry]) -> String {
    let mut s = String::new();
    for e in trace {
        s.push_str(&serde_json::to_string(e).expect("trace entries serialize"));
        s.push('\n');
    }
    s
}
