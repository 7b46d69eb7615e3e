//! Per-tick metrics rows and their CSV form.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::agent::AgentConfig;
use crate::cycle::TraceEntry;
use crate::lang::Pad;

pub const CSV_HEADER: &str =
    "tick,agent,pleasure,arousal,norm_id,relevance,action,variant,society_pleasure,society_arousal";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub tick: u64,
    pub agent: String,
    pub pleasure: f64,
    pub arousal: f64,
    /// Norm decided on this tick, else the first known norm.
    pub norm_id: Option<String>,
    pub relevance: Option<f64>,
    /// Body step executed this tick.
    pub action: Option<String>,
    pub variant: Option<String>,
    pub society_pleasure: f64,
    pub society_arousal: f64,
}

/// Componentwise mean of the agents' affective states.
pub fn society_mood<'a>(sigmas: impl IntoIterator<Item = &'a Pad>) -> Pad {
    let (mut p, mut a, mut n) = (0.0, 0.0, 0usize);
    for s in sigmas {
        p += s.pleasure;
        a += s.arousal;
        n += 1;
    }
    if n == 0 {
        return Pad::ZERO;
    }
    Pad::new(p / n as f64, a / n as f64)
}

/// Row for one agent after tick `tick`; `trace` is that agent's trace for
/// the tick (empty for the initial row).
pub fn row(agent: &AgentConfig, tick: u64, trace: &[TraceEntry], mood: Pad) -> MetricsRow {
    let decision = agent.decisions.iter().rev().find(|d| d.cycle == tick && !trace.is_empty());
    let nb = match decision {
        Some(d) => agent.ag.norm(&d.norm),
        None => agent.ag.nb.first(),
    };
    let action = trace
        .iter()
        .filter(|e| e.step == "ExecInt")
        .filter_map(|e| e.payload.as_ref()?.get("step").and_then(Value::as_str))
        .next_back()
        .map(str::to_string);
    MetricsRow {
        tick,
        agent: agent.id.clone(),
        pleasure: agent.ta.sigma.pleasure,
        arousal: agent.ta.sigma.arousal,
        norm_id: nb.map(|n| n.id.clone()),
        relevance: nb.map(|n| n.rel),
        action,
        variant: decision.map(|d| d.variant.to_string()),
        society_pleasure: mood.pleasure,
        society_arousal: mood.arousal,
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
