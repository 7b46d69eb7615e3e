//! Fixtures, brute-force oracles and the scenario arc checker shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde_json::Value;

use nea_core::agent::{AgentConfig, AgentSettings, NormativeBelief};
use nea_core::lang::{parse_agent_program, parse_norm_literal, Deontic, Pad, PlanDef, TriggerKind};
use nea_core::norm::admit_norm;

pub mod fuzz;
pub mod ordering;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn mask_scenario() -> PathBuf {
    workspace_root().join("scenarios/mask/scenario.toml")
}

/// Every `.nea` file of the test corpus plus the shipped scenario agents.
pub fn corpus_files() -> Vec<PathBuf> {
    let mut out = Vec::new();
    for dir in [
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus"),
        workspace_root().join("scenarios/mask"),
    ] {
        for e in std::fs::read_dir(&dir).expect("corpus dir") {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "nea") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// Norm fixtures
// ---------------------------------------------------------------------------

/// A normative belief for `np__<trigger> <- <action>.` admitted into a blank
/// agent, with the given operator, limit and relevance.
pub fn norm_belief(trigger: &str, action: &str, deontic: &str, l: u64, rel: f64, pa: Pad) -> NormativeBelief {
    let text = format!(
        r#"norm("{deontic}", "np__{trigger} <- {action}.", {l}, {rel}, "ALL", [{}, {}])"#,
        pa.pleasure, pa.arousal
    );
    let decl = parse_norm_literal(&text).expect("fixture norm parses");
    let mut agent = AgentConfig::new("fixture", &parse_agent_program("x.").unwrap(), AgentSettings::default());
    admit_norm(&mut agent.ag, &decl, None).unwrap();
    agent.ag.nb.pop().unwrap()
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Obligation,
    Prohibition,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Within,
    Expired,
    Unbounded,
}

/// The three-row table: who owns the action, and whether its limit has
/// passed.
pub fn comply_table(owner: Owner, window: Window, pa: Pad) -> Option<Pad> {
    match (owner, window) {
        (Owner::None, _) | (_, Window::Expired) => None,
        (Owner::Obligation, _) => Some(pa),
        (Owner::Prohibition, _) => Some(Pad::new(-pa.pleasure, -pa.arousal)),
    }
}

/// Description of one applicable plan for the ordering oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanKind {
    pub name: &'static str,
    /// None for a plain plan.
    pub deontic: Option<Deontic>,
    pub active: bool,
    pub selected: bool,
    /// Remaining cycles; None when the norm never expires.
    pub remaining: Option<u64>,
}

/// Stratified order by bucketing: obligations by remaining cycles, then
/// prohibitions likewise, then everything else in input order. Returns
/// input indices.
pub fn stratified_oracle(kinds: &[&PlanKind]) -> Vec<usize> {
    let mut obligations: Vec<(u64, usize)> = Vec::new();
    let mut prohibitions: Vec<(u64, usize)> = Vec::new();
    let mut rest = Vec::new();
    for (i, k) in kinds.iter().enumerate() {
        let key = k.remaining.unwrap_or(u64::MAX);
        match (k.deontic, k.active && k.selected) {
            (Some(Deontic::Obligation), true) => obligations.push((key, i)),
            (Some(Deontic::Prohibition), true) => prohibitions.push((key, i)),
            _ => rest.push(i),
        }
    }
    // Insertion sort keeps equal keys in input order.
    let sort = |v: &mut Vec<(u64, usize)>| {
        for j in 1..v.len() {
            let mut k = j;
            while k > 0 && v[k - 1].0 > v[k].0 {
                v.swap(k - 1, k);
                k -= 1;
            }
        }
    };
    sort(&mut obligations);
    sort(&mut prohibitions);
    obligations
        .into_iter()
        .chain(prohibitions)
        .map(|(_, i)| i)
        .chain(rest)
        .collect()
}

/// Componentwise clamp of σ + r/n by explicit comparisons.
pub fn clamp_oracle(sigma: Pad, r: Pad, n: usize) -> Pad {
    let f = |s: f64, x: f64| {
        let v = s + x / n as f64;
        if v > 1.0 {
            1.0
        } else if v < -1.0 {
            -1.0
        } else {
            v
        }
    };
    Pad::new(f(sigma.pleasure, r.pleasure), f(sigma.arousal, r.arousal))
}

// ---------------------------------------------------------------------------
// Scenario arc checker over a structured (JSON lines) trace
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ArcInput {
    pub conformist: String,
    pub rebel: String,
    /// Plans each professor starts with.
    pub initial_plans: BTreeMap<String, usize>,
    /// Initial belief literals of each professor, as text.
    pub initial_beliefs: BTreeMap<String, BTreeSet<String>>,
    /// The rebel's exit plan as rendered.
    pub rebel_exit_plan: String,
    pub deviation: f64,
    pub max_ticks: u64,
}

impl ArcInput {
    pub fn for_mask_scenario() -> ArcInput {
        let dir = workspace_root().join("scenarios/mask");
        let load = |f: &str| parse_agent_program(&std::fs::read_to_string(dir.join(f)).unwrap()).unwrap();
        let conf = load("prof_conformist.nea");
        let reb = load("prof_rebel.nea");
        let exit = |p: &nea_core::lang::AgentProgram| -> PlanDef {
            p.plans
                .iter()
                .find(|pl| pl.trigger.kind == TriggerKind::AddBelief && pl.trigger.literal.functor == "exit_classroom")
                .unwrap()
                .clone()
        };
        let beliefs = |p: &nea_core::lang::AgentProgram| -> BTreeSet<String> {
            p.initial_beliefs.iter().map(|b| b.literal.to_string()).collect()
        };
        ArcInput {
            conformist: "conformist".into(),
            rebel: "rebel".into(),
            initial_plans: [
                ("conformist".to_string(), conf.plans.len()),
                ("rebel".to_string(), reb.plans.len()),
            ]
            .into(),
            initial_beliefs: [
                ("conformist".to_string(), beliefs(&conf)),
                ("rebel".to_string(), beliefs(&reb)),
            ]
            .into(),
            rebel_exit_plan: exit(&reb).to_string(),
            deviation: 0.5,
            max_ticks: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub tick: u64,
    pub variant: Option<String>,
    pub masked: bool,
    pub comply: Option<f64>,
    pub brk: Option<f64>,
}

impl Entry {
    pub fn complied(&self) -> bool {
        match self.variant.as_deref() {
            Some(v) => v == "comply",
            // The norm's context excludes an agent already wearing the mask.
            None => self.masked,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArcReport {
    pub a: Result<(), String>,
    pub b: Result<(), String>,
    pub c: Result<(), String>,
    pub d: Result<(), String>,
    pub settle_tick: Option<u64>,
    pub entries: BTreeMap<String, Vec<Entry>>,
}

fn pair_of(v: &Value) -> Option<(f64, f64)> {
    Some((v.get("pleasure")?.as_f64()?, v.get("arousal")?.as_f64()?))
}

pub fn check_arc(jsonl: &str, input: &ArcInput) -> ArcReport {
    let profs = [input.conformist.as_str(), input.rebel.as_str()];
    let mut beliefs = input.initial_beliefs.clone();
    let mut entries: BTreeMap<String, Vec<Entry>> = BTreeMap::new();
    let mut admitted: BTreeMap<String, Vec<(u64, i64)>> = BTreeMap::new();
    let mut replies: BTreeMap<String, Vec<(u64, (f64, f64))>> = BTreeMap::new();
    let mut revisions: Vec<(u64, String, (f64, f64))> = Vec::new();
    let mut masked_on_campus: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut last_tick = 0;

    for line in jsonl.lines().filter(|l| !l.trim().is_empty()) {
        let e: Value = serde_json::from_str(line).expect("trace line is JSON");
        let agent = e["agent"].as_str().unwrap_or_default().to_string();
        let tick = e["tick"].as_u64().unwrap_or_default();
        last_tick = last_tick.max(tick);
        if !profs.contains(&agent.as_str()) {
            continue;
        }
        let p = &e["payload"];
        match e["step"].as_str().unwrap_or_default() {
            "ProcMsg" => match p["kind"].as_str() {
                Some("norm") if p["added"].as_bool() == Some(true) => {
                    let n = p["plans"].as_i64().unwrap_or_default();
                    admitted.entry(agent).or_default().push((tick, n));
                }
                Some("norm-feedback") => {
                    if let Some(pair) = pair_of(&p["pair"]) {
                        replies.entry(agent).or_default().push((tick, pair));
                    }
                }
                _ => {}
            },
            "SelAppl" if p["event"].as_str() == Some("+enter_classroom") => {
                let d = p["decisions"].as_array().and_then(|d| d.first());
                entries.entry(agent.clone()).or_default().push(Entry {
                    tick,
                    variant: p["variant"].as_str().map(str::to_string),
                    masked: beliefs[&agent].contains("wearing_mask"),
                    comply: d.and_then(|d| d["comply"].as_f64()),
                    brk: d.and_then(|d| d["break"].as_f64()),
                });
            }
            "AffModB" => {
                let bs = beliefs.get_mut(&agent).unwrap();
                for l in p["removed"].as_array().into_iter().flatten() {
                    bs.remove(l.as_str().unwrap_or_default());
                }
                for l in p["added"].as_array().into_iter().flatten() {
                    bs.insert(l.as_str().unwrap_or_default().to_string());
                }
                if bs.contains("in_campus") && bs.contains("wearing_mask") {
                    masked_on_campus.entry(agent).or_default().push(tick);
                }
            }
            "SelCs" if agent == input.conformist => {
                for r in p["revisions"].as_array().into_iter().flatten() {
                    if let (Some(after), Some(acc)) = (r["after"].as_str(), pair_of(&r["accumulated"])) {
                        revisions.push((tick, after.to_string(), acc));
                    }
                }
            }
            _ => {}
        }
    }

    // (a) both professors admit the norm and gain two plans.
    let a = (|| {
        for p in profs {
            let adm = admitted.get(p).ok_or(format!("{p} never admitted the norm"))?;
            let (_, n) = adm[0];
            let before = input.initial_plans[p] as i64;
            if n - before != 2 {
                return Err(format!("{p} went from {before} to {n} plans"));
            }
        }
        Ok(())
    })();

    // (b) first entries and the replies that follow them.
    let b = (|| {
        let ce = entries.get(&input.conformist).ok_or("conformist never entered")?;
        if let Some(bad) = ce.iter().find(|e| !e.complied()) {
            return Err(format!("conformist did not comply at tick {}", bad.tick));
        }
        let cr = replies.get(&input.conformist).cloned().unwrap_or_default();
        if cr.is_empty() || cr.iter().any(|(_, (p, a))| *p <= 0.0 || *a <= 0.0) {
            return Err(format!("conformist replies not all positive: {cr:?}"));
        }
        let re = entries.get(&input.rebel).ok_or("rebel never entered")?;
        if re[0].variant.as_deref() != Some("break") {
            return Err(format!("rebel's first entry at tick {} was not a violation", re[0].tick));
        }
        let rr = replies.get(&input.rebel).cloned().unwrap_or_default();
        if !rr.iter().any(|(t, (p, a))| *t > re[0].tick && *p < 0.0 && *a < 0.0) {
            return Err("rebel received no negative reply after violating".into());
        }
        Ok(())
    })();

    // (c) the conformist's exit plan becomes the rebel's.
    let c = (|| {
        let (tick, after, acc) = revisions.first().ok_or("conformist never revised a plan")?;
        if !(acc.0 <= -input.deviation || acc.1 <= -input.deviation) {
            return Err(format!("revision at tick {tick} with accumulated {acc:?}"));
        }
        if after != &input.rebel_exit_plan {
            return Err(format!("revised plan `{after}` differs from `{}`", input.rebel_exit_plan));
        }
        Ok(())
    })();

    // (d) a settling tick after which both comply and neither is masked on campus.
    let mut settle_tick = None;
    let d = (|| {
        let mut t = 0;
        for p in profs {
            for e in entries.get(p).into_iter().flatten().filter(|e| !e.complied()) {
                t = t.max(e.tick + 1);
            }
            for &m in masked_on_campus.get(p).into_iter().flatten() {
                t = t.max(m + 1);
            }
        }
        if t > input.max_ticks {
            return Err(format!("settles only at tick {t}"));
        }
        for p in profs {
            let after = entries.get(p).into_iter().flatten().filter(|e| e.tick >= t).count();
            if after == 0 {
                return Err(format!("{p} never enters after tick {t}, nothing to confirm"));
            }
        }
        if last_tick < t {
            return Err("trace ends before settling".into());
        }
        settle_tick = Some(t);
        Ok(())
    })();
    ArcReport { a, b, c, d, settle_tick, entries }
}

/// Once an entry's comply score beats break, no later entry has it lower.
pub fn monotone_compliance(entries: &[Entry]) -> Result<(), String> {
    let mut flipped = None;
    for e in entries {
        let (Some(c), Some(b)) = (e.comply, e.brk) else { continue };
        if let Some(t) = flipped {
            if c < b {
                return Err(format!("comply < break at tick {} after flipping at {t}", e.tick));
            }
        } else if c > b {
            flipped = Some(e.tick);
        }
    }
    Ok(())
}
