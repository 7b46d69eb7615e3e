//! Randomised driving of the step machine.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nea_core::agent::{AgentConfig, AgentSettings, Audience, Message, RoleRegistry, StepLabel};
use nea_core::cycle::{run_affective_cycle, run_decay, step, Environment};
use nea_core::lang::{parse_agent_program, Literal, Pad};

use super::corpus_files;

/// The transition diagram, written out independently of the interpreter.
const EDGES: &[(&str, &str)] = &[
    ("Perceive", "ProcMsg"),
    ("ProcMsg", "SelEv"),
    ("ProcMsg", "AffModB"),
    ("SelEv", "RelPl"),
    ("SelEv", "SelInt"),
    ("RelPl", "ApplPl"),
    ("RelPl", "SelInt"),
    ("ApplPl", "SelAppl"),
    ("ApplPl", "SelInt"),
    ("SelAppl", "AddIM"),
    ("AddIM", "SelInt"),
    ("SelInt", "ExecInt"),
    ("SelInt", "AffModB"),
    ("ExecInt", "ClrInt"),
    ("ExecInt", "AffModB"),
    ("ClrInt", "AffModB"),
    ("AffModB", "Perceive"),
];

const NORMS: &[&str] = &[
    r#"norm("obligation", "np__enter_classroom:role(professor) & not wearing_mask <- +wearing_mask.", 0, 50.0, "ALL", [0.5,0.5])"#,
    r#"norm("prohibition", "np__yell:at_classroom", 0, 50, "ALL", [0.1, 0.1])"#,
    r#"norm("obligation", "np__exit_classroom <- +signed_out.", 3, 0.2, ["student"], [-0.4,0.3])"#,
    r#"norm("permission", "np__x", 0, 1, "ALL", [0,0])"#,
];

const TELLS: &[&str] = &[
    "enter_classroom",
    "exit_classroom",
    "teach_lesson",
    "in_classroom",
    "(+wearing_mask;+in_campus),[-0.3,-0.4]",
    "(-wearing_mask;+in_campus),[0.1,0.2]",
    "(+in_classroom),[-0.9,-0.9]",
    "state([in_campus,wearing_mask])",
    "norm_result(comply)",
    "((( not parseable",
];

const PERCEPTS: &[&str] = &["sunny", "in_campus", "crowded", "fire_alarm"];

fn message(rng: &mut ChaCha8Rng, agent: &AgentConfig, k: u64) -> Message {
    let mid = format!("fz{k}");
    let roll = rng.random_range(0..10);
    if roll < 2 {
        return Message::tell(mid, "rectorate", Audience::All, *NORMS.choose(rng).unwrap());
    }
    if roll < 4 {
        let mut m = Message::tell(mid, "student", Audience::All, "norm_feedback(comply)");
        m.reply_to = Some("x".into());
        m.norm = match agent.ag.nb.choose(rng) {
            Some(n) if rng.random_bool(0.8) => Some(n.id.clone()),
            _ => Some("norm-deadbeef".into()),
        };
        m.appraisal = Some(Pad::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)));
        return m;
    }
    Message::tell(mid, "student", Audience::All, *TELLS.choose(rng).unwrap())
}

/// Runs at least `min_steps` steps over fresh agents built from the corpus,
/// feeding random messages and percepts. Fails on the first edge outside
/// the diagram, interpreter fault or broken invariant; returns the step
/// count and labels exercised.
pub fn run(min_steps: u64, seed: u64) -> Result<(u64, BTreeSet<String>), String> {
    let allowed: BTreeSet<(String, String)> =
        EDGES.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let programs: Vec<_> = corpus_files()
        .iter()
        .map(|p| parse_agent_program(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect();
    let registry = RoleRegistry::new(vec![
        ("fz".into(), vec!["professor".into()]),
        ("rectorate".into(), vec!["rectorate".into()]),
        ("student".into(), vec!["student".into()]),
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = 0u64;
    let mut seen = BTreeSet::new();
    let mut k = 0u64;
    while steps < min_steps {
        let prog = programs.choose(&mut rng).unwrap();
        let settings = AgentSettings {
            relevance_threshold: rng.random_range(0.0..2.0),
            decay_relevance: rng.random_range(0.0..0.5),
            ..AgentSettings::default()
        };
        let mut agent = AgentConfig::new("fz", prog, settings);
        for tick in 0..rng.random_range(5..60) {
            let percepts: BTreeSet<Literal> =
                PERCEPTS.iter().filter(|_| rng.random_bool(0.3)).map(|s| Literal::atom(*s)).collect();
            for _ in 0..rng.random_range(0..3) {
                k += 1;
                let m = message(&mut rng, &agent, k);
                agent.m.inbox.push_back(m);
            }
            let env = Environment { tick, percepts: &percepts, registry: &registry };
            let mut prev = "Perceive".to_string();
            loop {
                let e = step(&mut agent, &env).map_err(|f| f.to_string())?;
                steps += 1;
                let next = agent.s.to_string();
                if e.step != prev || !allowed.contains(&(prev.clone(), next.clone())) {
                    return Err(format!("edge {} -> {next} (expected to leave {prev})", e.step));
                }
                agent.check_invariants().map_err(|m| format!("after {}: {m}", e.step))?;
                seen.insert(e.step);
                prev = next;
                if agent.s == StepLabel::Perceive {
                    break;
                }
            }
            run_affective_cycle(&mut agent, &env);
            run_decay(&mut agent, &env);
            agent.cycle += 1;
            agent.check_invariants()?;
            agent.m.outbox.clear();
        }
    }
    Ok((steps, seen))
}
