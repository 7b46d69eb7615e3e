//! Student behaviour: react to what professors show of themselves.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::affect::{condition_holds, update_affect};
use crate::agent::{AgentConfig, Audience, Message};
use crate::cycle::parse_state_digest;
use crate::lang::{parse_literal, FeedbackMessage, Pad, Variant};
use crate::norm::opp_emotion;

use super::scenario::{parse_condition, ObserverConfig};

fn pad(p: [f64; 2]) -> Pad {
    Pad::new(p[0], p[1])
}

/// One uniform draw per potential emission, so the stream position does not
/// depend on which branches fire.
fn gate(rng: &mut ChaCha8Rng, probability: f64) -> bool {
    let x: f64 = rng.random();
    x < probability
}

fn reply(student: &mut AgentConfig, to: &Message, content: String) -> Message {
    let mid = student.fresh_mid();
    let mut m = Message::tell(mid, &student.id, Audience::Agent(to.sender.clone()), content);
    m.reply_to = Some(to.mid.clone());
    m
}

/// The variant reported by a `norm_result(..)` message.
fn reported_variant(content: &str) -> Option<Variant> {
    let lit = parse_literal(content).ok()?;
    if lit.functor != "norm_result" || lit.args.len() != 1 {
        return None;
    }
    match lit.args[0].as_atom()? {
        "comply" => Some(Variant::Comply),
        "break" => Some(Variant::Break),
        _ => None,
    }
}

/// Reaction of an observer to one delivered message. Messages that are not
/// observations are left alone (returns `None` and does not touch the rng).
pub fn observer_react(
    student: &mut AgentConfig,
    observed: &Message,
    cfg: &ObserverConfig,
    rng: &mut ChaCha8Rng,
    n_agents: usize,
) -> Vec<Message> {
    let n = n_agents.max(1);
    if let (Some(variant), Some(norm)) = (reported_variant(&observed.content), &observed.norm) {
        let seen = pad(cfg.compliance_pair);
        let pair = match variant {
            Variant::Comply => seen,
            Variant::Break => opp_emotion(seen),
        };
        if !gate(rng, cfg.response_probability) {
            return Vec::new();
        }
        student.ta.sigma = update_affect(student.ta.sigma, pair, n);
        let mut m = reply(student, observed, format!("norm_feedback({variant})"));
        m.norm = Some(norm.clone());
        m.appraisal = Some(pair);
        return vec![m];
    }
    let Some(state) = parse_state_digest(&observed.content) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for pref in &cfg.preferences {
        let Ok(condition) = parse_condition(&pref.condition) else { continue };
        let fire = gate(rng, pref.probability.unwrap_or(cfg.response_probability));
        if !fire || !condition_holds(&condition, &state) {
            continue;
        }
        let pair = pad(pref.pair);
        student.ta.sigma = update_affect(student.ta.sigma, pair, n);
        let fb = FeedbackMessage { condition, pair };
        out.push(reply(student, observed, fb.to_string()));
    }
    out
}

/// True for messages an observer consumes instead of its own cycle.
pub fn is_observation(msg: &Message) -> bool {
    (msg.norm.is_some() && reported_variant(&msg.content).is_some())
        || parse_state_digest(&msg.content).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentSettings;
    use crate::lang::parse_agent_program;
    use crate::society::scenario::Preference;
    use rand::SeedableRng;

    fn student() -> AgentConfig {
        let p = parse_agent_program("listening.").unwrap();
        AgentConfig::new("s1", &p, AgentSettings::default())
    }

    fn cfg(p: f64) -> ObserverConfig {
        ObserverConfig {
            compliance_pair: [0.1, 0.1],
            response_probability: p,
            preferences: vec![Preference {
                condition: "(+wearing_mask;+in_campus)".into(),
                pair: [-0.1, -0.2],
                probability: None,
            }],
        }
    }

    fn result(variant: &str) -> Message {
        let mut m = Message::tell("p#1".into(), "p", Audience::All, format!("norm_result({variant})"));
        m.norm = Some("mask".into());
        m
    }

    #[test]
    fn compliance_gets_positive_reply() {
        let mut s = student();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = observer_react(&mut s, &result("comply"), &cfg(1.0), &mut rng, 5);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].appraisal, Some(Pad::new(0.1, 0.1)));
        assert_eq!(out[0].norm.as_deref(), Some("mask"));
        assert_eq!(out[0].reply_to.as_deref(), Some("p#1"));
        assert_eq!(out[0].to, Audience::Agent("p".into()));
        let out = observer_react(&mut s, &result("break"), &cfg(1.0), &mut rng, 5);
        assert_eq!(out[0].appraisal, Some(Pad::new(-0.1, -0.1)));
    }

    #[test]
    fn masked_on_campus_gets_printed_feedback() {
        let mut s = student();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let digest = Message::tell("p#2".into(), "p", Audience::All, "state([in_campus, wearing_mask])");
        let out = observer_react(&mut s, &digest, &cfg(1.0), &mut rng, 5);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].content, "(+wearing_mask;+in_campus),[-0.1,-0.2]");
        let bare = Message::tell("p#3".into(), "p", Audience::All, "state([in_campus])");
        assert!(observer_react(&mut s, &bare, &cfg(1.0), &mut rng, 5).is_empty());
    }

    #[test]
    fn zero_probability_is_silent() {
        let mut s = student();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(observer_react(&mut s, &result("comply"), &cfg(0.0), &mut rng, 5).is_empty());
        assert_eq!(s.ta.sigma, Pad::ZERO);
    }
}
