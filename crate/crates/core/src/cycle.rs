//! The step machine: one transition of the normative reasoning cycle per
//! call, plus the affective cycle and decay that close each tick.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::affect;
use crate::agent::{
    AffectiveStepLabel, AgentConfig, Audience, Decision, Event, Intention, MemoryEvent,
    MemoryKind, Message, PendingAffect, PlanInstance, RoleRegistry, StepLabel,
};
use crate::lang::{
    parse_feedback, parse_literal, parse_norm_literal, Belief, BodyStep, ContextLit, Force,
    LangError, Literal, PlanDef, Source, Term, Trigger, TriggerKind, Variant,
};
use crate::norm;

/// What an agent sees of the world during one step.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    pub tick: u64,
    pub percepts: &'a BTreeSet<Literal>,
    pub registry: &'a RoleRegistry,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub tick: u64,
    pub agent: String,
    pub step: String,
    pub summary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
}

impl TraceEntry {
    /// `tick<TAB>agent<TAB>step<TAB>summary`
    pub fn text_line(&self) -> String {
        let clean = |s: &str| s.replace(['\t', '\n'], " ");
        format!(
            "{}\t{}\t{}\t{}",
            self.tick,
            clean(&self.agent),
            self.step,
            clean(&self.summary)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("interpreter fault in {agent} at {step}: {message}")]
pub struct InterpreterFault {
    pub agent: String,
    pub step: String,
    pub message: String,
}

/// Edges of the transition diagram.
pub fn allowed_transition(from: StepLabel, to: StepLabel) -> bool {
    use StepLabel::*;
    matches!(
        (from, to),
        (Perceive, ProcMsg)
            | (ProcMsg, SelEv)
            | (ProcMsg, AffModB)
            | (SelEv, RelPl)
            | (SelEv, SelInt)
            | (RelPl, ApplPl)
            | (RelPl, SelInt)
            | (ApplPl, SelAppl)
            | (ApplPl, SelInt)
            | (SelAppl, AddIM)
            | (AddIM, SelInt)
            | (SelInt, ExecInt)
            | (SelInt, AffModB)
            | (ExecInt, ClrInt)
            | (ExecInt, AffModB)
            | (ClrInt, AffModB)
            | (AffModB, Perceive)
    )
}

/// Result of one transition: the next label and what to trace.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: StepLabel,
    pub summary: String,
    pub payload: Option<Value>,
}

impl StepOutcome {
    fn new(next: StepLabel, summary: impl Into<String>) -> StepOutcome {
        StepOutcome {
            next,
            summary: summary.into(),
            payload: None,
        }
    }

    fn with(mut self, payload: Value) -> StepOutcome {
        self.payload = Some(payload);
        self
    }
}

fn fault(agent: &AgentConfig, message: impl Into<String>) -> InterpreterFault {
    InterpreterFault {
        agent: agent.id.clone(),
        step: agent.s.to_string(),
        message: message.into(),
    }
}

/// Executes exactly one step of the normative cycle and advances `s`.
/// Outbound messages are left in `agent.m.outbox`.
pub fn step(agent: &mut AgentConfig, env: &Environment) -> Result<TraceEntry, InterpreterFault> {
    let from = agent.s;
    let out = match from {
        StepLabel::Perceive => perceive(agent, env),
        StepLabel::ProcMsg => match agent.m.inbox.pop_front() {
            None => StepOutcome::new(StepLabel::SelEv, "no message"),
            Some(msg) => process_message(agent, msg, env),
        },
        StepLabel::SelEv => select_event(agent),
        StepLabel::RelPl => relevant_plans(agent)?,
        StepLabel::ApplPl => applicable_plans(agent),
        StepLabel::SelAppl => select_applicable(agent, env)?,
        StepLabel::AddIM => add_intended_means(agent, env)?,
        StepLabel::SelInt => select_intention(agent, env),
        StepLabel::ExecInt => execute_intention(agent, env)?,
        StepLabel::ClrInt => clear_intention(agent)?,
        StepLabel::AffModB => affective_belief_sync(agent),
    };
    if !allowed_transition(from, out.next) {
        return Err(fault(agent, format!("illegal transition {from} -> {}", out.next)));
    }
    agent.s = out.next;
    Ok(TraceEntry {
        tick: env.tick,
        agent: agent.id.clone(),
        step: from.to_string(),
        summary: out.summary,
        payload: out.payload,
    })
}

fn perceive(agent: &mut AgentConfig, env: &Environment) -> StepOutcome {
    let (new, rem) = norm::eval_percepts(env.percepts, &agent.ag.bs, &agent.ag.nb);
    for l in &new {
        if norm::is_norm_literal(l) {
            if let Ok(decl) = parse_norm_literal(&l.to_string()) {
                let _ = norm::admit_norm(&mut agent.ag, &decl, Some("percept"));
            }
        }
        agent.ta.ub.ba.push(Belief::new(l.clone(), Source::Percept));
    }
    for l in &rem {
        agent.ta.ub.br.push(Belief::new(l.clone(), Source::Percept));
    }
    if !new.is_empty() || !rem.is_empty() {
        agent.ta.ub.st = Some(StepLabel::Perceive);
    }
    StepOutcome::new(
        StepLabel::ProcMsg,
        format!("{} new, {} removed percepts", new.len(), rem.len()),
    )
}

/// Handles one incoming message (ProcMsg).
pub fn process_message(agent: &mut AgentConfig, msg: Message, env: &Environment) -> StepOutcome {
    let head = json!({"mid": msg.mid, "sender": msg.sender, "content": msg.content});
    if !(agent.settings.soc_acc)(agent, &msg) {
        return StepOutcome::new(StepLabel::SelEv, format!("rejected {} from {}", msg.mid, msg.sender))
            .with(head);
    }
    let n = env.registry.len().max(1);

    if msg.force == Force::Untell {
        let Ok(lit) = parse_literal(&msg.content) else {
            return StepOutcome::new(StepLabel::SelEv, format!("dropped malformed untell {}", msg.mid));
        };
        let b = Belief::new(lit.clone(), Source::Agent(msg.sender.clone()));
        agent.ag.bs.remove(&b);
        if !agent.ag.holds(&lit) {
            agent.c.e.push_back(Event::external(Trigger {
                kind: TriggerKind::DelBelief,
                literal: lit.clone(),
            }));
        }
        return StepOutcome::new(StepLabel::SelEv, format!("untell {lit} from {}", msg.sender))
            .with(head);
    }

    if msg.reply_to.is_some() {
        if let (Some(id), Some(pair)) = (&msg.norm, msg.appraisal) {
            let delta = agent.settings.delta;
            let Some(nb) = agent.ag.norm_mut(id) else {
                return StepOutcome::new(StepLabel::AffModB, format!("reply about unknown norm {id}"))
                    .with(head);
            };
            let before = nb.rel;
            nb.rel = norm::increment_relevance(nb.rel, n, delta);
            let after = nb.rel;
            agent.ta.sigma = affect::update_affect(agent.ta.sigma, pair, n);
            agent.mem.push(MemoryEvent {
                tick: agent.cycle,
                kind: MemoryKind::NormFeedbackReceived,
                literals: Vec::new(),
                pair,
                norm: Some(id.clone()),
            });
            return StepOutcome::new(
                StepLabel::AffModB,
                format!("norm feedback {pair} from {}: {id} relevance {before} -> {after}", msg.sender),
            )
            .with(json!({"mid": msg.mid, "sender": msg.sender, "norm": id,
                         "pair": pair, "relevance": after, "kind": "norm-feedback"}));
        }
    }

    if let Ok(fb) = parse_feedback(&msg.content) {
        let idx = affect::accumulate_feedback(&fb, &mut agent.ag.feedback);
        agent.ta.sigma = affect::update_affect(agent.ta.sigma, fb.pair, n);
        agent.mem.push(MemoryEvent {
            tick: agent.cycle,
            kind: MemoryKind::SocialFeedback,
            literals: fb.condition.clone(),
            pair: fb.pair,
            norm: None,
        });
        let rec = &agent.ag.feedback[idx];
        return StepOutcome::new(
            StepLabel::AffModB,
            format!("social feedback {fb} from {}", msg.sender),
        )
        .with(json!({"mid": msg.mid, "sender": msg.sender, "kind": "social-feedback",
                     "condition": fb.condition.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                     "pair": fb.pair, "accumulated": rec.accumulated, "count": rec.count}));
    }

    let source = Source::Agent(msg.sender.clone());
    match parse_norm_literal(&msg.content) {
        Ok(decl) => {
            let id = decl.id();
            match norm::admit_norm(&mut agent.ag, &decl, Some(&msg.sender)) {
                Ok(added) => {
                    let lit = norm::norm_literal(&decl);
                    agent.ag.bs.insert(Belief::new(lit.clone(), source));
                    agent.c.e.push_back(Event::external(Trigger::add_belief(lit)));
                    let what = if added { "admitted" } else { "already known" };
                    StepOutcome::new(StepLabel::SelEv, format!("norm {id} {what} from {}", msg.sender))
                        .with(json!({"mid": msg.mid, "sender": msg.sender, "kind": "norm",
                                     "norm": id, "added": added,
                                     "plans": agent.ag.ps.len()}))
                }
                Err(e) => StepOutcome::new(StepLabel::SelEv, format!("dropped {}: {e}", msg.mid)).with(head),
            }
        }
        Err(LangError::NotANorm) => match parse_literal(&msg.content) {
            Ok(lit) => {
                let fresh = !agent.ag.holds(&lit);
                agent.ag.bs.insert(Belief::new(lit.clone(), source));
                if fresh {
                    agent.c.e.push_back(Event::external(Trigger::add_belief(lit.clone())));
                }
                StepOutcome::new(StepLabel::SelEv, format!("tell {lit} from {}", msg.sender)).with(head)
            }
            Err(e) => StepOutcome::new(StepLabel::SelEv, format!("dropped {}: {e}", msg.mid)).with(head),
        },
        Err(e) => StepOutcome::new(StepLabel::SelEv, format!("dropped {}: malformed norm: {e}", msg.mid))
            .with(head),
    }
}

/// S_E: first in, first out.
fn select_event(agent: &mut AgentConfig) -> StepOutcome {
    agent.t.r.clear();
    agent.t.ap.clear();
    agent.t.rho = None;
    match agent.c.e.pop_front() {
        None => {
            agent.t.epsilon = None;
            StepOutcome::new(StepLabel::SelInt, "no event")
        }
        Some(ev) => {
            let summary = format!("event {}", ev.trigger);
            agent.t.epsilon = Some(ev);
            StepOutcome::new(StepLabel::RelPl, summary)
        }
    }
}

/// Indices of plans whose trigger matches the event.
pub fn relevant(event: &Trigger, ps: &[PlanDef]) -> Vec<usize> {
    ps.iter()
        .enumerate()
        .filter(|(_, p)| &p.trigger == event)
        .map(|(i, _)| i)
        .collect()
}

fn relevant_plans(agent: &mut AgentConfig) -> Result<StepOutcome, InterpreterFault> {
    let Some(ev) = &agent.t.epsilon else {
        return Err(fault(agent, "RelPl without a selected event"));
    };
    let r = relevant(&ev.trigger, &agent.ag.ps);
    let summary = format!("{} relevant plans for {}", r.len(), ev.trigger);
    let next = if r.is_empty() {
        StepLabel::SelInt
    } else {
        StepLabel::ApplPl
    };
    agent.t.r = r;
    Ok(StepOutcome::new(next, summary))
}

/// Context check against the belief base and held roles.
pub fn context_holds(ctx: &[ContextLit], bs: &BTreeSet<Belief>, roles: &[String]) -> bool {
    ctx.iter().all(|c| {
        let held_role = c.literal.functor == "role"
            && matches!(c.literal.args.as_slice(),
                [Term::Atom(r)] | [Term::Str(r)] if roles.contains(r));
        let present = held_role || bs.iter().any(|b| b.literal == c.literal);
        present != c.negated
    })
}

/// Subset of `r` whose context holds.
pub fn applicable(r: &[usize], ps: &[PlanDef], bs: &BTreeSet<Belief>, roles: &[String]) -> Vec<usize> {
    r.iter()
        .copied()
        .filter(|&i| context_holds(&ps[i].context, bs, roles))
        .collect()
}

fn applicable_plans(agent: &mut AgentConfig) -> StepOutcome {
    let ap = applicable(&agent.t.r, &agent.ag.ps, &agent.ag.bs, &agent.roles);
    let next = if ap.is_empty() {
        StepLabel::SelInt
    } else {
        StepLabel::SelAppl
    };
    let summary = format!("{} applicable plans", ap.len());
    agent.t.ap = ap;
    StepOutcome::new(next, summary)
}

fn select_applicable(agent: &mut AgentConfig, env: &Environment) -> Result<StepOutcome, InterpreterFault> {
    if agent.t.ap.is_empty() {
        return Err(fault(agent, "SelAppl with no applicable plan"));
    }
    let cycle = agent.cycle;
    let threshold = agent.settings.relevance_threshold;
    let mut choices = BTreeMap::new();
    let mut decided = Vec::new();
    for &i in &agent.t.ap {
        let Some(id) = agent.ag.ps[i].norm_id() else { continue };
        if choices.contains_key(id) {
            continue;
        }
        let Some(nb) = agent.ag.norm(id) else {
            return Err(fault(agent, format!("plan references unknown norm {id}")));
        };
        if !nb.is_active(cycle, threshold) {
            continue;
        }
        let frac = env.registry.fraction_affected(&nb.affected_roles);
        let inputs = norm::UtilityInputs::for_norm(agent.ag.p.reb, frac, agent.ta.sigma, nb);
        let (c, b) = norm::compliance_utility(inputs);
        let variant = norm::choose_variant(c, b);
        choices.insert(id.to_string(), variant);
        decided.push(Decision {
            cycle,
            norm: id.to_string(),
            comply: c,
            break_score: b,
            variant,
        });
    }
    let plans: Vec<&PlanDef> = agent.t.ap.iter().map(|&i| &agent.ag.ps[i]).collect();
    let order = norm::order_applicable_plans(&plans, &agent.ag.nb, cycle, threshold, &choices);
    let rho = agent.t.ap[order[0]];
    agent.t.rho = Some(rho);
    let plan = &agent.ag.ps[rho];
    let event = agent
        .t
        .epsilon
        .as_ref()
        .map(|e| e.trigger.to_string())
        .unwrap_or_default();
    let mut summary = format!("plan {plan}");
    if let Some(tag) = &plan.norm {
        summary.push_str(&format!(" [{} {}]", tag.variant, tag.norm_id));
    }
    let payload = json!({
        "event": event,
        "plan": plan.to_string(),
        "norm": plan.norm_id(),
        "variant": plan.norm.as_ref().map(|t| t.variant),
        "decisions": decided,
    });
    agent.decisions.extend(decided);
    Ok(StepOutcome::new(StepLabel::AddIM, summary).with(payload))
}

fn add_intended_means(agent: &mut AgentConfig, env: &Environment) -> Result<StepOutcome, InterpreterFault> {
    let Some(rho) = agent.t.rho else {
        return Err(fault(agent, "AddIM without a selected plan"));
    };
    let instance = PlanInstance::new(agent.ag.ps[rho].clone());
    let parent = agent.t.epsilon.as_ref().and_then(|e| e.intention);
    if let Some(pos) = parent.and_then(|id| agent.c.i.iter().position(|i| i.id == id)) {
        agent.c.i[pos].stack.push(instance);
        let id = agent.c.i[pos].id;
        return Ok(StepOutcome::new(StepLabel::SelInt, format!("pushed onto intention {id}"))
            .with(json!({"intention": id})));
    }
    let id = agent.fresh_intention_id();
    let intention = Intention {
        id,
        stack: vec![instance],
    };
    let (nb, cycle, thr) = (&agent.ag.nb, agent.cycle, agent.settings.relevance_threshold);
    let normative = norm::is_normative_intention(&intention, nb, cycle, thr);
    let pos = if normative {
        agent
            .c
            .i
            .iter()
            .take_while(|i| norm::is_normative_intention(i, nb, cycle, thr))
            .count()
    } else {
        agent.c.i.len()
    };
    agent.c.i.insert(pos, intention);
    let _ = env;
    Ok(StepOutcome::new(StepLabel::SelInt, format!("new intention {id} at position {pos}"))
        .with(json!({"intention": id, "normative": normative})))
}

fn select_intention(agent: &mut AgentConfig, _env: &Environment) -> StepOutcome {
    match norm::select_intention(
        &agent.c.i,
        &agent.ag.nb,
        agent.cycle,
        agent.settings.relevance_threshold,
    ) {
        None => {
            agent.t.iota = None;
            StepOutcome::new(StepLabel::AffModB, "no intention")
        }
        Some(idx) => {
            let id = agent.c.i[idx].id;
            agent.t.iota = Some(id);
            StepOutcome::new(StepLabel::ExecInt, format!("intention {id}"))
        }
    }
}

fn affect_kind(variant: Variant) -> MemoryKind {
    match variant {
        Variant::Comply => MemoryKind::OwnCompliance,
        Variant::Break => MemoryKind::OwnViolation,
    }
}

/// Tells the agents the norm concerns how the agent acted on it.
fn broadcast_result(agent: &mut AgentConfig, norm_id: &str, variant: Variant, pair: crate::lang::Pad) {
    let Some(nb) = agent.ag.norm(norm_id) else { return };
    let to = Audience::from(&nb.affected_roles);
    let mid = agent.fresh_mid();
    let mut msg = Message::tell(mid, &agent.id, to, format!("norm_result({variant})"));
    msg.norm = Some(norm_id.to_string());
    msg.appraisal = Some(pair);
    agent.m.outbox.push(msg);
}

fn execute_intention(agent: &mut AgentConfig, env: &Environment) -> Result<StepOutcome, InterpreterFault> {
    let Some(id) = agent.t.iota else {
        return Err(fault(agent, "ExecInt without a selected intention"));
    };
    let Some(idx) = agent.c.i.iter().position(|i| i.id == id) else {
        return Err(fault(agent, format!("selected intention {id} is gone")));
    };
    let Some(inst) = agent.c.i[idx].stack.last_mut() else {
        return Err(fault(agent, format!("intention {id} has an empty stack")));
    };
    if inst.finished() {
        return Ok(StepOutcome::new(StepLabel::ClrInt, format!("intention {id} has nothing left")));
    }
    let body_step = inst.plan.body[inst.pc].clone();
    inst.pc += 1;
    let tag = inst.plan.norm.clone();
    let plan_text = inst.plan.to_string();
    let finished = inst.finished();

    let mut normative_effect = None;
    match &body_step {
        BodyStep::AddBelief(l) => match (l.as_affect(), &tag) {
            (Some(pair), Some(tag)) => {
                agent.ta.ub.affect.push(PendingAffect {
                    pair,
                    kind: affect_kind(tag.variant),
                    norm: Some(tag.norm_id.clone()),
                });
                broadcast_result(agent, &tag.norm_id, tag.variant, pair);
                normative_effect = Some((tag.norm_id.clone(), tag.variant, pair));
            }
            _ => agent.ta.ub.ba.push(Belief::own(l.clone())),
        },
        BodyStep::DelBelief(l) => agent.ta.ub.br.push(Belief::own(l.clone())),
        BodyStep::Action(a) => {
            agent.c.a.push(a.clone());
            if let Some(eff) = norm::comply_to_norm(a, &agent.ag.nb, agent.cycle) {
                // The variant plans of this norm carry their own affect step.
                if tag.as_ref().map(|t| t.norm_id.as_str()) != Some(eff.norm.as_str()) {
                    let variant = match eff.memory_kind() {
                        MemoryKind::OwnViolation => Variant::Break,
                        _ => Variant::Comply,
                    };
                    agent.ta.ub.affect.push(PendingAffect {
                        pair: eff.pair,
                        kind: eff.memory_kind(),
                        norm: Some(eff.norm.clone()),
                    });
                    broadcast_result(agent, &eff.norm, variant, eff.pair);
                    normative_effect = Some((eff.norm, variant, eff.pair));
                }
            }
        }
        BodyStep::Send { to, force, content } => {
            let mid = agent.fresh_mid();
            let mut msg = Message::tell(mid, &agent.id, Audience::Agent(to.clone()), content.to_string());
            msg.force = *force;
            agent.m.outbox.push(msg);
        }
    }
    if matches!(body_step, BodyStep::AddBelief(_) | BodyStep::DelBelief(_)) || normative_effect.is_some() {
        agent.ta.ub.st = Some(StepLabel::ExecInt);
    }

    // Round robin: the executed intention goes to the back.
    let intention = agent.c.i.remove(idx);
    agent.c.i.push(intention);

    let next = if finished {
        StepLabel::ClrInt
    } else {
        StepLabel::AffModB
    };
    let _ = env;
    let mut payload = json!({
        "intention": id,
        "step": body_step.to_string(),
        "plan": plan_text,
        "finished": finished,
    });
    if let Some((norm_id, variant, pair)) = normative_effect {
        payload["norm"] = json!(norm_id);
        payload["variant"] = json!(variant);
        payload["pair"] = json!(pair);
    }
    Ok(StepOutcome::new(next, format!("intention {id}: {body_step}")).with(payload))
}

fn clear_intention(agent: &mut AgentConfig) -> Result<StepOutcome, InterpreterFault> {
    let Some(id) = agent.t.iota else {
        return Err(fault(agent, "ClrInt without a selected intention"));
    };
    let Some(idx) = agent.c.i.iter().position(|i| i.id == id) else {
        return Err(fault(agent, format!("intention {id} vanished before ClrInt")));
    };
    let stack = &mut agent.c.i[idx].stack;
    while stack.last().is_some_and(PlanInstance::finished) {
        stack.pop();
    }
    let done = stack.is_empty();
    if done {
        agent.c.i.remove(idx);
        agent.t.iota = None;
    }
    let summary = if done {
        format!("intention {id} completed")
    } else {
        format!("intention {id} resumes")
    };
    Ok(StepOutcome::new(StepLabel::AffModB, summary).with(json!({"intention": id, "completed": done})))
}

fn affective_belief_sync(agent: &mut AgentConfig) -> StepOutcome {
    let ub = std::mem::take(&mut agent.ta.ub);
    let before = agent.ag.literals();
    agent.ag.bs = affect::sync_beliefs(&ub, &agent.ag.bs);
    let after = agent.ag.literals();

    let mut removed = Vec::new();
    for b in &ub.br {
        let l = &b.literal;
        if before.contains(l) && !after.contains(l) && !removed.contains(l) {
            removed.push(l.clone());
        }
    }
    let mut added = Vec::new();
    for b in &ub.ba {
        let l = &b.literal;
        if !before.contains(l) && after.contains(l) && !added.contains(l) {
            added.push(l.clone());
        }
    }
    for l in &removed {
        agent.c.e.push_back(Event::external(Trigger {
            kind: TriggerKind::DelBelief,
            literal: l.clone(),
        }));
    }
    for l in &added {
        agent.c.e.push_back(Event::external(Trigger::add_belief(l.clone())));
    }
    for pa in &ub.affect {
        agent.mem.push(MemoryEvent {
            tick: agent.cycle,
            kind: pa.kind,
            literals: Vec::new(),
            pair: pa.pair,
            norm: pa.norm.clone(),
        });
    }

    let mut published = None;
    if !agent.settings.public_beliefs.is_empty() {
        let public: BTreeSet<Literal> = after
            .iter()
            .filter(|l| agent.settings.public_beliefs.contains(&l.functor))
            .cloned()
            .collect();
        if agent.published.as_ref() != Some(&public) {
            let content = Literal::new(
                "state",
                vec![Term::List(public.iter().cloned().map(literal_term).collect())],
            );
            let mid = agent.fresh_mid();
            let to = agent.settings.state_audience.clone();
            agent.m.outbox.push(Message::tell(mid, &agent.id, to, content.to_string()));
            published = Some(content.to_string());
            agent.published = Some(public);
        }
    }

    let fmt = |ls: &[Literal]| ls.iter().map(|l| l.to_string()).collect::<Vec<_>>();
    let summary = format!(
        "+[{}] -[{}]{}",
        fmt(&added).join(", "),
        fmt(&removed).join(", "),
        if ub.affect.is_empty() {
            String::new()
        } else {
            format!(" affect x{}", ub.affect.len())
        }
    );
    StepOutcome::new(StepLabel::Perceive, summary).with(json!({
        "added": fmt(&added),
        "removed": fmt(&removed),
        "affect": ub.affect,
        "published": published,
    }))
}

fn literal_term(l: Literal) -> Term {
    if l.args.is_empty() {
        Term::Atom(l.functor)
    } else {
        Term::Struct(l)
    }
}

/// Reads back the literals of a `state([..])` digest.
pub fn parse_state_digest(content: &str) -> Option<BTreeSet<Literal>> {
    let lit = parse_literal(content).ok()?;
    if lit.functor != "state" {
        return None;
    }
    let [Term::List(items)] = lit.args.as_slice() else {
        return None;
    };
    items
        .iter()
        .map(|t| match t {
            Term::Atom(a) => Some(Literal::atom(a.clone())),
            Term::Struct(l) => Some(l.clone()),
            _ => None,
        })
        .collect()
}

fn aff_entry(agent: &AgentConfig, env: &Environment, step: &str, summary: String, payload: Option<Value>) -> TraceEntry {
    TraceEntry {
        tick: env.tick,
        agent: agent.id.clone(),
        step: step.to_string(),
        summary,
        payload,
    }
}

/// Appr → UpAs → SelCs → Cope over the Mem entries added since the last run.
pub fn run_affective_cycle(agent: &mut AgentConfig, env: &Environment) -> Vec<TraceEntry> {
    let mut trace = Vec::new();
    let fresh: Vec<MemoryEvent> = agent.mem[agent.mem_cursor..].to_vec();
    agent.mem_cursor = agent.mem.len();

    agent.ast = AffectiveStepLabel::Appr;
    let appraised: Vec<_> = fresh
        .iter()
        .filter_map(|e| affect::appraise(e, &agent.ag.cc, &agent.ag.p.tr))
        .collect();
    if let Some(av) = appraised.last() {
        agent.ta.av = Some(*av);
    }
    trace.push(aff_entry(agent, env, "Appr", format!("{} relevant events", appraised.len()), None));

    agent.ast = AffectiveStepLabel::UpAs;
    let before = agent.ta.sigma;
    for e in fresh.iter().filter(|e| e.kind.self_caused()) {
        agent.ta.sigma = affect::update_affect(agent.ta.sigma, e.pair, 1);
    }
    trace.push(aff_entry(
        agent,
        env,
        "UpAs",
        format!("σ {before} -> {}", agent.ta.sigma),
        Some(json!({"sigma": agent.ta.sigma})),
    ));

    agent.ast = AffectiveStepLabel::SelCs;
    let mut revisions = Vec::new();
    if !fresh.is_empty() {
        agent.ta.cs = affect::select_coping(&agent.ag.p.cs, agent.ta.sigma);
        if fresh.iter().any(|e| e.kind == MemoryKind::SocialFeedback) {
            revisions = revise_for_social_norm(agent);
        }
    }
    let summary = if revisions.is_empty() {
        format!("{} coping strategies", agent.ta.cs.len())
    } else {
        format!("{} coping strategies; revised {}", agent.ta.cs.len(), revisions.len())
    };
    trace.push(aff_entry(
        agent,
        env,
        "SelCs",
        summary,
        (!revisions.is_empty()).then(|| json!({"revisions": revisions})),
    ));

    agent.ast = AffectiveStepLabel::Cope;
    let cs = std::mem::take(&mut agent.ta.cs);
    let before = agent.c.i.len();
    affect::cope(&cs, &mut agent.c, &mut agent.next_intention);
    trace.push(aff_entry(
        agent,
        env,
        "Cope",
        format!("{} coping intentions", agent.c.i.len() - before),
        None,
    ));
    agent.ast = AffectiveStepLabel::Appr;
    trace
}

fn revise_for_social_norm(agent: &mut AgentConfig) -> Vec<Value> {
    let beliefs = agent.ag.literals();
    let Some(det) = affect::detect_social_norm(
        &agent.ag.feedback,
        &agent.ag.ps,
        &beliefs,
        agent.settings.deviation_threshold,
    ) else {
        return Vec::new();
    };
    let record = &agent.ag.feedback[det.record];
    let condition: Vec<String> = det.avoid.iter().map(|c| c.to_string()).collect();
    let accumulated = record.accumulated;
    let mut out = Vec::new();
    for i in det.plans {
        let old = agent.ag.ps[i].clone();
        match affect::revise_plan(&old, &det.avoid, &beliefs) {
            Ok(new) => {
                out.push(json!({"before": old.to_string(), "after": new.to_string(),
                                "condition": condition, "accumulated": accumulated}));
                agent.ag.ps[i] = new;
            }
            Err(e) => out.push(json!({"before": old.to_string(), "error": e.to_string(),
                                      "condition": condition, "accumulated": accumulated})),
        }
    }
    out
}

/// AsNrDecay: affect and relevance drift back once per tick.
pub fn run_decay(agent: &mut AgentConfig, env: &Environment) -> TraceEntry {
    agent.ta.sigma = affect::affect_decay(agent.ta.sigma, &agent.ag.p.tr, agent.settings.decay_affect);
    norm::relevance_decay(&mut agent.ag.nb, &agent.mem, agent.cycle, agent.settings.decay_relevance);
    let rels: Vec<String> = agent.ag.nb.iter().map(|n| format!("{}={:.4}", n.id, n.rel)).collect();
    aff_entry(
        agent,
        env,
        "AsNrDecay",
        format!("σ {}; {}", agent.ta.sigma, rels.join(" ")),
        None,
    )
}

/// One full tick for one agent: the normative cycle from Perceive back to
/// Perceive, then the affective cycle and decay.
pub fn run_cycle(agent: &mut AgentConfig, env: &Environment) -> Result<Vec<TraceEntry>, InterpreterFault> {
    if agent.s != StepLabel::Perceive {
        return Err(fault(agent, "a cycle must start at Perceive"));
    }
    let mut trace = Vec::new();
    loop {
        trace.push(step(agent, env)?);
        if agent.s == StepLabel::Perceive {
            break;
        }
        if trace.len() > StepLabel::ALL.len() {
            return Err(fault(agent, "cycle did not return to Perceive"));
        }
    }
    trace.extend(run_affective_cycle(agent, env));
    trace.push(run_decay(agent, env));
    agent.cycle += 1;
    Ok(trace)
}
