//! Affective reasoning: appraisal, affect updates and decay, coping, belief
//! synchronisation, social feedback and plan revision.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::agent::{
    AppraisalVars, BeliefUpdate, Circumstance, FeedbackRecord, Intention, MemoryEvent,
    PlanInstance,
};
use crate::lang::{
    Belief, BodyStep, CondLit, CopingStrategy, FeedbackMessage, Literal, Pad, PlanDef, Term,
    Trigger, TriggerKind,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AffectError {
    #[error("plan `{0}` cannot be revised to avoid the condition")]
    Unrevisable(String),
}

/// Minimal appraisal of a memory event. Zero pairs are affectively
/// irrelevant.
pub fn appraise(event: &MemoryEvent, _cc: &[Literal], _tr: &[f64; 5]) -> Option<AppraisalVars> {
    if event.pair.is_zero() {
        return None;
    }
    Some(AppraisalVars {
        desirability: ((event.pair.pleasure + 1.0) / 2.0).clamp(0.0, 1.0),
        likelihood: 1.0,
        expectedness: 0.0,
        controllability: 1.0,
        causal_attribution: if event.kind.self_caused() { 1.0 } else { 0.0 },
    })
}

/// σ + response/n, clamped to [-1,1] per component.
pub fn update_affect(sigma: Pad, response: Pad, n_agents: usize) -> Pad {
    let n = n_agents.max(1) as f64;
    Pad::new(
        (sigma.pleasure + response.pleasure / n).clamp(-1.0, 1.0),
        (sigma.arousal + response.arousal / n).clamp(-1.0, 1.0),
    )
}

/// Multiplicative return toward equilibrium. Traits are accepted but unused.
pub fn affect_decay(sigma: Pad, _tr: &[f64; 5], rate: f64) -> Pad {
    let k = 1.0 - rate.clamp(0.0, 1.0);
    Pad::new(sigma.pleasure * k, sigma.arousal * k)
}

pub fn select_coping(cs: &[CopingStrategy], sigma: Pad) -> Vec<CopingStrategy> {
    cs.iter()
        .filter(|s| s.region.contains(sigma))
        .cloned()
        .collect()
}

/// The one-step plan a coping action runs as.
pub fn coping_plan(action: &Literal) -> PlanDef {
    PlanDef::new(
        Trigger {
            kind: TriggerKind::AddGoal,
            literal: Literal::new("cope", vec![Term::Struct(action.clone())]),
        },
        Vec::new(),
        vec![BodyStep::Action(action.clone())],
    )
}

/// Appends one intention per strategy action to the tail of C.I.
pub fn cope(strategies: &[CopingStrategy], c: &mut Circumstance, next_id: &mut u64) {
    for s in strategies {
        for a in &s.actions {
            *next_id += 1;
            c.i.push(Intention {
                id: *next_id,
                stack: vec![PlanInstance::new(coping_plan(a))],
            });
        }
    }
}

/// bs' = (bs \ Br) ∪ Ba.
pub fn sync_beliefs(ub: &BeliefUpdate, bs: &BTreeSet<Belief>) -> BTreeSet<Belief> {
    let mut out = bs.clone();
    for b in &ub.br {
        out.remove(b);
    }
    out.extend(ub.ba.iter().cloned());
    out
}

fn same_condition(a: &[CondLit], b: &[CondLit]) -> bool {
    a.iter().collect::<BTreeSet<_>>() == b.iter().collect::<BTreeSet<_>>()
}

/// Adds a feedback receipt to the store. Returns the index of the record.
pub fn accumulate_feedback(fb: &FeedbackMessage, store: &mut Vec<FeedbackRecord>) -> usize {
    if let Some(i) = store
        .iter()
        .position(|r| same_condition(&r.condition, &fb.condition))
    {
        let r = &mut store[i];
        r.accumulated.pleasure += fb.pair.pleasure;
        r.accumulated.arousal += fb.pair.arousal;
        r.count += 1;
        return i;
    }
    store.push(FeedbackRecord {
        condition: fb.condition.clone(),
        accumulated: fb.pair,
        count: 1,
    });
    store.len() - 1
}

pub fn condition_holds(cond: &[CondLit], state: &BTreeSet<Literal>) -> bool {
    cond.iter()
        .all(|c| state.contains(&c.literal) == c.positive)
}

/// States before and after each body step; actions and sends leave beliefs
/// alone.
fn simulate(body: &[BodyStep], start: BTreeSet<Literal>) -> Vec<BTreeSet<Literal>> {
    let mut states = vec![start];
    for step in body {
        let mut next = states.last().cloned().unwrap_or_default();
        match step {
            BodyStep::AddBelief(l) => {
                next.insert(l.clone());
            }
            BodyStep::DelBelief(l) => {
                next.remove(l);
            }
            BodyStep::Action(_) | BodyStep::Send { .. } => {}
        }
        states.push(next);
    }
    states
}

/// Beliefs the plan is run against: current beliefs with the triggering
/// belief present and without what the plan itself asserts, since a `+l`
/// step only matters where `l` may not hold yet.
fn start_state(plan: &PlanDef, beliefs: &BTreeSet<Literal>) -> BTreeSet<Literal> {
    let mut s = beliefs.clone();
    for step in &plan.body {
        if let BodyStep::AddBelief(l) = step {
            s.remove(l);
        }
    }
    if plan.trigger.kind == TriggerKind::AddBelief {
        s.insert(plan.trigger.literal.clone());
    }
    s
}

/// Index of the body step that completes `cond`, i.e. the step after which
/// the condition holds through to the end of the plan.
/// `Ok(None)`: the plan does not end in the condition.
/// `Err(())`: the condition already holds before the body runs.
fn completing_step(
    body: &[BodyStep],
    start: BTreeSet<Literal>,
    cond: &[CondLit],
) -> Result<Option<usize>, ()> {
    let states = simulate(body, start);
    let mut j = states.len();
    while j > 0 && condition_holds(cond, &states[j - 1]) {
        j -= 1;
    }
    if j == states.len() {
        Ok(None)
    } else if j == 0 {
        Err(())
    } else {
        // states[j] is the state after body[j - 1].
        Ok(Some(j - 1))
    }
}

/// Whether running the plan can bring the agent into the condition.
pub fn plan_reaches(plan: &PlanDef, cond: &[CondLit], beliefs: &BTreeSet<Literal>) -> bool {
    matches!(
        completing_step(&plan.body, start_state(plan, beliefs), cond),
        Ok(Some(_))
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocialNormDetection {
    pub record: usize,
    pub avoid: Vec<CondLit>,
    /// Indices into the plan library.
    pub plans: Vec<usize>,
}

/// Finds a record of negative feedback beyond the deviation threshold and
/// the plans that lead into its condition.
pub fn detect_social_norm(
    store: &[FeedbackRecord],
    ps: &[PlanDef],
    beliefs: &BTreeSet<Literal>,
    threshold: Pad,
) -> Option<SocialNormDetection> {
    store.iter().enumerate().find_map(|(ri, r)| {
        let deviates = r.accumulated.pleasure < -threshold.pleasure
            || r.accumulated.arousal < -threshold.arousal;
        if !deviates {
            return None;
        }
        let plans: Vec<usize> = ps
            .iter()
            .enumerate()
            .filter(|(_, p)| plan_reaches(p, &r.condition, beliefs))
            .map(|(i, _)| i)
            .collect();
        (!plans.is_empty()).then(|| SocialNormDetection {
            record: ri,
            avoid: r.condition.clone(),
            plans,
        })
    })
}

fn subsets<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, first) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], k - 1) {
            rest.insert(0, first.clone());
            out.push(rest);
        }
    }
    out
}

/// Copy of `plan` that deletes, just before the step completing `avoid`,
/// the fewest avoid-literals needed so the plan no longer ends in it.
pub fn revise_plan(
    plan: &PlanDef,
    avoid: &[CondLit],
    beliefs: &BTreeSet<Literal>,
) -> Result<PlanDef, AffectError> {
    let start = start_state(plan, beliefs);
    let k = match completing_step(&plan.body, start.clone(), avoid) {
        Ok(None) => return Ok(plan.clone()),
        Err(()) => return Err(AffectError::Unrevisable(plan.to_string())),
        Ok(Some(k)) => k,
    };
    let before = &simulate(&plan.body[..k], start.clone())[k];
    let established = match &plan.body[k] {
        BodyStep::AddBelief(l) => Some(l),
        _ => None,
    };
    let candidates: Vec<Literal> = avoid
        .iter()
        .filter(|c| c.positive && before.contains(&c.literal))
        .map(|c| c.literal.clone())
        .filter(|l| Some(l) != established)
        .collect();
    for size in 1..=candidates.len() {
        for subset in subsets(&candidates, size) {
            let mut revised = plan.clone();
            let dels = subset.into_iter().map(BodyStep::DelBelief);
            revised.body.splice(k..k, dels);
            let start = start_state(&revised, beliefs);
            if !matches!(completing_step(&revised.body, start, avoid), Ok(Some(_))) {
                return Ok(revised);
            }
        }
    }
    Err(AffectError::Unrevisable(plan.to_string()))
}
