//! Norm handling: percept evaluation, plan generation, the comply/break
//! decision, plan and intention ordering, compliance checks and relevance.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::agent::{AgentState, Intention, MemoryEvent, MemoryKind, NormativeBelief};
use crate::lang::{
    AffectedRoles, Belief, BodyStep, Deontic, Literal, NormDecl, NormTag, Pad, PlanDef, Source,
    Term, TriggerKind, Variant,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("malformed norm: {0}")]
    MalformedNorm(String),
}

/// `norm(...)` as a literal, the form in which a norm sits in a belief base.
pub fn norm_literal(decl: &NormDecl) -> Literal {
    let affected = match &decl.affected {
        AffectedRoles::All => Term::Str("ALL".into()),
        AffectedRoles::Roles(r) => Term::List(r.iter().cloned().map(Term::Str).collect()),
    };
    Literal::new(
        "norm",
        vec![
            Term::Str(decl.deontic.to_string()),
            Term::Str(format!("{}.", decl.plan)),
            Term::num(decl.limit_cycle as f64),
            Term::num(decl.relevance),
            affected,
            Term::List(vec![
                Term::num(decl.pre_appraisal.pleasure),
                Term::num(decl.pre_appraisal.arousal),
            ]),
        ],
    )
}

pub fn is_norm_literal(lit: &Literal) -> bool {
    lit.functor == "norm" && lit.args.len() == 6
}

/// Percept-sourced part of the agent's knowledge.
fn agperc(bs: &BTreeSet<Belief>, nbs: &[NormativeBelief]) -> BTreeSet<Literal> {
    let mut out: BTreeSet<Literal> = bs
        .iter()
        .filter(|b| b.source == Source::Percept)
        .map(|b| b.literal.clone())
        .collect();
    out.extend(
        nbs.iter()
            .filter(|n| n.source.as_deref() == Some("percept"))
            .map(|n| norm_literal(&n.decl)),
    );
    out
}

/// Returns (NewP, RemP): what appeared in and what vanished from perception.
pub fn eval_percepts(
    pset: &BTreeSet<Literal>,
    bs: &BTreeSet<Belief>,
    nbs: &[NormativeBelief],
) -> (BTreeSet<Literal>, BTreeSet<Literal>) {
    let known = agperc(bs, nbs);
    let new = pset.difference(&known).cloned().collect();
    let rem = known.difference(pset).cloned().collect();
    (new, rem)
}

pub fn opp_emotion(pa: Pad) -> Pad {
    Pad::new(-pa.pleasure, -pa.arousal)
}

/// Builds the comply and break variants of a norm's plan. `base` is the body
/// of the agent's own plan for the same trigger, if it has one.
pub fn norm_variants(norm: &NormDecl, base: &[BodyStep]) -> Result<(PlanDef, PlanDef), NormError> {
    if !norm.plan.np {
        return Err(NormError::MalformedNorm(format!(
            "plan `{}` lacks the np__ marker",
            norm.plan
        )));
    }
    let id = norm.id();
    let mut comply = norm.plan.clone();
    comply.body = base.to_vec();
    comply.body.extend(norm.plan.body.iter().cloned());
    comply
        .body
        .push(BodyStep::AddBelief(Literal::affect(norm.pre_appraisal)));
    comply.norm = Some(NormTag {
        norm_id: id.clone(),
        variant: Variant::Comply,
    });

    let mut brk = norm.plan.clone();
    brk.body = base.to_vec();
    brk.body
        .push(BodyStep::AddBelief(Literal::affect(opp_emotion(norm.pre_appraisal))));
    brk.norm = Some(NormTag {
        norm_id: id,
        variant: Variant::Break,
    });
    Ok((comply, brk))
}

/// The agent's own (non-normative) plan for a trigger.
pub fn base_plan<'a>(norm: &NormDecl, ps: &'a [PlanDef]) -> Option<&'a PlanDef> {
    ps.iter()
        .find(|p| p.norm.is_none() && p.trigger == norm.plan.trigger)
}

/// Library after incorporating `norm`: unchanged if the norm's plans are
/// already present, otherwise extended by exactly two variants.
pub fn gen_norm_plans(norm: &NormDecl, ps: &[PlanDef]) -> Result<Vec<PlanDef>, NormError> {
    let id = norm.id();
    let mut out = ps.to_vec();
    if ps.iter().any(|p| p.norm_id() == Some(id.as_str())) {
        return Ok(out);
    }
    let base = base_plan(norm, ps).map_or(&[][..], |p| &p.body[..]);
    let (comply, brk) = norm_variants(norm, base)?;
    out.push(comply);
    out.push(brk);
    Ok(out)
}

/// Adds a norm to NB and its variants to ps. Returns false when the norm was
/// already known.
pub fn admit_norm(
    ag: &mut AgentState,
    decl: &NormDecl,
    source: Option<&str>,
) -> Result<bool, NormError> {
    let id = decl.id();
    if ag.norm(&id).is_some() {
        return Ok(false);
    }
    let ps = gen_norm_plans(decl, &ag.ps)?;
    let n = ps.len();
    let (comply, brk) = (ps[n - 2].clone(), ps[n - 1].clone());
    ag.ps = ps;
    ag.nb.push(NormativeBelief {
        id,
        deontic: decl.deontic,
        plan: decl.plan.clone(),
        comply,
        break_plan: brk,
        l: decl.limit_cycle,
        rel: decl.relevance,
        affected_roles: decl.affected.clone(),
        pa: decl.pre_appraisal,
        source: source.map(str::to_string),
        decl: decl.clone(),
    });
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityInputs {
    pub reb: f64,
    pub frac_affected: f64,
    pub s: f64,
    pub s_new: f64,
    pub relevance: f64,
}

/// Scalar mood used by the utility: mean of pleasure and arousal.
pub fn scalar_mood(sigma: Pad) -> f64 {
    (sigma.pleasure + sigma.arousal) / 2.0
}

pub fn clamp_pad(p: Pad) -> Pad {
    Pad::new(p.pleasure.clamp(-1.0, 1.0), p.arousal.clamp(-1.0, 1.0))
}

impl UtilityInputs {
    /// Inputs for deciding on `norm` from the current affective state.
    pub fn for_norm(reb: f64, frac_affected: f64, sigma: Pad, norm: &NormativeBelief) -> Self {
        let anticipated = clamp_pad(Pad::new(
            sigma.pleasure + norm.pa.pleasure,
            sigma.arousal + norm.pa.arousal,
        ));
        UtilityInputs {
            reb,
            frac_affected,
            s: scalar_mood(sigma),
            s_new: scalar_mood(anticipated),
            relevance: norm.rel,
        }
    }
}

/// (comply, break) scores.
pub fn compliance_utility(u: UtilityInputs) -> (f64, f64) {
    let comply = (1.0 - u.reb) * u.frac_affected * (u.s - u.s_new) + u.relevance;
    let brk = u.reb * (1.0 - u.frac_affected) * (u.s + u.s_new) - u.relevance;
    (comply, brk)
}

/// Higher score wins; a tie complies.
pub fn choose_variant(comply: f64, brk: f64) -> Variant {
    if brk > comply {
        Variant::Break
    } else {
        Variant::Comply
    }
}

fn stratum(
    plan: &PlanDef,
    nb: &[NormativeBelief],
    cycle: u64,
    threshold: f64,
    choices: &BTreeMap<String, Variant>,
) -> (u8, u64) {
    let Some(tag) = &plan.norm else {
        return (3, 0);
    };
    let Some(norm) = nb.iter().find(|n| n.id == tag.norm_id) else {
        return (3, 0);
    };
    if !norm.is_active(cycle, threshold) || choices.get(&norm.id) != Some(&tag.variant) {
        return (3, 0);
    }
    let remaining = if norm.l == 0 {
        u64::MAX
    } else {
        norm.l - cycle
    };
    match norm.deontic {
        Deontic::Obligation => (1, remaining),
        Deontic::Prohibition => (2, remaining),
    }
}

/// Orders applicable plans: chosen variants of active obligations (most
/// urgent first, unbounded last), then of active prohibitions, then
/// everything else in the given order. Returns a permutation of indices
/// into `ap`.
pub fn order_applicable_plans(
    ap: &[&PlanDef],
    nb: &[NormativeBelief],
    cycle: u64,
    threshold: f64,
    choices: &BTreeMap<String, Variant>,
) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ap.len()).collect();
    // Stable sort keeps library order among equals.
    idx.sort_by_key(|&i| stratum(ap[i], nb, cycle, threshold, choices));
    idx
}

/// True if the intention's top plan belongs to an active norm.
pub fn is_normative_intention(
    i: &Intention,
    nb: &[NormativeBelief],
    cycle: u64,
    threshold: f64,
) -> bool {
    i.top()
        .and_then(|t| t.plan.norm_id())
        .and_then(|id| nb.iter().find(|n| n.id == id))
        .is_some_and(|n| n.is_active(cycle, threshold))
}

/// Index of the intention to run: the first normative one, else the first.
pub fn select_intention(
    is: &[Intention],
    nb: &[NormativeBelief],
    cycle: u64,
    threshold: f64,
) -> Option<usize> {
    if is.is_empty() {
        return None;
    }
    Some(
        is.iter()
            .position(|i| is_normative_intention(i, nb, cycle, threshold))
            .unwrap_or(0),
    )
}

/// Emotional consequence of executing a regulated action.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceEffect {
    pub norm: String,
    pub deontic: Deontic,
    pub pair: Pad,
}

impl ComplianceEffect {
    pub fn memory_kind(&self) -> MemoryKind {
        match self.deontic {
            Deontic::Obligation => MemoryKind::OwnCompliance,
            Deontic::Prohibition => MemoryKind::OwnViolation,
        }
    }
}

fn regulates(plan: &PlanDef, action: &Literal) -> bool {
    let trig = matches!(plan.trigger.kind, TriggerKind::AddBelief | TriggerKind::AddGoal)
        && plan.body.is_empty()
        && &plan.trigger.literal == action;
    trig || plan
        .body
        .iter()
        .any(|s| matches!(s, BodyStep::Action(a) if a == action))
}

/// ComplyToNorm: pa for an obligation's action, opp(pa) for a prohibited
/// one, nothing otherwise or once the norm expired.
pub fn comply_to_norm(
    action: &Literal,
    nb: &[NormativeBelief],
    cycle: u64,
) -> Option<ComplianceEffect> {
    nb.iter()
        .filter(|n| n.l == 0 || cycle < n.l)
        .find(|n| regulates(&n.plan, action))
        .map(|n| ComplianceEffect {
            norm: n.id.clone(),
            deontic: n.deontic,
            pair: match n.deontic {
                Deontic::Obligation => n.pa,
                Deontic::Prohibition => opp_emotion(n.pa),
            },
        })
}

/// Relevance after one reply about the norm, in a society of `n_agents`.
pub fn increment_relevance(rel: f64, n_agents: usize, delta: f64) -> f64 {
    (rel + delta / n_agents.max(1) as f64).max(1.0)
}

/// Linear decay of every norm not reinforced during `tick`.
pub fn relevance_decay(nb: &mut [NormativeBelief], mem: &[MemoryEvent], tick: u64, rate: f64) {
    let reinforced: BTreeSet<&str> = mem
        .iter()
        .rev()
        .take_while(|e| e.tick >= tick)
        .filter(|e| e.tick == tick && e.kind == MemoryKind::NormFeedbackReceived)
        .filter_map(|e| e.norm.as_deref())
        .collect();
    for n in nb.iter_mut() {
        if !reinforced.contains(n.id.as_str()) {
            let v = n.rel - rate;
            // Repeated subtraction leaves rounding residue (0.3 - 3 * 0.1 > 0);
            // anything that small counts as fully decayed.
            n.rel = if v <= rate * 1e-9 { 0.0 } else { v };
        }
    }
}
