//! The agent configuration ⟨ag, C, M, T, Mem, Ta, s, ast⟩ and the vocabulary
//! shared by the transition rules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::lang::{
    AffectedRoles, AgentProgram, Belief, CondLit, CopingStrategy, Deontic, Force, Literal,
    NormDecl, Pad, PlanDef, Source, Term, Trigger,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StepLabel {
    Perceive,
    ProcMsg,
    SelEv,
    RelPl,
    ApplPl,
    SelAppl,
    AddIM,
    SelInt,
    ExecInt,
    ClrInt,
    AffModB,
}

impl StepLabel {
    pub const ALL: [StepLabel; 11] = [
        StepLabel::Perceive,
        StepLabel::ProcMsg,
        StepLabel::SelEv,
        StepLabel::RelPl,
        StepLabel::ApplPl,
        StepLabel::SelAppl,
        StepLabel::AddIM,
        StepLabel::SelInt,
        StepLabel::ExecInt,
        StepLabel::ClrInt,
        StepLabel::AffModB,
    ];
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AffectiveStepLabel {
    Appr,
    UpAs,
    SelCs,
    Cope,
}

impl fmt::Display for AffectiveStepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Runtime personality P = ⟨tr, rl, cs, reb⟩.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Personality {
    pub tr: [f64; 5],
    pub rl: f64,
    pub cs: Vec<CopingStrategy>,
    pub reb: f64,
}

/// A norm the agent knows about, together with the plans generated for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormativeBelief {
    pub id: String,
    #[serde(rename = "do")]
    pub deontic: Deontic,
    /// The norm's own `np__` plan.
    pub plan: PlanDef,
    pub comply: PlanDef,
    #[serde(rename = "break")]
    pub break_plan: PlanDef,
    pub l: u64,
    pub rel: f64,
    pub affected_roles: AffectedRoles,
    pub pa: Pad,
    /// Agent that announced the norm, if it came in a message.
    pub source: Option<String>,
    pub decl: NormDecl,
}

impl NormativeBelief {
    pub fn is_active(&self, cycle: u64, threshold: f64) -> bool {
        (self.l == 0 || cycle < self.l) && self.rel >= threshold
    }
}

/// Accumulated social feedback about one belief conjunction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackRecord {
    #[serde(serialize_with = "serialize_display_list")]
    pub condition: Vec<CondLit>,
    pub accumulated: Pad,
    pub count: u64,
}

fn serialize_display_list<S, T>(items: &[T], s: S) -> Result<S::Ok, S::Error>
where
    S: serde::Serializer,
    T: fmt::Display,
{
    s.collect_seq(items.iter().map(|i| i.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentState {
    pub bs: BTreeSet<Belief>,
    pub ps: Vec<PlanDef>,
    pub cc: Vec<Literal>,
    #[serde(rename = "P")]
    pub p: Personality,
    #[serde(rename = "NB")]
    pub nb: Vec<NormativeBelief>,
    /// Social-feedback store; each record is one accumulated belief.
    pub feedback: Vec<FeedbackRecord>,
}

impl AgentState {
    pub fn holds(&self, lit: &Literal) -> bool {
        self.bs.iter().any(|b| &b.literal == lit)
    }

    pub fn norm(&self, id: &str) -> Option<&NormativeBelief> {
        self.nb.iter().find(|n| n.id == id)
    }

    pub fn norm_mut(&mut self, id: &str) -> Option<&mut NormativeBelief> {
        self.nb.iter_mut().find(|n| n.id == id)
    }

    /// Literals currently believed, regardless of source.
    pub fn literals(&self) -> BTreeSet<Literal> {
        self.bs.iter().map(|b| b.literal.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanInstance {
    pub plan: PlanDef,
    /// Index of the next body step.
    pub pc: usize,
}

impl PlanInstance {
    pub fn new(plan: PlanDef) -> PlanInstance {
        PlanInstance { plan, pc: 0 }
    }

    pub fn finished(&self) -> bool {
        self.pc >= self.plan.body.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Intention {
    pub id: u64,
    pub stack: Vec<PlanInstance>,
}

impl Intention {
    pub fn top(&self) -> Option<&PlanInstance> {
        self.stack.last()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub trigger: Trigger,
    /// None is ⊤, an external event.
    pub intention: Option<u64>,
}

impl Event {
    pub fn external(trigger: Trigger) -> Event {
        Event {
            trigger,
            intention: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Circumstance {
    #[serde(rename = "I")]
    pub i: Vec<Intention>,
    #[serde(rename = "E")]
    pub e: VecDeque<Event>,
    #[serde(rename = "A")]
    pub a: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Audience {
    All,
    Roles(Vec<String>),
    Agent(String),
}

impl From<&AffectedRoles> for Audience {
    fn from(r: &AffectedRoles) -> Audience {
        match r {
            AffectedRoles::All => Audience::All,
            AffectedRoles::Roles(roles) => Audience::Roles(roles.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Message {
    pub mid: String,
    pub sender: String,
    pub to: Audience,
    pub force: Force,
    pub content: String,
    /// Id of the norm the message refers to.
    pub norm: Option<String>,
    pub appraisal: Option<Pad>,
    /// Set when the message answers an earlier one.
    pub reply_to: Option<String>,
}

impl Message {
    pub fn tell(mid: String, sender: &str, to: Audience, content: impl Into<String>) -> Message {
        Message {
            mid,
            sender: sender.to_string(),
            to,
            force: Force::Tell,
            content: content.into(),
            norm: None,
            appraisal: None,
            reply_to: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Mailboxes {
    #[serde(rename = "In")]
    pub inbox: VecDeque<Message>,
    #[serde(rename = "Out")]
    pub outbox: Vec<Message>,
    /// Suspended intentions by message id. Only ask-style protocols would
    /// fill this; it stays empty here.
    #[serde(rename = "SI")]
    pub si: BTreeMap<String, u64>,
}

/// θ. Always empty: the language is ground.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Substitution(pub BTreeMap<String, Term>);

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TemporaryInfo {
    /// Relevant plans, as indices into `ag.ps`.
    #[serde(rename = "R")]
    pub r: Vec<usize>,
    #[serde(rename = "Ap")]
    pub ap: Vec<usize>,
    #[serde(rename = "ι")]
    pub iota: Option<u64>,
    #[serde(rename = "ε")]
    pub epsilon: Option<Event>,
    #[serde(rename = "ρ")]
    pub rho: Option<usize>,
    #[serde(rename = "θ")]
    pub theta: Substitution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryKind {
    NormFeedbackReceived,
    OwnCompliance,
    OwnViolation,
    SocialFeedback,
}

impl MemoryKind {
    pub fn self_caused(self) -> bool {
        matches!(self, MemoryKind::OwnCompliance | MemoryKind::OwnViolation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryEvent {
    pub tick: u64,
    pub kind: MemoryKind,
    #[serde(serialize_with = "serialize_display_list")]
    pub literals: Vec<CondLit>,
    pub pair: Pad,
    pub norm: Option<String>,
}

/// An emotional consequence waiting in Ub for AffModB.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PendingAffect {
    pub pair: Pad,
    pub kind: MemoryKind,
    pub norm: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BeliefUpdate {
    #[serde(rename = "Ba")]
    pub ba: Vec<Belief>,
    #[serde(rename = "Br")]
    pub br: Vec<Belief>,
    pub st: Option<StepLabel>,
    pub affect: Vec<PendingAffect>,
}

impl BeliefUpdate {
    pub fn is_empty(&self) -> bool {
        self.ba.is_empty() && self.br.is_empty() && self.affect.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppraisalVars {
    pub desirability: f64,
    pub likelihood: f64,
    pub expectedness: f64,
    pub controllability: f64,
    pub causal_attribution: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AffectiveTemp {
    #[serde(rename = "Ub")]
    pub ub: BeliefUpdate,
    #[serde(rename = "Av")]
    pub av: Option<AppraisalVars>,
    #[serde(rename = "Cs")]
    pub cs: Vec<CopingStrategy>,
    #[serde(rename = "σ")]
    pub sigma: Pad,
}

/// Decides whether a message is accepted (SocAcc).
pub type SocAcc = fn(&AgentConfig, &Message) -> bool;

pub fn accept_all(_: &AgentConfig, _: &Message) -> bool {
    true
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentSettings {
    pub relevance_threshold: f64,
    pub delta: f64,
    pub decay_affect: f64,
    pub decay_relevance: f64,
    pub deviation_threshold: Pad,
    /// Functors of beliefs the agent broadcasts when they change.
    pub public_beliefs: Vec<String>,
    pub state_audience: Audience,
    #[serde(skip)]
    pub soc_acc: SocAcc,
}

impl Default for AgentSettings {
    fn default() -> Self {
        AgentSettings {
            relevance_threshold: 25.0,
            delta: 0.1,
            decay_affect: 0.05,
            decay_relevance: 0.05,
            deviation_threshold: Pad::new(0.5, 0.5),
            public_beliefs: Vec::new(),
            state_audience: Audience::All,
            soc_acc: accept_all,
        }
    }
}

/// What the agent decided for one norm at plan selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub cycle: u64,
    pub norm: String,
    pub comply: f64,
    #[serde(rename = "break")]
    pub break_score: f64,
    pub variant: crate::lang::Variant,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentConfig {
    pub id: String,
    pub roles: Vec<String>,
    pub ag: AgentState,
    #[serde(rename = "C")]
    pub c: Circumstance,
    #[serde(rename = "M")]
    pub m: Mailboxes,
    #[serde(rename = "T")]
    pub t: TemporaryInfo,
    #[serde(rename = "Mem")]
    pub mem: Vec<MemoryEvent>,
    #[serde(rename = "Ta")]
    pub ta: AffectiveTemp,
    pub s: StepLabel,
    pub ast: AffectiveStepLabel,
    /// Completed reasoning cycles.
    pub cycle: u64,
    pub settings: AgentSettings,
    /// First Mem entry not yet seen by the affective cycle.
    pub mem_cursor: usize,
    pub decisions: Vec<Decision>,
    /// Last public-belief digest sent, if any.
    pub published: Option<BTreeSet<Literal>>,
    pub next_intention: u64,
    pub next_mid: u64,
}

impl AgentConfig {
    /// Initial configuration: s = Perceive, ast = Appr, σ = (0,0), empty C
    /// apart from the events for initial goals, empty Mem.
    pub fn new(id: impl Into<String>, program: &AgentProgram, settings: AgentSettings) -> AgentConfig {
        let pers = &program.personality;
        let mut agent = AgentConfig {
            id: id.into(),
            roles: program.roles.clone(),
            ag: AgentState {
                bs: program.initial_beliefs.iter().cloned().collect(),
                ps: program.plans.clone(),
                cc: program.concerns.clone(),
                p: Personality {
                    tr: pers.traits,
                    rl: pers.rationality,
                    cs: pers.coping.clone(),
                    reb: pers.rebelliousness,
                },
                nb: Vec::new(),
                feedback: Vec::new(),
            },
            c: Circumstance::default(),
            m: Mailboxes::default(),
            t: TemporaryInfo::default(),
            mem: Vec::new(),
            ta: AffectiveTemp::default(),
            s: StepLabel::Perceive,
            ast: AffectiveStepLabel::Appr,
            cycle: 0,
            settings,
            mem_cursor: 0,
            decisions: Vec::new(),
            published: None,
            next_intention: 0,
            next_mid: 0,
        };
        for goal in &program.initial_goals {
            agent.c.e.push_back(Event::external(Trigger {
                kind: crate::lang::TriggerKind::AddGoal,
                literal: goal.clone(),
            }));
        }
        for decl in &program.norms {
            // Plans in a norms block cannot be malformed: the parser checked them.
            let _ = crate::norm::admit_norm(&mut agent.ag, decl, None);
        }
        agent
    }

    pub fn fresh_mid(&mut self) -> String {
        self.next_mid += 1;
        format!("{}#{}", self.id, self.next_mid)
    }

    pub fn fresh_intention_id(&mut self) -> u64 {
        self.next_intention += 1;
        self.next_intention
    }

    pub fn holds_role(&self, role: &str) -> bool {
        self.roles.iter().any(|r| r == role)
    }

    /// Structured dump with the tuple's field names.
    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::json!({
            "ag": &self.ag,
            "C": &self.c,
            "M": &self.m,
            "T": &self.t,
            "Mem": &self.mem,
            "Ta": &self.ta,
            "s": self.s,
            "ast": self.ast,
        })
    }

    /// Checks every structural invariant of the configuration.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for i in &self.c.i {
            if i.stack.is_empty() {
                return Err(format!("intention {} has an empty stack", i.id));
            }
            if !seen.insert(i.id) {
                return Err(format!("duplicate intention id {}", i.id));
            }
        }
        for p in &self.ag.ps {
            if let Some(id) = p.norm_id() {
                if self.ag.norm(id).is_none() {
                    return Err(format!("plan `{p}` references unknown norm {id}"));
                }
            }
        }
        for n in &self.ag.nb {
            if n.rel.is_nan() || n.rel < 0.0 {
                return Err(format!("norm {} has relevance {}", n.id, n.rel));
            }
            if !n.pa.in_unit_box() {
                return Err(format!("norm {} has pre-appraisal {}", n.id, n.pa));
            }
        }
        if !self.ta.sigma.in_unit_box() {
            return Err(format!("affective state {} left [-1,1]²", self.ta.sigma));
        }
        if let Some(av) = &self.ta.av {
            let unit = |v: f64| (0.0..=1.0).contains(&v);
            if !(unit(av.desirability)
                && unit(av.likelihood)
                && unit(av.controllability)
                && unit(av.causal_attribution)
                && (-1.0..=1.0).contains(&av.expectedness))
            {
                return Err(format!("appraisal variables out of range: {av:?}"));
            }
        }
        if !self.t.ap.iter().all(|p| self.t.r.contains(p)) {
            return Err("Ap is not a subset of R".into());
        }
        for w in self.mem.windows(2) {
            if w[0].tick > w[1].tick {
                return Err("Mem ticks decrease".into());
            }
        }
        for queue in [
            self.m.inbox.iter().collect::<Vec<_>>(),
            self.m.outbox.iter().collect::<Vec<_>>(),
        ] {
            let mut mids = BTreeSet::new();
            for m in queue {
                if !mids.insert((&m.sender, &m.mid)) {
                    return Err(format!("duplicate message id {}", m.mid));
                }
            }
        }
        for f in &self.ag.feedback {
            if f.count == 0 || !f.accumulated.pleasure.is_finite() || !f.accumulated.arousal.is_finite()
            {
                return Err("malformed feedback record".into());
            }
        }
        Ok(())
    }
}

/// Which roles each agent of the society holds.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RoleRegistry {
    pub agents: Vec<(String, Vec<String>)>,
}

impl RoleRegistry {
    pub fn new(agents: Vec<(String, Vec<String>)>) -> RoleRegistry {
        RoleRegistry { agents }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Share of agents holding at least one affected role; ALL is 1.
    pub fn fraction_affected(&self, affected: &AffectedRoles) -> f64 {
        match affected {
            AffectedRoles::All => 1.0,
            AffectedRoles::Roles(_) if self.agents.is_empty() => 0.0,
            AffectedRoles::Roles(_) => {
                let n = self
                    .agents
                    .iter()
                    .filter(|(_, roles)| affected.includes(roles))
                    .count();
                n as f64 / self.agents.len() as f64
            }
        }
    }

    /// Recipients of a message from `sender`, in registry order.
    pub fn recipients(&self, sender: &str, to: &Audience) -> Vec<String> {
        self.agents
            .iter()
            .filter(|(id, roles)| match to {
                Audience::All => id != sender,
                Audience::Roles(wanted) => id != sender && wanted.iter().any(|r| roles.contains(r)),
                Audience::Agent(target) => id == target,
            })
            .map(|(id, _)| id.clone())
            .collect()
    }
}

/// Convenience for building a self-sourced belief from a literal.
pub fn own(literal: Literal) -> Belief {
    Belief::new(literal, Source::SelfSource)
}
