//! Syntax tree for agent programs. Every type renders back to source text
//! through `Display`; `parse(render(x)) == x` holds for all of them.

use std::fmt;

use ordered_float::OrderedFloat;
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

/// A ground term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Atom(String),
    Num(OrderedFloat<f64>),
    Str(String),
    Struct(Literal),
    List(Vec<Term>),
}

impl Term {
    pub fn num(v: f64) -> Term {
        Term::Num(OrderedFloat(v))
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Atom(s) => Some(s),
            _ => None,
        }
    }
}

/// A ground atomic formula, `functor(arg, ...)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub functor: String,
    pub args: Vec<Term>,
}

impl Literal {
    pub fn atom(name: impl Into<String>) -> Literal {
        Literal {
            functor: name.into(),
            args: Vec::new(),
        }
    }

    pub fn new(functor: impl Into<String>, args: Vec<Term>) -> Literal {
        Literal {
            functor: functor.into(),
            args,
        }
    }

    /// `affect(p, a)`: the belief through which a normative plan variant
    /// hands its emotional consequence to the affective cycle.
    pub fn affect(pair: Pad) -> Literal {
        Literal::new(
            AFFECT_FUNCTOR,
            vec![Term::num(pair.pleasure), Term::num(pair.arousal)],
        )
    }

    /// Inverse of [`Literal::affect`].
    pub fn as_affect(&self) -> Option<Pad> {
        if self.functor != AFFECT_FUNCTOR || self.args.len() != 2 {
            return None;
        }
        match (&self.args[0], &self.args[1]) {
            (Term::Num(p), Term::Num(a)) => Some(Pad::new(p.0, a.0)),
            _ => None,
        }
    }
}

pub const AFFECT_FUNCTOR: &str = "affect";

/// Annotation recording where a belief came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Source {
    #[default]
    SelfSource,
    Percept,
    Agent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Belief {
    pub literal: Literal,
    pub source: Source,
}

impl Belief {
    pub fn new(literal: Literal, source: Source) -> Belief {
        Belief { literal, source }
    }

    pub fn own(literal: Literal) -> Belief {
        Belief::new(literal, Source::SelfSource)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TriggerKind {
    AddBelief,
    DelBelief,
    AddGoal,
    DelGoal,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trigger {
    pub kind: TriggerKind,
    pub literal: Literal,
}

impl Trigger {
    pub fn add_belief(literal: Literal) -> Trigger {
        Trigger {
            kind: TriggerKind::AddBelief,
            literal,
        }
    }
}

/// One conjunct of a plan context.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextLit {
    pub negated: bool,
    pub literal: Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Force {
    Tell,
    Untell,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BodyStep {
    AddBelief(Literal),
    DelBelief(Literal),
    Action(Literal),
    Send {
        to: String,
        force: Force,
        content: Term,
    },
}

/// Pleasure/arousal pair, the part of PAD space used for affective states,
/// pre-appraisals and feedback payloads.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Pad {
    pub pleasure: f64,
    pub arousal: f64,
}

impl Pad {
    pub const ZERO: Pad = Pad {
        pleasure: 0.0,
        arousal: 0.0,
    };

    pub const fn new(pleasure: f64, arousal: f64) -> Pad {
        Pad { pleasure, arousal }
    }

    pub fn in_unit_box(&self) -> bool {
        (-1.0..=1.0).contains(&self.pleasure) && (-1.0..=1.0).contains(&self.arousal)
    }

    pub fn is_zero(&self) -> bool {
        self.pleasure == 0.0 && self.arousal == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Deontic {
    Obligation,
    Prohibition,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AffectedRoles {
    All,
    Roles(Vec<String>),
}

impl AffectedRoles {
    pub fn includes(&self, roles: &[String]) -> bool {
        match self {
            AffectedRoles::All => true,
            AffectedRoles::Roles(list) => list.iter().any(|r| roles.contains(r)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Comply,
    Break,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Comply => "comply",
            Variant::Break => "break",
        })
    }
}

/// Marks a plan generated from a norm.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormTag {
    pub norm_id: String,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanDef {
    pub label: Option<Literal>,
    pub trigger: Trigger,
    /// Conjunction; empty means `true`.
    pub context: Vec<ContextLit>,
    pub body: Vec<BodyStep>,
    /// Declared with the `np__` marker.
    pub np: bool,
    pub norm: Option<NormTag>,
}

impl PlanDef {
    pub fn new(trigger: Trigger, context: Vec<ContextLit>, body: Vec<BodyStep>) -> PlanDef {
        PlanDef {
            label: None,
            trigger,
            context,
            body,
            np: false,
            norm: None,
        }
    }

    pub fn norm_id(&self) -> Option<&str> {
        self.norm.as_ref().map(|t| t.norm_id.as_str())
    }
}

/// A norm declaration as written in a `norms__` block or a Tell payload.
#[derive(Debug, Clone, PartialEq)]
pub struct NormDecl {
    pub deontic: Deontic,
    pub plan: PlanDef,
    /// 0 means the norm never expires.
    pub limit_cycle: u64,
    pub relevance: f64,
    pub affected: AffectedRoles,
    pub pre_appraisal: Pad,
}

impl NormDecl {
    /// Stable identifier derived from the norm text. Relevance is left out so
    /// that re-announcing a norm with a different weight names the same norm.
    pub fn id(&self) -> String {
        let canonical = format!(
            "{}|{}|{}|{}|{}",
            self.deontic,
            PlanText(&self.plan),
            self.limit_cycle,
            self.affected,
            PadText(self.pre_appraisal)
        );
        let digest = Sha256::digest(canonical.as_bytes());
        let hex: String = digest.iter().take(4).map(|b| format!("{b:02x}")).collect();
        format!("norm-{hex}")
    }
}

/// Closed rectangle in pleasure x arousal space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffectRegion {
    pub pleasure: (f64, f64),
    pub arousal: (f64, f64),
}

impl Default for AffectRegion {
    fn default() -> Self {
        AffectRegion {
            pleasure: (-1.0, 1.0),
            arousal: (-1.0, 1.0),
        }
    }
}

impl AffectRegion {
    pub fn contains(&self, state: Pad) -> bool {
        let (pl, ph) = self.pleasure;
        let (al, ah) = self.arousal;
        pl <= state.pleasure && state.pleasure <= ph && al <= state.arousal && state.arousal <= ah
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopingStrategy {
    pub region: AffectRegion,
    pub actions: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonalityDecl {
    /// OCEAN: openness, conscientiousness, extraversion, agreeableness, neuroticism.
    pub traits: [f64; 5],
    pub rationality: f64,
    pub coping: Vec<CopingStrategy>,
    pub rebelliousness: f64,
}

impl Default for PersonalityDecl {
    fn default() -> Self {
        PersonalityDecl {
            traits: [0.0; 5],
            rationality: 0.0,
            coping: Vec::new(),
            rebelliousness: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentProgram {
    pub initial_beliefs: Vec<Belief>,
    pub initial_goals: Vec<Literal>,
    pub plans: Vec<PlanDef>,
    pub concerns: Vec<Literal>,
    pub personality: PersonalityDecl,
    pub roles: Vec<String>,
    pub norms: Vec<NormDecl>,
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn write_str_lit(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

fn write_sep<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(s) => f.write_str(s),
            Term::Num(n) => write!(f, "{}", n.0),
            Term::Str(s) => write_str_lit(f, s),
            Term::Struct(l) => write!(f, "{l}"),
            Term::List(items) => {
                f.write_str("[")?;
                write_sep(f, items, ", ")?;
                f.write_str("]")
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.functor)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_sep(f, &self.args, ", ")?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::SelfSource => f.write_str("self"),
            Source::Percept => f.write_str("percept"),
            Source::Agent(id) => f.write_str(id),
        }
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.literal)?;
        if self.source != Source::SelfSource {
            write!(f, "[source({})]", self.source)?;
        }
        Ok(())
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.kind {
            TriggerKind::AddBelief => "+",
            TriggerKind::DelBelief => "-",
            TriggerKind::AddGoal => "+!",
            TriggerKind::DelGoal => "-!",
        };
        write!(f, "{prefix}{}", self.literal)
    }
}

impl fmt::Display for ContextLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        write!(f, "{}", self.literal)
    }
}

impl fmt::Display for Force {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Force::Tell => "tell",
            Force::Untell => "untell",
        })
    }
}

impl fmt::Display for BodyStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyStep::AddBelief(l) => write!(f, "+{l}"),
            BodyStep::DelBelief(l) => write!(f, "-{l}"),
            BodyStep::Action(l) => write!(f, "{l}"),
            BodyStep::Send { to, force, content } => {
                write!(f, ".sendMsg({to}, {force}, {content})")
            }
        }
    }
}

impl fmt::Display for PlanDef {
    /// Source form without the terminating `.`. Norm-generated variants
    /// print like ordinary plans; their tag is not part of the language.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(label) = &self.label {
            write!(f, "@{label} ")?;
        }
        if self.np {
            f.write_str("np__")?;
            if self.trigger.kind == TriggerKind::AddBelief {
                write!(f, "{}", self.trigger.literal)?;
            } else {
                write!(f, "{}", self.trigger)?;
            }
        } else {
            write!(f, "{}", self.trigger)?;
        }
        if !self.context.is_empty() {
            f.write_str(" : ")?;
            write_sep(f, &self.context, " & ")?;
        }
        if !self.body.is_empty() {
            f.write_str(" <- ")?;
            write_sep(f, &self.body, "; ")?;
        }
        Ok(())
    }
}

struct PlanText<'a>(&'a PlanDef);

impl fmt::Display for PlanText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.", self.0)
    }
}

struct PadText(Pad);

impl fmt::Display for PadText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.0.pleasure, self.0.arousal)
    }
}

impl fmt::Display for Pad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", PadText(*self))
    }
}

impl fmt::Display for Deontic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Deontic::Obligation => "obligation",
            Deontic::Prohibition => "prohibition",
        })
    }
}

impl fmt::Display for AffectedRoles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AffectedRoles::All => f.write_str("\"ALL\""),
            AffectedRoles::Roles(roles) => {
                f.write_str("[")?;
                for (i, r) in roles.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_str_lit(f, r)?;
                }
                f.write_str("]")
            }
        }
    }
}

impl fmt::Display for NormDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("norm(")?;
        write_str_lit(f, &self.deontic.to_string())?;
        f.write_str(", ")?;
        write_str_lit(f, &PlanText(&self.plan).to_string())?;
        write!(
            f,
            ", {}, {}, {}, {})",
            self.limit_cycle,
            self.relevance,
            self.affected,
            PadText(self.pre_appraisal)
        )
    }
}

impl fmt::Display for AffectRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut bounds = Vec::new();
        for (name, (lo, hi)) in [("pleasure", self.pleasure), ("arousal", self.arousal)] {
            if lo > -1.0 {
                bounds.push(format!("{name} >= {lo}"));
            }
            if hi < 1.0 {
                bounds.push(format!("{name} <= {hi}"));
            }
        }
        if bounds.is_empty() {
            f.write_str("true")
        } else {
            f.write_str(&bounds.join(" & "))
        }
    }
}

impl fmt::Display for CopingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "coping({}, [", self.region)?;
        write_sep(f, &self.actions, ", ")?;
        f.write_str("])")
    }
}

impl fmt::Display for PersonalityDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.traits;
        write!(
            f,
            "personality__: {{ [{}, {}, {}, {}, {}], {}, [",
            t[0], t[1], t[2], t[3], t[4], self.rationality
        )?;
        write_sep(f, &self.coping, ", ")?;
        write!(f, "], {} }}.", self.rebelliousness)
    }
}

impl fmt::Display for AgentProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.initial_beliefs {
            writeln!(f, "{b}.")?;
        }
        for g in &self.initial_goals {
            writeln!(f, "!{g}.")?;
        }
        for p in &self.plans {
            writeln!(f, "{p}.")?;
        }
        if !self.concerns.is_empty() {
            f.write_str("concerns__: { ")?;
            write_sep(f, &self.concerns, ", ")?;
            f.write_str(" }.\n")?;
        }
        if self.personality != PersonalityDecl::default() {
            writeln!(f, "{}", self.personality)?;
        }
        if !self.roles.is_empty() {
            f.write_str("roles__: { ")?;
            for (i, r) in self.roles.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_str_lit(f, r)?;
            }
            f.write_str(" }.\n")?;
        }
        if !self.norms.is_empty() {
            f.write_str("norms__: {\n")?;
            for (i, n) in self.norms.iter().enumerate() {
                let sep = if i + 1 < self.norms.len() { "," } else { "" };
                writeln!(f, "    {n}{sep}")?;
            }
            f.write_str("}.\n")?;
        }
        Ok(())
    }
}

macro_rules! serialize_as_text {
    ($($ty:ty),* $(,)?) => {
        $(impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        })*
    };
}

serialize_as_text!(
    Term,
    Literal,
    Belief,
    Trigger,
    ContextLit,
    BodyStep,
    PlanDef,
    NormDecl,
    CopingStrategy,
    AffectedRoles,
);
