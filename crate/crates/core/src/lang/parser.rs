//! Recursive-descent parser for the agent language.

use std::collections::BTreeSet;

use serde::Serialize;

use super::ast::*;
use super::error::LangError;
use super::lexer::{tokenize, Span, Token, TokenKind};

/// Grammar productions, tracked so a corpus can be checked for coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Production {
    Agent,
    InitBels,
    InitGoals,
    Plans,
    Concerns,
    Personality,
    Traits,
    RatLevel,
    CopingStrats,
    RebLevel,
    Roles,
    Role,
    Norms,
    Norm,
    DeonticOperator,
    NormativePlan,
    LimitCycle,
    Relevance,
    AffectedRolesAll,
    AffectedRolesList,
    PreAppraisal,
}

impl Production {
    pub const ALL: [Production; 21] = [
        Production::Agent,
        Production::InitBels,
        Production::InitGoals,
        Production::Plans,
        Production::Concerns,
        Production::Personality,
        Production::Traits,
        Production::RatLevel,
        Production::CopingStrats,
        Production::RebLevel,
        Production::Roles,
        Production::Role,
        Production::Norms,
        Production::Norm,
        Production::DeonticOperator,
        Production::NormativePlan,
        Production::LimitCycle,
        Production::Relevance,
        Production::AffectedRolesAll,
        Production::AffectedRolesList,
        Production::PreAppraisal,
    ];
}

pub fn parse_agent_program(source: &str) -> Result<AgentProgram, LangError> {
    parse_agent_program_with_coverage(source).map(|(p, _)| p)
}

/// Like [`parse_agent_program`], also returning the productions the input used.
pub fn parse_agent_program_with_coverage(
    source: &str,
) -> Result<(AgentProgram, BTreeSet<Production>), LangError> {
    let mut p = Parser::new(source)?;
    let program = p.program()?;
    Ok((program, p.coverage))
}

/// Parses the payload of a Tell message as a norm.
///
/// Returns [`LangError::NotANorm`] when the payload's head is not `norm(`,
/// in which case the caller treats it as an ordinary belief.
pub fn parse_norm_literal(content: &str) -> Result<NormDecl, LangError> {
    let mut p = Parser::new(content)?;
    let is_norm = matches!(p.peek(), Some(TokenKind::Ident(s)) if s == "norm")
        && matches!(p.peek_at(1), Some(TokenKind::LParen));
    if !is_norm {
        return Err(LangError::NotANorm);
    }
    let norm = p.norm()?;
    p.eat(&TokenKind::Dot);
    p.expect_end()?;
    Ok(norm)
}

/// Parses a single ground literal, e.g. a message payload or a config value.
pub fn parse_literal(text: &str) -> Result<Literal, LangError> {
    let mut p = Parser::new(text)?;
    let lit = p.literal()?;
    p.eat(&TokenKind::Dot);
    p.expect_end()?;
    Ok(lit)
}

/// Parses one plan written as it would appear in an agent file.
pub fn parse_plan(text: &str) -> Result<PlanDef, LangError> {
    let mut p = Parser::new(text)?;
    let plan = p.plan(false)?;
    p.expect(&TokenKind::Dot, "`.`")?;
    p.expect_end()?;
    Ok(plan)
}

/// Parses a social-feedback payload, `(+a;+b),[p,a]`.
pub fn parse_feedback(text: &str) -> Result<FeedbackMessage, LangError> {
    let mut p = Parser::new(text)?;
    p.expect(&TokenKind::LParen, "`(`")?;
    let mut condition = vec![p.cond_lit()?];
    while p.eat(&TokenKind::Semi) {
        condition.push(p.cond_lit()?);
    }
    p.expect(&TokenKind::RParen, "`)`")?;
    p.expect(&TokenKind::Comma, "`,`")?;
    let span = p.span();
    let pair = p.pair()?;
    if !pair.in_unit_box() {
        return Err(LangError::Semantic {
            span,
            message: "feedback appraisal must lie in [-1,1]x[-1,1]".into(),
        });
    }
    p.expect_end()?;
    Ok(FeedbackMessage { condition, pair })
}

/// One conjunct of a feedback condition: `+lit` (holds) or `-lit` (absent).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CondLit {
    pub positive: bool,
    pub literal: Literal,
}

impl std::fmt::Display for CondLit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", if self.positive { "+" } else { "-" }, self.literal)
    }
}

/// Social feedback as carried in message content.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackMessage {
    pub condition: Vec<CondLit>,
    pub pair: Pad,
}

impl std::fmt::Display for FeedbackMessage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.condition.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "),[{},{}]", self.pair.pleasure, self.pair.arousal)
    }
}

const SECTION_CONCERNS: &str = "concerns__";
const SECTION_PERSONALITY: &str = "personality__";
const SECTION_ROLES: &str = "roles__";
const SECTION_NORMS: &str = "norms__";

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: Span,
    coverage: BTreeSet<Production>,
}

fn end_span(source: &str) -> Span {
    let mut line = 1;
    let mut column = 1;
    for c in source.chars() {
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    Span {
        offset: source.len(),
        line,
        column,
    }
}

fn is_variable(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_uppercase() || c == '_')
}

impl Parser {
    fn new(source: &str) -> Result<Parser, LangError> {
        Ok(Parser {
            toks: tokenize(source)?,
            pos: 0,
            end: end_span(source),
            coverage: BTreeSet::new(),
        })
    }

    fn mark(&mut self, p: Production) {
        self.coverage.insert(p);
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.toks.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.toks.get(self.pos + n).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map_or(self.end, |t| t.span)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> LangError {
        LangError::Parse {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self
                .peek()
                .map_or_else(|| "end of input".to_string(), TokenKind::describe),
        }
    }

    fn semantic(span: Span, message: impl Into<String>) -> LangError {
        LangError::Semantic {
            span,
            message: message.into(),
        }
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<Span, LangError> {
        let span = self.span();
        if self.eat(kind) {
            Ok(span)
        } else {
            Err(self.error(&[what]))
        }
    }

    fn expect_end(&self) -> Result<(), LangError> {
        if self.pos < self.toks.len() {
            Err(self.error(&["end of input"]))
        } else {
            Ok(())
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), LangError> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, span))
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), LangError> {
        match self.peek() {
            Some(TokenKind::Ident(s)) if s == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&[&format!("`{word}`")])),
        }
    }

    fn at_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Ident(s)) if s == word)
    }

    fn string(&mut self, what: &str) -> Result<(String, Span), LangError> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, span))
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn number(&mut self) -> Result<f64, LangError> {
        let negative = self.eat(&TokenKind::Minus);
        match self.peek() {
            Some(&TokenKind::Num(v)) => {
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.error(&["number"])),
        }
    }

    // -- terms and literals -------------------------------------------------

    fn term(&mut self) -> Result<Term, LangError> {
        match self.peek() {
            Some(TokenKind::Ident(_)) => {
                let lit = self.literal()?;
                Ok(if lit.args.is_empty() {
                    Term::Atom(lit.functor)
                } else {
                    Term::Struct(lit)
                })
            }
            Some(TokenKind::Num(_)) | Some(TokenKind::Minus) => Ok(Term::num(self.number()?)),
            Some(TokenKind::Str(_)) => Ok(Term::Str(self.string("string")?.0)),
            Some(TokenKind::LBracket) => {
                self.pos += 1;
                let mut items = Vec::new();
                if !self.eat(&TokenKind::RBracket) {
                    items.push(self.term()?);
                    while self.eat(&TokenKind::Comma) {
                        items.push(self.term()?);
                    }
                    self.expect(&TokenKind::RBracket, "`]`")?;
                }
                Ok(Term::List(items))
            }
            _ => Err(self.error(&["term"])),
        }
    }

    fn literal(&mut self) -> Result<Literal, LangError> {
        let (functor, span) = self.ident("literal")?;
        if is_variable(&functor) {
            return Err(Self::semantic(
                span,
                format!("`{functor}` is a logic variable; only ground literals are supported"),
            ));
        }
        let mut args = Vec::new();
        if self.eat(&TokenKind::LParen) {
            args.push(self.term()?);
            while self.eat(&TokenKind::Comma) {
                args.push(self.term()?);
            }
            self.expect(&TokenKind::RParen, "`)`")?;
        }
        Ok(Literal { functor, args })
    }

    fn source_annotation(&mut self) -> Result<Source, LangError> {
        if !self.eat(&TokenKind::LBracket) {
            return Ok(Source::SelfSource);
        }
        let span = self.span();
        self.keyword("source")?;
        self.expect(&TokenKind::LParen, "`(`")?;
        let (who, _) = self.ident("source name")?;
        self.expect(&TokenKind::RParen, "`)`")?;
        if self.peek() == Some(&TokenKind::Comma) {
            return Err(Self::semantic(
                span,
                "only a single source(..) annotation is supported",
            ));
        }
        self.expect(&TokenKind::RBracket, "`]`")?;
        Ok(match who.as_str() {
            "self" => Source::SelfSource,
            "percept" => Source::Percept,
            _ => Source::Agent(who),
        })
    }

    fn cond_lit(&mut self) -> Result<CondLit, LangError> {
        let positive = match self.peek() {
            Some(TokenKind::Plus) => true,
            Some(TokenKind::Minus) => false,
            _ => return Err(self.error(&["`+`", "`-`"])),
        };
        self.pos += 1;
        Ok(CondLit {
            positive,
            literal: self.literal()?,
        })
    }

    fn pair(&mut self) -> Result<Pad, LangError> {
        self.expect(&TokenKind::LBracket, "`[`")?;
        let p = self.number()?;
        self.expect(&TokenKind::Comma, "`,`")?;
        let a = self.number()?;
        self.expect(&TokenKind::RBracket, "`]`")?;
        Ok(Pad::new(p, a))
    }

    // -- program ------------------------------------------------------------

    fn program(&mut self) -> Result<AgentProgram, LangError> {
        self.mark(Production::Agent);
        let mut prog = AgentProgram::default();
        let mut seen_sections = BTreeSet::new();
        while let Some(kind) = self.peek() {
            match kind {
                TokenKind::Ident(name)
                    if name.ends_with("__") && self.peek_at(1) == Some(&TokenKind::Colon) =>
                {
                    let span = self.span();
                    let name = name.clone();
                    if !seen_sections.insert(name.clone()) {
                        return Err(Self::semantic(span, format!("duplicate `{name}` block")));
                    }
                    self.pos += 2;
                    match name.as_str() {
                        SECTION_CONCERNS => prog.concerns = self.concerns()?,
                        SECTION_PERSONALITY => prog.personality = self.personality()?,
                        SECTION_ROLES => prog.roles = self.roles()?,
                        SECTION_NORMS => prog.norms = self.norms()?,
                        _ => {
                            self.pos -= 2;
                            return Err(self.error(&[
                                "`concerns__`",
                                "`personality__`",
                                "`roles__`",
                                "`norms__`",
                            ]));
                        }
                    }
                }
                TokenKind::Ident(_) => {
                    self.mark(Production::InitBels);
                    let literal = self.literal()?;
                    let source = self.source_annotation()?;
                    self.expect(&TokenKind::Dot, "`.`")?;
                    prog.initial_beliefs.push(Belief { literal, source });
                }
                TokenKind::Bang => {
                    self.mark(Production::InitGoals);
                    self.pos += 1;
                    let goal = self.literal()?;
                    self.expect(&TokenKind::Dot, "`.`")?;
                    prog.initial_goals.push(goal);
                }
                TokenKind::At | TokenKind::Plus | TokenKind::Minus => {
                    self.mark(Production::Plans);
                    let plan = self.plan(false)?;
                    self.expect(&TokenKind::Dot, "`.`")?;
                    prog.plans.push(plan);
                }
                _ => return Err(self.error(&["belief", "goal", "plan", "section"])),
            }
        }
        if prog.initial_beliefs.is_empty() && prog.initial_goals.is_empty() && prog.plans.is_empty()
        {
            return Err(self.error(&["belief", "goal", "plan"]));
        }
        Ok(prog)
    }

    fn plan(&mut self, normative: bool) -> Result<PlanDef, LangError> {
        let label = if self.eat(&TokenKind::At) {
            Some(self.literal()?)
        } else {
            None
        };
        let span = self.span();
        let mut np = false;
        let trigger = match self.peek() {
            Some(TokenKind::Ident(name)) if normative => {
                let rest = name
                    .strip_prefix("np__")
                    .or_else(|| name.strip_prefix("np_"))
                    .map(str::to_string);
                match rest {
                    Some(rest) => {
                        np = true;
                        self.pos += 1;
                        if rest.is_empty() {
                            self.trigger()?
                        } else {
                            let mut literal = Literal::atom(rest);
                            if self.eat(&TokenKind::LParen) {
                                literal.args.push(self.term()?);
                                while self.eat(&TokenKind::Comma) {
                                    literal.args.push(self.term()?);
                                }
                                self.expect(&TokenKind::RParen, "`)`")?;
                            }
                            Trigger::add_belief(literal)
                        }
                    }
                    None => {
                        return Err(Self::semantic(
                            span,
                            "a normative plan must start with the `np__` marker",
                        ))
                    }
                }
            }
            _ if normative => {
                return Err(Self::semantic(
                    span,
                    "a normative plan must start with the `np__` marker",
                ))
            }
            _ => self.trigger()?,
        };
        let mut context = Vec::new();
        if self.eat(&TokenKind::Colon) {
            if self.at_keyword("true") {
                self.pos += 1;
            } else {
                context.push(self.context_lit()?);
                while self.eat(&TokenKind::Amp) {
                    context.push(self.context_lit()?);
                }
            }
        }
        let mut body = Vec::new();
        if self.eat(&TokenKind::Arrow) {
            if self.at_keyword("true")
                && matches!(self.peek_at(1), Some(TokenKind::Dot) | None)
            {
                self.pos += 1;
            } else {
                body.push(self.body_step()?);
                while self.eat(&TokenKind::Semi) {
                    body.push(self.body_step()?);
                }
            }
        }
        Ok(PlanDef {
            label,
            trigger,
            context,
            body,
            np,
            norm: None,
        })
    }

    fn trigger(&mut self) -> Result<Trigger, LangError> {
        let add = match self.peek() {
            Some(TokenKind::Plus) => true,
            Some(TokenKind::Minus) => false,
            _ => return Err(self.error(&["`+`", "`-`"])),
        };
        self.pos += 1;
        let goal = self.eat(&TokenKind::Bang);
        let kind = match (add, goal) {
            (true, false) => TriggerKind::AddBelief,
            (false, false) => TriggerKind::DelBelief,
            (true, true) => TriggerKind::AddGoal,
            (false, true) => TriggerKind::DelGoal,
        };
        Ok(Trigger {
            kind,
            literal: self.literal()?,
        })
    }

    fn context_lit(&mut self) -> Result<ContextLit, LangError> {
        let negated = if self.at_keyword("not") {
            self.pos += 1;
            true
        } else {
            false
        };
        Ok(ContextLit {
            negated,
            literal: self.literal()?,
        })
    }

    fn body_step(&mut self) -> Result<BodyStep, LangError> {
        match self.peek() {
            Some(TokenKind::Plus) => {
                self.pos += 1;
                Ok(BodyStep::AddBelief(self.literal()?))
            }
            Some(TokenKind::Minus) => {
                self.pos += 1;
                Ok(BodyStep::DelBelief(self.literal()?))
            }
            Some(TokenKind::Dot) => {
                self.pos += 1;
                let (name, span) = self.ident("internal action")?;
                if name != "sendMsg" {
                    return Err(Self::semantic(
                        span,
                        format!("unsupported internal action `.{name}`; only `.sendMsg` is available"),
                    ));
                }
                self.expect(&TokenKind::LParen, "`(`")?;
                let to = match self.peek() {
                    Some(TokenKind::Str(_)) => self.string("receiver")?.0,
                    _ => {
                        let (id, span) = self.ident("receiver")?;
                        if is_variable(&id) {
                            return Err(Self::semantic(span, "receiver must be ground"));
                        }
                        id
                    }
                };
                self.expect(&TokenKind::Comma, "`,`")?;
                let force = match self.ident("`tell` or `untell`")? {
                    (f, _) if f == "tell" => Force::Tell,
                    (f, _) if f == "untell" => Force::Untell,
                    (_, span) => {
                        return Err(LangError::Parse {
                            span,
                            expected: vec!["`tell`".into(), "`untell`".into()],
                            found: "other illocutionary force".into(),
                        })
                    }
                };
                self.expect(&TokenKind::Comma, "`,`")?;
                let content = self.term()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(BodyStep::Send { to, force, content })
            }
            Some(TokenKind::Ident(_)) => Ok(BodyStep::Action(self.literal()?)),
            _ => Err(self.error(&["`+`", "`-`", "action", "`.sendMsg`"])),
        }
    }

    // -- sections -------------------------------------------------------------

    fn concerns(&mut self) -> Result<Vec<Literal>, LangError> {
        self.mark(Production::Concerns);
        self.expect(&TokenKind::LBrace, "`{`")?;
        let mut out = Vec::new();
        if !self.eat(&TokenKind::RBrace) {
            out.push(self.literal()?);
            while self.eat(&TokenKind::Comma) {
                out.push(self.literal()?);
            }
            self.expect(&TokenKind::RBrace, "`}`")?;
        }
        self.expect(&TokenKind::Dot, "`.`")?;
        Ok(out)
    }

    fn unit_number(&mut self, lo: f64, hi: f64, what: &str) -> Result<f64, LangError> {
        let span = self.span();
        let v = self.number()?;
        if !(lo..=hi).contains(&v) {
            return Err(Self::semantic(
                span,
                format!("{what} must lie in [{lo}, {hi}], got {v}"),
            ));
        }
        Ok(v)
    }

    fn personality(&mut self) -> Result<PersonalityDecl, LangError> {
        self.mark(Production::Personality);
        self.expect(&TokenKind::LBrace, "`{`")?;
        self.mark(Production::Traits);
        let mut traits = [0.0; 5];
        self.expect(&TokenKind::LBracket, "`[`")?;
        for (i, t) in traits.iter_mut().enumerate() {
            if i > 0 {
                self.expect(&TokenKind::Comma, "`,` (five OCEAN traits)")?;
            }
            *t = self.unit_number(-1.0, 1.0, "personality trait")?;
        }
        self.expect(&TokenKind::RBracket, "`]` (five OCEAN traits)")?;

        let mut numbers_before = Vec::new();
        let mut coping = None;
        let mut numbers_after = Vec::new();
        while self.eat(&TokenKind::Comma) {
            if self.peek() == Some(&TokenKind::LBracket) && coping.is_none() {
                coping = Some(self.coping_list()?);
                continue;
            }
            let span = self.span();
            let v = self.number()?;
            let slot = if coping.is_some() {
                &mut numbers_after
            } else {
                &mut numbers_before
            };
            slot.push((v, span));
        }
        self.expect(&TokenKind::RBrace, "`}`")?;
        self.expect(&TokenKind::Dot, "`.`")?;

        // Positional: traits [, rat_level] [, coping_strats] [, reb_level]
        let (rat, reb) = match (numbers_before.as_slice(), numbers_after.as_slice()) {
            ([], []) => (None, None),
            ([r], []) if coping.is_some() => (Some(*r), None),
            ([r], []) => (Some(*r), None),
            ([r, b], []) if coping.is_none() => (Some(*r), Some(*b)),
            ([], [b]) => (None, Some(*b)),
            ([r], [b]) => (Some(*r), Some(*b)),
            _ => {
                let span = numbers_after
                    .first()
                    .or(numbers_before.get(2))
                    .map_or(self.span(), |(_, s)| *s);
                return Err(Self::semantic(
                    span,
                    "personality takes traits [, rat_level] [, coping_strats] [, reb_level]",
                ));
            }
        };
        let mut decl = PersonalityDecl {
            traits,
            coping: coping.unwrap_or_default(),
            ..PersonalityDecl::default()
        };
        if let Some((r, span)) = rat {
            self.mark(Production::RatLevel);
            if !(0.0..=1.0).contains(&r) {
                return Err(Self::semantic(span, "rat_level must lie in [0, 1]"));
            }
            decl.rationality = r;
        }
        if let Some((b, span)) = reb {
            self.mark(Production::RebLevel);
            if !(0.0..=1.0).contains(&b) {
                return Err(Self::semantic(span, "reb_level must lie in [0.0, 1.0]"));
            }
            decl.rebelliousness = b;
        }
        Ok(decl)
    }

    fn coping_list(&mut self) -> Result<Vec<CopingStrategy>, LangError> {
        self.mark(Production::CopingStrats);
        self.expect(&TokenKind::LBracket, "`[`")?;
        let mut out = Vec::new();
        if !self.eat(&TokenKind::RBracket) {
            out.push(self.coping()?);
            while self.eat(&TokenKind::Comma) {
                out.push(self.coping()?);
            }
            self.expect(&TokenKind::RBracket, "`]`")?;
        }
        Ok(out)
    }

    fn coping(&mut self) -> Result<CopingStrategy, LangError> {
        self.keyword("coping")?;
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut region = AffectRegion::default();
        if self.at_keyword("true") {
            self.pos += 1;
        } else {
            loop {
                let (dim, span) = self.ident("`pleasure` or `arousal`")?;
                let bounds = match dim.as_str() {
                    "pleasure" => &mut region.pleasure,
                    "arousal" => &mut region.arousal,
                    _ => {
                        return Err(LangError::Parse {
                            span,
                            expected: vec!["`pleasure`".into(), "`arousal`".into()],
                            found: format!("identifier `{dim}`"),
                        })
                    }
                };
                let upper = match self.peek() {
                    Some(TokenKind::Le) => true,
                    Some(TokenKind::Ge) => false,
                    _ => return Err(self.error(&["`<=`", "`>=`"])),
                };
                self.pos += 1;
                let v = self.unit_number(-1.0, 1.0, "coping bound")?;
                if upper {
                    bounds.1 = bounds.1.min(v);
                } else {
                    bounds.0 = bounds.0.max(v);
                }
                if !self.eat(&TokenKind::Amp) {
                    break;
                }
            }
        }
        self.expect(&TokenKind::Comma, "`,`")?;
        self.expect(&TokenKind::LBracket, "`[`")?;
        let mut actions = Vec::new();
        if !self.eat(&TokenKind::RBracket) {
            actions.push(self.literal()?);
            while self.eat(&TokenKind::Comma) {
                actions.push(self.literal()?);
            }
            self.expect(&TokenKind::RBracket, "`]`")?;
        }
        self.expect(&TokenKind::RParen, "`)`")?;
        Ok(CopingStrategy { region, actions })
    }

    fn roles(&mut self) -> Result<Vec<String>, LangError> {
        self.mark(Production::Roles);
        self.expect(&TokenKind::LBrace, "`{`")?;
        let mut roles: Vec<String> = Vec::new();
        if !self.eat(&TokenKind::RBrace) {
            loop {
                self.mark(Production::Role);
                let (r, span) = self.string("role name string")?;
                if r.is_empty() {
                    return Err(Self::semantic(span, "role names must be nonempty"));
                }
                if roles.contains(&r) {
                    return Err(Self::semantic(span, format!("duplicate role \"{r}\"")));
                }
                roles.push(r);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(&TokenKind::RBrace, "`}`")?;
        }
        self.expect(&TokenKind::Dot, "`.`")?;
        Ok(roles)
    }

    fn norms(&mut self) -> Result<Vec<NormDecl>, LangError> {
        self.mark(Production::Norms);
        self.expect(&TokenKind::LBrace, "`{`")?;
        let mut out = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            if self.peek().is_none() {
                return Err(self.error(&["`}`"]));
            }
            out.push(self.norm()?);
            self.eat(&TokenKind::Dot);
            if !self.eat(&TokenKind::Comma) && self.peek() != Some(&TokenKind::RBrace) {
                return Err(self.error(&["`,`", "`}`"]));
            }
        }
        self.expect(&TokenKind::Dot, "`.`")?;
        Ok(out)
    }

    fn norm(&mut self) -> Result<NormDecl, LangError> {
        self.mark(Production::Norm);
        self.keyword("norm")?;
        self.expect(&TokenKind::LParen, "`(`")?;

        self.mark(Production::DeonticOperator);
        let deontic = match self.peek() {
            Some(TokenKind::Str(s)) if s == "obligation" => Deontic::Obligation,
            Some(TokenKind::Str(s)) if s == "prohibition" => Deontic::Prohibition,
            _ => return Err(self.error(&["\"obligation\"", "\"prohibition\""])),
        };
        self.pos += 1;
        self.expect(&TokenKind::Comma, "`,`")?;

        self.mark(Production::NormativePlan);
        let (plan_text, plan_span) = self.string("normative plan string")?;
        let plan = parse_normative_plan(&plan_text).map_err(|e| {
            Self::semantic(plan_span, format!("invalid normative plan: {e}"))
        })?;
        self.expect(&TokenKind::Comma, "`,`")?;

        self.mark(Production::LimitCycle);
        let span = self.span();
        let limit = self.number()?;
        if limit < 0.0 || limit.fract() != 0.0 {
            return Err(Self::semantic(
                span,
                "limit_cycle must be a non-negative integer",
            ));
        }
        self.expect(&TokenKind::Comma, "`,`")?;

        self.mark(Production::Relevance);
        let span = self.span();
        let relevance = self.number()?;
        if relevance < 0.0 {
            return Err(Self::semantic(span, "relevance must lie in [0, inf)"));
        }
        self.expect(&TokenKind::Comma, "`,`")?;

        let affected = self.affected_roles()?;

        self.mark(Production::PreAppraisal);
        let span = self.span();
        let pre_appraisal = self.pair()?;
        if !pre_appraisal.in_unit_box() {
            return Err(Self::semantic(
                span,
                "pre-appraisal components must lie in [-1.0, 1.0]",
            ));
        }
        self.expect(&TokenKind::RParen, "`)`")?;
        Ok(NormDecl {
            deontic,
            plan,
            limit_cycle: limit as u64,
            relevance,
            affected,
            pre_appraisal,
        })
    }

    fn affected_roles(&mut self) -> Result<AffectedRoles, LangError> {
        let mut roles = Vec::new();
        match self.peek() {
            Some(TokenKind::Str(_)) => {
                loop {
                    let (r, span) = self.string("role")?;
                    if r.is_empty() {
                        return Err(Self::semantic(span, "role names must be nonempty"));
                    }
                    roles.push(r);
                    self.expect(&TokenKind::Comma, "`,`")?;
                    if !matches!(self.peek(), Some(TokenKind::Str(_))) {
                        break;
                    }
                }
            }
            Some(TokenKind::LBracket)
                if matches!(
                    self.peek_at(1),
                    Some(TokenKind::Str(_)) | Some(TokenKind::RBracket)
                ) =>
            {
                self.pos += 1;
                if !self.eat(&TokenKind::RBracket) {
                    loop {
                        let (r, span) = self.string("role")?;
                        if r.is_empty() {
                            return Err(Self::semantic(span, "role names must be nonempty"));
                        }
                        roles.push(r);
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                    self.expect(&TokenKind::RBracket, "`]`")?;
                }
                self.expect(&TokenKind::Comma, "`,`")?;
            }
            // Omitted: no role is affected.
            _ => {}
        }
        if roles.iter().any(|r| r == "ALL") {
            self.mark(Production::AffectedRolesAll);
            Ok(AffectedRoles::All)
        } else {
            self.mark(Production::AffectedRolesList);
            Ok(AffectedRoles::Roles(roles))
        }
    }
}

/// Parses the text of a norm's plan; the `np__` marker is mandatory and the
/// trailing `.` optional.
pub fn parse_normative_plan(text: &str) -> Result<PlanDef, LangError> {
    let mut p = Parser::new(text)?;
    let plan = p.plan(true)?;
    p.eat(&TokenKind::Dot);
    p.expect_end()?;
    Ok(plan)
}
