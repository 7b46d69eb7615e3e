mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use nea_core::lang::*;

fn read(p: &std::path::Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn corpus_is_large_enough() {
    assert!(common::corpus_files().len() >= 20);
}

#[test]
fn corpus_round_trips() {
    for path in common::corpus_files() {
        let p = parse_agent_program(&read(&path)).unwrap_or_else(|e| panic!("{}:{e}", path.display()));
        let text = render(&p);
        let q = parse_agent_program(&text).unwrap_or_else(|e| panic!("{}: rendered text fails: {e}\n{text}", path.display()));
        assert_eq!(p, q, "{}", path.display());
        assert_eq!(render(&q), text, "{}: rendering is not a fixpoint", path.display());
    }
}

#[test]
fn corpus_reaches_every_production() {
    let mut seen = BTreeSet::new();
    for path in common::corpus_files() {
        let (_, cov) = parse_agent_program_with_coverage(&read(&path)).unwrap();
        seen.extend(cov);
    }
    let missing: Vec<_> = Production::ALL.iter().filter(|p| !seen.contains(p)).collect();
    assert!(missing.is_empty(), "unreached: {missing:?}");
}

#[test]
fn printed_professor_plans() {
    let conf = parse_agent_program(&read(&common::workspace_root().join("crates/core/tests/corpus/01_conformist.nea"))).unwrap();
    assert_eq!(conf.plans.len(), 2);
    assert!(conf.norms.is_empty());
    assert_eq!(
        conf.plans[1].to_string(),
        "+exit_classroom : in_classroom <- -in_classroom; +in_campus; +enjoy_freetime; +enter_classroom"
    );
    let rebel = parse_agent_program(&read(&common::workspace_root().join("crates/core/tests/corpus/02_rebel.nea"))).unwrap();
    assert_eq!(rebel.plans[0], conf.plans[0]);
    assert_eq!(
        rebel.plans[1].body[1],
        BodyStep::DelBelief(Literal::atom("wearing_mask"))
    );
    assert_eq!(rebel.personality.rebelliousness, 0.8);
}

#[test]
fn printed_norm_literals() {
    let n = parse_norm_literal(
        r#"norm("obligation", "np__enter_classroom:role(professor) & not wearing_mask <- +wearing_mask.", 0, 50.0, "ALL", [0.5,0.5])"#,
    )
    .unwrap();
    assert_eq!(n.deontic, Deontic::Obligation);
    assert_eq!(n.plan.trigger, Trigger::add_belief(Literal::atom("enter_classroom")));
    assert_eq!(
        n.plan.context,
        vec![
            ContextLit { negated: false, literal: Literal::new("role", vec![Term::Atom("professor".into())]) },
            ContextLit { negated: true, literal: Literal::atom("wearing_mask") },
        ]
    );
    assert_eq!(n.plan.body, vec![BodyStep::AddBelief(Literal::atom("wearing_mask"))]);
    assert_eq!((n.limit_cycle, n.relevance), (0, 50.0));
    assert_eq!(n.affected, AffectedRoles::All);
    assert_eq!(n.pre_appraisal, Pad::new(0.5, 0.5));

    let y = parse_norm_literal(r#"norm("prohibition", "np_yell:at_classroom", 0, 50, "ALL", [0.1, 0.1])"#).unwrap();
    assert_eq!(y.deontic, Deontic::Prohibition);
    assert_eq!(y.plan.trigger.literal, Literal::atom("yell"));
    assert!(y.plan.body.is_empty());
    assert_eq!(y.pre_appraisal, Pad::new(0.1, 0.1));

    assert_eq!(parse_norm_literal("in_campus"), Err(LangError::NotANorm));
    assert!(parse_norm_literal(r#"norm("permission", "np__a", 0, 1, "ALL", [0,0])"#).is_err());
}

#[test]
fn printed_feedback_message() {
    let fb = parse_feedback("(+wearing_mask;+in_campus),[-0.1,-0.2]").unwrap();
    assert_eq!(fb.pair, Pad::new(-0.1, -0.2));
    assert_eq!(fb.condition.len(), 2);
    assert!(fb.condition.iter().all(|c| c.positive));
    assert_eq!(fb.to_string(), "(+wearing_mask;+in_campus),[-0.1,-0.2]");
}

#[test]
fn tokens_of_small_inputs() {
    let kinds = |s: &str| tokenize(s).unwrap().into_iter().map(|t| t.kind).collect::<Vec<_>>();
    assert_eq!(
        kinds("norms__: { }"),
        vec![TokenKind::Ident("norms__".into()), TokenKind::Colon, TokenKind::LBrace, TokenKind::RBrace]
    );
    assert_eq!(
        kinds("[0.5,0.5]"),
        vec![TokenKind::LBracket, TokenKind::Num(0.5), TokenKind::Comma, TokenKind::Num(0.5), TokenKind::RBracket]
    );
    match tokenize("@€") {
        Err(LangError::Lex { span, .. }) => assert_eq!(span.column, 2),
        other => panic!("{other:?}"),
    }
}

fn corpus_texts() -> Vec<String> {
    common::corpus_files().iter().map(|p| read(p)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn error_positions_lie_inside_input(
        idx in 0usize..64,
        cut in 0usize..4096,
        junk in "[a-z{}().,;:\\[\\]\"<>=&!+-@0-9 ]{0,6}",
    ) {
        let texts = corpus_texts();
        let src = &texts[idx % texts.len()];
        let mut at = cut % (src.len() + 1);
        while !src.is_char_boundary(at) {
            at -= 1;
        }
        let mutated = format!("{}{}{}", &src[..at], junk, &src[at..]);
        if let Err(e) = parse_agent_program(&mutated) {
            if let Some(span) = e.span() {
                prop_assert!(span.offset <= mutated.len(), "{e} in {mutated:?}");
            }
        }
        let truncated = &src[..at];
        if let Err(e) = parse_agent_program(truncated) {
            if let Some(span) = e.span() {
                prop_assert!(span.offset <= truncated.len());
            }
        }
    }

    #[test]
    fn pre_appraisal_survives_round_trip(p in -1.0f64..=1.0, a in -1.0f64..=1.0, rel in 0.0f64..1e6) {
        let src = format!(
            r#"x. norms__: {{ norm("obligation", "np__go <- walk.", 0, {rel}, "ALL", [{p}, {a}]) }}."#
        );
        let prog = parse_agent_program(&src).unwrap();
        let again = parse_agent_program(&render(&prog)).unwrap();
        prop_assert_eq!(&prog, &again);
        prop_assert!((again.norms[0].pre_appraisal.pleasure - p).abs() < 1e-6);
    }
}
