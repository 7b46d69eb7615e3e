//! Exhaustive comparison of plan ordering against the stratified oracle.

use std::collections::BTreeMap;

use nea_core::agent::NormativeBelief;
use nea_core::lang::{parse_plan, Pad, PlanDef, Variant};
use nea_core::norm::order_applicable_plans;

use super::{norm_belief, stratified_oracle, PlanKind};

pub struct Alphabet {
    pub nb: Vec<NormativeBelief>,
    pub plans: Vec<PlanDef>,
    pub kinds: Vec<PlanKind>,
    pub choices: BTreeMap<String, Variant>,
}

pub const CYCLE: u64 = 4;
pub const THRESHOLD: f64 = 1.0;

pub fn alphabet() -> Alphabet {
    let pa = Pad::new(0.2, 0.2);
    // (name, deontic, l, rel, chosen variant, variant placed in the alphabet)
    let norms = [
        ("a", "obligation", 7, 5.0, Variant::Comply, Variant::Comply),
        ("a_off", "obligation", 7, 5.0, Variant::Comply, Variant::Break),
        ("b", "obligation", 14, 5.0, Variant::Comply, Variant::Comply),
        ("c", "obligation", 0, 5.0, Variant::Comply, Variant::Comply),
        ("d", "prohibition", 9, 5.0, Variant::Comply, Variant::Comply),
        ("e", "prohibition", 0, 5.0, Variant::Break, Variant::Break),
        ("f", "obligation", 0, 0.5, Variant::Comply, Variant::Comply),
        ("g", "obligation", 3, 5.0, Variant::Comply, Variant::Comply),
    ];
    let mut out = Alphabet { nb: vec![], plans: vec![], kinds: vec![], choices: BTreeMap::new() };
    for name in ["plain1", "plain2"] {
        out.plans.push(parse_plan(&format!("+{name} <- {name}_act.")).unwrap());
        out.kinds.push(PlanKind { name: "plain", deontic: None, active: false, selected: false, remaining: None });
    }
    for (name, op, l, rel, chosen, placed) in norms {
        let nb = norm_belief(name, &format!("{name}_act"), op, l, rel, pa);
        out.choices.insert(nb.id.clone(), chosen);
        out.plans.push(match placed {
            Variant::Comply => nb.comply.clone(),
            Variant::Break => nb.break_plan.clone(),
        });
        out.kinds.push(PlanKind {
            name,
            deontic: Some(nb.deontic),
            active: (l == 0 || CYCLE < l) && rel >= THRESHOLD,
            selected: chosen == placed,
            remaining: (l != 0).then(|| l.saturating_sub(CYCLE)),
        });
        out.nb.push(nb);
    }
    out
}


/// Every sequence of up to `max_len` alphabet plans; returns how many were
/// checked.
pub fn check_all(max_len: u32) -> Result<u64, String> {
    let al = alphabet();
    let n = al.plans.len();
    let mut checked = 0u64;
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..=max_len {
        let mut next = Vec::new();
        for s in &seqs {
            let ap: Vec<&PlanDef> = s.iter().map(|&i| &al.plans[i]).collect();
            let kinds: Vec<&PlanKind> = s.iter().map(|&i| &al.kinds[i]).collect();
            let got = order_applicable_plans(&ap, &al.nb, CYCLE, THRESHOLD, &al.choices);
            let want = stratified_oracle(&kinds);
            let ids = |o: &[usize]| o.iter().map(|&j| s[j]).collect::<Vec<_>>();
            if ids(&got) != ids(&want) {
                return Err(format!("input {s:?}: got {:?}, oracle {:?}", ids(&got), ids(&want)));
            }
            checked += 1;
            if s.len() < max_len as usize {
                for i in 0..n {
                    let mut t = s.clone();
                    t.push(i);
                    next.push(t);
                }
            }
        }
        seqs = next;
    }
    let expected: u64 = (0..=max_len).map(|k| (n as u64).pow(k)).sum();
    if checked != expected {
        return Err(format!("checked {checked} of {expected} sequences"));
    }
    Ok(checked)
}
