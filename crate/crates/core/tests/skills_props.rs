//! Skill library invariants.

use gatewright_core::skills::{
    classify_name, is_skill_name, parse_skill_document, resolve_reading_order, validate_library,
    NameClass, SkillDocument, Tier,
};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9]{0,5}"
}

fn doc_text(name: &str, tier: Tier, principles: &[u32], tools: &[String]) -> String {
    let mut s = format!("---\nname: {name}\ntier: {tier}\n");
    if !principles.is_empty() {
        let p: Vec<String> = principles.iter().map(u32::to_string).collect();
        s.push_str(&format!("principles: [{}]\n", p.join(", ")));
    }
    if !tools.is_empty() {
        s.push_str(&format!("tools: [{}]\n", tools.join(", ")));
    }
    s.push_str("---\nbody\n");
    s
}

fn library() -> impl Strategy<Value = Vec<SkillDocument>> {
    let doc = (
        // a skill name needs at least one hyphen
        proptest::collection::vec(word(), 2..4),
        0u8..3,
        proptest::collection::vec(1u32..30, 0..3),
        proptest::collection::vec(proptest::collection::vec(word(), 1..3), 0..3),
    )
        .prop_map(|(words, t, principles, tools)| {
            let tier = [Tier::L1, Tier::L2, Tier::L3][t as usize];
            let tools: Vec<String> = tools.iter().map(|w| w.join("_")).collect();
            let (principles, tools) = match tier {
                Tier::L1 => (vec![], tools),
                Tier::L2 => (principles, tools),
                Tier::L3 => (principles, vec![]),
            };
            parse_skill_document(&doc_text(&words.join("-"), tier, &principles, &tools)).unwrap()
        });
    proptest::collection::vec(doc, 0..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn name_classes_are_disjoint(token in "[a-z0-9_-]{1,16}") {
        let class = classify_name(&token);
        prop_assert_eq!(is_skill_name(&token), class == NameClass::SkillName);
        if class == NameClass::SkillName {
            prop_assert!(!token.contains('_'));
        }
        if class == NameClass::ToolName {
            prop_assert!(!token.contains('-'));
        }
    }

    #[test]
    fn validation_ignores_document_order(docs in library(), rot in 0usize..7) {
        let report = validate_library(&docs);
        let mut shuffled = docs.clone();
        shuffled.reverse();
        if !shuffled.is_empty() {
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
        }
        prop_assert_eq!(validate_library(&shuffled), report.clone());
        prop_assert_eq!(report.is_valid(), report.violations.is_empty());
        let l3 = docs.iter().filter(|d| d.tier == Tier::L3).count();
        if !docs.is_empty() && l3 != 1 {
            prop_assert!(!report.is_valid());
        }
        if docs.iter().any(|d| d.referenced_principles.iter().any(|p| *p > 25)) {
            prop_assert!(report.violations.iter().any(|v| v.rule == "principle_range"));
        }
    }

    #[test]
    fn reading_order_starts_with_discipline_then_workflow(tools in proptest::collection::vec(word(), 1..4)) {
        let tools: Vec<String> = tools.iter().map(|t| format!("run_{t}")).collect();
        let mut docs = vec![
            parse_skill_document(&doc_text("core-discipline", Tier::L3, &[1], &[])).unwrap(),
            parse_skill_document(&doc_text("main-flow", Tier::L2, &[2], &tools)).unwrap(),
        ];
        for (i, t) in tools.iter().enumerate() {
            docs.push(parse_skill_document(&doc_text(&format!("wrap-{i}"), Tier::L1, &[], &[t.clone()])).unwrap());
        }
        let order = resolve_reading_order(&docs, "main-flow").unwrap();
        prop_assert_eq!(order[0].tier, Tier::L3);
        prop_assert_eq!(order[1].name.as_str(), "main-flow");
        prop_assert!(order[2..].iter().all(|d| d.tier == Tier::L1));
        // duplicate tools collapse to one wrapper
        let mut distinct = tools.clone();
        distinct.sort();
        distinct.dedup();
        prop_assert_eq!(order.len(), 2 + distinct.len());
        prop_assert!(resolve_reading_order(&docs, "absent-flow").is_err());
    }
}
