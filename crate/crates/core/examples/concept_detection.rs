// Which concepts each 3-token combination teaches, and how often.

use std::collections::BTreeMap;

use mmm::{all_tokens, detect_concepts, ConceptId, TokenCombination};

pub fn run_example() -> anyhow::Result<()> {
    let tokens = all_tokens();
    let mut per_concept: BTreeMap<ConceptId, usize> = BTreeMap::new();
    let mut combos = 0;
    for i in 0..tokens.len() {
        for j in i + 1..tokens.len() {
            for k in j + 1..tokens.len() {
                let combo = TokenCombination::new([tokens[i], tokens[j], tokens[k]])?;
                combos += 1;
                for c in detect_concepts(&combo) {
                    *per_concept.entry(c).or_default() += 1;
                }
            }
        }
    }
    println!("{combos} unordered combinations");
    for (concept, n) in &per_concept {
        println!("  {:<16} {n}", concept.as_str());
    }

    let sample: TokenCombination = serde_json::from_str(
        r#"[{"color":"red","shape":"square","size":"small"},
            {"color":"blue","shape":"triangle","size":"small"},
            {"color":"yellow","shape":"circle","size":"small"}]"#,
    )?;
    println!("sample teaches {:?}", detect_concepts(&sample));
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
