// The prompt sent to an LLM backend and how its reply is parsed.
// Set MMM_LLM_ENDPOINT (and optionally MMM_LLM_MODEL, MMM_LLM_API_KEY) to
// also query a live OpenAI-compatible endpoint.

use mmm::matcher::llm::{build_llm_prompt, parse_llm_response};
use mmm::matcher::{LlmConfig, LlmMatcher};
use mmm::{ConceptDictionary, Intention, MatcherBackend, Matchers};

pub fn run_example() -> anyhow::Result<()> {
    let dict = ConceptDictionary::standard();
    let intention = Intention::new("different shapes and colors")?;
    let prompt = build_llm_prompt(&intention, &dict);
    println!("--- system\n{}\n--- user\n{}", prompt.system, prompt.user);

    let reply = "Key terms: shapes, colors.\n[\"unique-shapes\", \"unique-colors\", \"sparkly\"]";
    let parsed = parse_llm_response(reply, &dict)?;
    println!("parsed {:?}, dropped {:?}", parsed.concepts, parsed.dropped);

    if let Some(config) = LlmConfig::from_env() {
        let matchers = Matchers::with_llm(LlmMatcher::new(config));
        match matchers.match_intention(&intention, &dict, MatcherBackend::Llm) {
            Ok(r) => println!("live backend: {:?}", r.concepts),
            Err(e) => println!("live backend failed: {e}"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
