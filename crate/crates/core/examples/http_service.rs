// Starts the `/v1` service on an ephemeral port and plays a short session
// against it over real HTTP.

use std::sync::Arc;

use mmm::api::router;
use mmm::{Engine, MatcherBackend, Matchers};
use serde_json::{json, Value};

pub fn run_example() -> anyhow::Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    let listener = runtime.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}/v1", listener.local_addr()?);
    let app = router(
        Arc::new(Engine::new(Matchers::lexicon_only())),
        MatcherBackend::Lexicon,
    );
    runtime.spawn(async move { axum::serve(listener, app).await });

    let agent = ureq::Agent::new_with_defaults();
    let concepts: Value = agent
        .get(format!("{base}/concepts"))
        .call()?
        .body_mut()
        .read_json()?;
    println!("{} concepts", concepts.as_array().map_or(0, Vec::len));

    for condition in ["mmm", "performance", "baseline"] {
        let session: Value = agent
            .post(format!("{base}/sessions"))
            .send_json(json!({ "condition": condition, "seed": 1 }))?
            .body_mut()
            .read_json()?;
        let id = session["id"].as_str().unwrap_or_default();
        let view: Value = agent
            .post(format!("{base}/sessions/{id}/iterations"))
            .send_json(json!({
                "tokens": [
                    {"color": "red", "shape": "square", "size": "small"},
                    {"color": "blue", "shape": "triangle", "size": "small"},
                    {"color": "yellow", "shape": "circle", "size": "small"}
                ],
                "intention": "Teach the robot to recognize large tokens."
            }))?
            .body_mut()
            .read_json()?;
        println!("{condition:<12} {view}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
