//! Starts the service in-process on an ephemeral port, registers the demo
//! dataset and walks through a short editing session over HTTP.
//!
//! ```text
//! cargo run --release -p storyline-server --example serve_client
//! ```

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};
use storyline_server::{serve_on, AppState, ServiceConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = tempfile::tempdir()?;
    let config = ServiceConfig {
        registry_dir: work.path().join("registry"),
        session_dir: work.path().join("sessions"),
        ..ServiceConfig::default()
    };
    let state = Arc::new(AppState::new(config)?);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(serve_on(listener, state));

    let http = reqwest::Client::new();
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/demo_sales.json");
    let mut dataset: Value = serde_json::from_str(&std::fs::read_to_string(&demo)?)?;
    let source = demo
        .parent()
        .unwrap()
        .join(dataset["source"].as_str().unwrap());
    dataset["source"] = json!(source);

    let summary: Value = http
        .post(format!("{base}/datasets"))
        .json(&dataset)
        .send()
        .await?
        .json()
        .await?;
    println!("registered: {summary}");
    let id = summary["dataset_id"].as_str().unwrap();

    let session: Value = http
        .post(format!("{base}/sessions"))
        .json(&json!({"dataset_id": id, "k": 3}))
        .send()
        .await?
        .json()
        .await?;
    let sid = session["session_id"].as_str().unwrap();
    let ctx = json!({"draft_text": "Online sales in the west", "cursor_section": "Channels"});

    let suggest = |ctx: Value| {
        let (http, url) = (http.clone(), format!("{base}/sessions/{sid}/suggest"));
        async move {
            http.post(url)
                .json(&ctx)
                .send()
                .await?
                .json::<Value>()
                .await
        }
    };
    let first = suggest(ctx.clone()).await?;
    for s in first["suggestions"].as_array().unwrap() {
        println!(
            "{:.3}  {}",
            s["final_score"].as_f64().unwrap(),
            s["description"]["text"].as_str().unwrap()
        );
    }
    let rejected = &first["suggestions"][0]["insight"]["id"];
    let fb: Value = http
        .post(format!("{base}/sessions/{sid}/feedback"))
        .json(&json!({"insight_id": rejected, "event": "reject"}))
        .send()
        .await?
        .json()
        .await?;
    println!("fatigue after reject: {}", fb["fatigue"]);
    for s in suggest(ctx).await?["suggestions"].as_array().unwrap() {
        println!(
            "{:.3}  {}",
            s["final_score"].as_f64().unwrap(),
            s["description"]["text"].as_str().unwrap()
        );
    }

    let story: Value = http
        .post(format!("{base}/reports/generate"))
        .json(&json!({"dataset_id": id, "k": 3}))
        .send()
        .await?
        .json()
        .await?;
    println!("report summary: {}", story["summary"]);
    Ok(())
}
