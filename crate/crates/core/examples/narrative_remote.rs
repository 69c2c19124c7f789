//! Describes one insight with the template narrator and with a remote
//! chat-completion backend served by a local mock, including the fallback
//! taken when the backend invents a number.
//!
//! ```text
//! cargo run -p storyline --example narrative_remote
//! ```

use storyline::model::OutlierPointDetails;
use storyline::narrative::mock::{MockChatServer, MockResponse};
use storyline::narrative::{verify_faithfulness, LlmBackendConfig, NarrativeMode, Narrator};
use storyline::{Aggregation, Details, IndicatorSpec, Insight, Subspace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let insight = Insight::new(
        "sales",
        Subspace::from_members([("region", "north")])?,
        vec!["product".into()],
        vec![IndicatorSpec::new("revenue", Aggregation::Sum)],
        Details::OutlierPoint(OutlierPointDetails {
            index: 2,
            value: 100.0,
            zscore: 4.36,
            label: None,
        }),
        None,
    );
    let template = Narrator::template().describe(&insight)?;
    println!("template: {}", template.text);

    let server = MockChatServer::start(vec![
        MockResponse::ok("North revenue peaked at 100, 4.36 standard deviations above the rest."),
        MockResponse::ok("North revenue hit 250, a record."),
    ])?;
    let remote = Narrator::from_config(&LlmBackendConfig {
        mode: NarrativeMode::Remote,
        endpoint: Some(server.url()),
        model: Some("mock".into()),
        ..LlmBackendConfig::default()
    })?;
    for _ in 0..2 {
        let d = remote.describe(&insight)?;
        let verdict = verify_faithfulness(&d, &insight);
        println!(
            "remote ({:?}, fallback {}): {} [faithful: {}]",
            d.source, d.fallback, d.text, verdict.passed
        );
    }
    println!(
        "prompt sent: {}",
        server.requests()[0]["messages"][1]["content"]
    );
    Ok(())
}
