mod support;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use storyline::model::OutlierPointDetails;
use storyline::narrative::mock::MockChatServer;
use storyline::narrative::{
    allowed_numbers, extract_numbers, render_story, verify_faithfulness, DescriptionSource,
    FaithfulnessIssue, InsightDescription, LlmBackendConfig, NarrativeError, NarrativeMode,
    Narrator, StoryFormat,
};
use storyline::{Aggregation, Details, IndicatorSpec, Insight, Subspace};
use support::{mutate_number, random_insight};

fn fixture(name: &str) -> MockChatServer {
    MockChatServer::from_fixture(
        &Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/fixtures")
            .join(name),
    )
    .unwrap()
}

fn remote(server: &MockChatServer, retries: u32) -> Narrator {
    Narrator::from_config(&LlmBackendConfig {
        mode: NarrativeMode::Remote,
        endpoint: Some(server.url()),
        model: Some("mock".into()),
        max_retries: retries,
        backoff_ms: 1,
        timeout_ms: 5_000,
        ..LlmBackendConfig::default()
    })
    .unwrap()
}

fn outlier_100() -> Insight {
    Insight::new(
        "sales",
        Subspace::from_members([("region", "north")]).unwrap(),
        vec!["product".into()],
        vec![IndicatorSpec::new("revenue", Aggregation::Sum)],
        Details::OutlierPoint(OutlierPointDetails {
            index: 2,
            value: 100.0,
            zscore: 4.36,
            label: None,
        }),
        None,
    )
}

#[test]
fn template_descriptions_are_faithful_for_random_insights() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let narrator = Narrator::template();
    for _ in 0..1000 {
        let insight = random_insight(&mut rng);
        let d = narrator.describe(&insight).unwrap();
        let verdict = verify_faithfulness(&d, &insight);
        assert!(verdict.passed, "{}: {:?}", d.text, verdict.issues);
        assert_eq!(d.mentioned_numbers, extract_numbers(&d.text));
    }
}

#[test]
fn perturbed_numbers_always_fail() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let narrator = Narrator::template();
    let mut checked = 0;
    while checked < 1000 {
        let insight = random_insight(&mut rng);
        let d = narrator.describe(&insight).unwrap();
        let Some((text, injected)) = mutate_number(&d.text, &allowed_numbers(&insight), &mut rng)
        else {
            continue;
        };
        let mutated = InsightDescription {
            mentioned_numbers: extract_numbers(&text),
            text,
            ..d
        };
        let verdict = verify_faithfulness(&mutated, &insight);
        assert!(!verdict.passed, "accepted mutation: {}", mutated.text);
        assert!(verdict
            .issues
            .iter()
            .any(|i| matches!(i, FaithfulnessIssue::NumberMismatch { number } if (number - injected).abs() < 1e-9)));
        checked += 1;
    }
}

#[test]
fn template_stories_are_byte_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ranked: Vec<Insight> = (0..12).map(|_| random_insight(&mut rng)).collect();
    let render = || {
        let story = Narrator::template()
            .assemble_story("sales", &ranked)
            .unwrap();
        (
            render_story(&story, StoryFormat::Markdown),
            render_story(&story, StoryFormat::Json),
        )
    };
    assert_eq!(render(), render());
}

#[test]
fn hallucinating_backend_falls_back_to_template() {
    let server = fixture("hallucination.json");
    let insight = outlier_100();
    let d = remote(&server, 0).describe(&insight).unwrap();
    assert!(d.fallback);
    assert_eq!(d.source, DescriptionSource::Template);
    assert_eq!(
        d.text,
        Narrator::template().describe(&insight).unwrap().text
    );
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn faithful_reply_is_adopted() {
    let server = fixture("faithful.json");
    let d = remote(&server, 0).describe(&outlier_100()).unwrap();
    assert!(!d.fallback);
    assert_eq!(d.source, DescriptionSource::Remote);
    assert!(d.text.contains("4.36"));
    let body = &server.requests()[0];
    assert_eq!(body["model"], "mock");
    assert_eq!(body["messages"][0]["role"], "system");
}

#[test]
fn unavailable_backend_is_retried_then_reported() {
    let server = fixture("unavailable.json");
    let err = remote(&server, 2).describe(&outlier_100()).unwrap_err();
    assert!(matches!(err, NarrativeError::BackendUnavailable(_)));
    assert_eq!(server.requests().len(), 3);
}
