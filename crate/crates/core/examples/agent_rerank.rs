//! Re-ranks the demo pool against a draft paragraph, then rejects the top
//! suggestion and re-ranks again.
//!
//! ```text
//! cargo run --release -p storyline --example agent_rerank
//! ```

use std::path::Path;

use storyline::agent::{apply_feedback, parse_context, rerank, AgentConfig, EditingContext};
use storyline::pipeline::{run_analysis, AnalyzeConfig};
use storyline::score::{FatigueState, Feedback};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg =
        AnalyzeConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_sales.json"))?;
    let run = run_analysis(&cfg)?;
    let ctx = EditingContext {
        draft_text: "Online revenue in the west region kept growing through the year.".into(),
        cursor_section: Some("Channels".into()),
        ..EditingContext::default()
    };
    let tokens = parse_context(&ctx);
    let agent = AgentConfig {
        k: 5,
        ..AgentConfig::default()
    };
    let cap = cfg.scoring.fatigue_cap;

    let mut state = FatigueState::default();
    let first = rerank(&run.pool, &tokens, &agent, &state, cap);
    for s in &first {
        println!(
            "{:.3} (relevance {:.3})  {}",
            s.final_score, s.relevance, s.description.text
        );
    }
    state = apply_feedback(Feedback::Reject, &first[0].insight, &state, agent.decay);
    println!("\nafter rejecting the first suggestion:");
    for s in rerank(&run.pool, &tokens, &agent, &state, cap) {
        println!(
            "{:.3} (relevance {:.3})  {}",
            s.final_score, s.relevance, s.description.text
        );
    }
    Ok(())
}
