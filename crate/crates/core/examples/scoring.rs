//! Scores the demo dataset's insights and shows the ranking under the
//! per-topic fatigue cap, before and after a rejection.
//!
//! ```text
//! cargo run --release -p storyline --example scoring
//! ```

use std::path::Path;

use storyline::pipeline::{run_analysis, AnalyzeConfig};
use storyline::score::{importance, js_divergence, top_k, FatigueState, Feedback};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "importance of 30 among [10, 20, 30, 40]: {:.4}",
        importance(&[10.0, 20.0, 30.0, 40.0], 2)?
    );
    println!(
        "JS divergence of [0.5, 0.5] and [0.9, 0.1]: {:.4}",
        js_divergence(&[0.5, 0.5], &[0.9, 0.1])
    );

    let cfg =
        AnalyzeConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_sales.json"))?;
    let run = run_analysis(&cfg)?;
    let cap = cfg.scoring.fatigue_cap;
    let show = |state: &FatigueState| {
        for i in top_k(&run.pool, 8, cap, state) {
            let s = &i.score;
            println!(
                "  {:.3}  imp {:.2} sig {:.2} sur {:.2} int {:.2}  {} on {}",
                s.composite,
                s.importance,
                s.significance,
                s.surprise,
                s.interpretability,
                i.insight_type.as_str(),
                i.subspace
            );
        }
    };
    println!("top 8 of {} insights:", run.pool.len());
    let mut state = FatigueState::default();
    show(&state);

    let first = &top_k(&run.pool, 1, cap, &state)[0];
    state.apply_feedback(first, Feedback::Reject, cfg.scoring.feedback_decay);
    println!(
        "after rejecting one {} insight (serving-time weights applied by the agent):",
        first.insight_type.as_str()
    );
    println!("  type weights: {:?}", state.type_weights);
    Ok(())
}
