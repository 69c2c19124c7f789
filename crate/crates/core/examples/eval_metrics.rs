//! Ranking and text-overlap metrics on small hand-made inputs.
//!
//! ```text
//! cargo run -p storyline --example eval_metrics
//! ```

use storyline::eval::{
    bleu, rouge, spearman_footrule, spearman_footrule_normalized, tokenize, RankAnnotation,
    RougeVariant,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = RankAnnotation::from_order(&["a", "b", "c", "d"])?;
    let predicted = RankAnnotation::from_order(&["b", "a", "d", "c"])?;
    println!(
        "footrule {} (normalized {})",
        spearman_footrule(&truth, &predicted)?,
        spearman_footrule_normalized(&truth, &predicted)?
    );

    let candidate = tokenize("Sales in the west region rose by 40% in 2023.");
    let reference = tokenize("In 2023 sales in the west region rose 40%.");
    println!("BLEU-4 {:.4}", bleu(&candidate, &[reference.clone()], 4)?);
    println!(
        "ROUGE-1 {:.4}",
        rouge(&candidate, &reference, RougeVariant::Rouge1)?
    );
    println!(
        "ROUGE-L {:.4}",
        rouge(&candidate, &reference, RougeVariant::RougeL)?
    );
    Ok(())
}
