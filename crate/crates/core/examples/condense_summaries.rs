//! Condense overlapping chunk summaries: split into sentences, cluster their
//! embeddings and keep the longest sentence of each cluster.
//!
//!     cargo run --example condense_summaries [threshold]

use opinionforge::condense::condense_detailed;
use opinionforge::MockBackend;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let threshold: f64 = std::env::args().nth(1).map_or(Ok(0.8), |t| t.parse())?;
    let chunk_summaries = vec![
        "The battery lasts all day. The screen is bright.".to_string(),
        "Battery lasts all day long. Shipping was slow.".to_string(),
        "The screen is very bright. The battery lasts all day.".to_string(),
    ];
    let backend = MockBackend::new(0);
    let condensed = condense_detailed(&chunk_summaries, &backend, threshold)?;
    for (i, cluster) in condensed.clusters.iter().enumerate() {
        println!("cluster {i}:");
        for &m in &cluster.member_indices {
            println!("  {}", condensed.sentences[m]);
        }
    }
    println!("\ncondensed (threshold {threshold}): {}", condensed.text);
    Ok(())
}
