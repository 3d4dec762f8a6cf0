//! Score summaries: ROUGE against their source reviews and sentiment
//! consistency against the reviews' star ratings.
//!
//!     cargo run --example rouge_and_sentiment

use opinionforge::metrics::{
    predict_sentiment, rouge_n, s_rouge, s_sentiment, sentiment_consistency, RougeComponent,
    SentimentItem, SummarySources,
};
use opinionforge::MockBackend;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let summary = "the battery is great but the screen is dim";
    let review = "great battery and the screen is a bit dim";
    for n in [1, 2] {
        let s = rouge_n(summary, review, n)?;
        println!("ROUGE-{n}: P={:.3} R={:.3} F1={:.3}", s.precision, s.recall, s.f1);
    }

    println!("\nconsistency by rating gap:");
    for d in 0..=5u8 {
        println!("  |mean - predicted| = {d}: {:.3}", sentiment_consistency(f64::from(d), 0));
    }

    let backend = MockBackend::new(0);
    let groups: [(&str, &[u8], &[&str]); 3] = [
        ("Great screen, love it, excellent battery.", &[5, 5, 4], &["Love it.", "Excellent battery, great screen."]),
        ("Terrible battery, broken charger.", &[1, 2], &["Battery is terrible.", "Charger arrived broken."]),
        ("It is a tablet.", &[3], &["It is a tablet with a screen."]),
    ];
    let mut sentiment_items = Vec::new();
    let mut rouge_items = Vec::new();
    for (summary, ratings, sources) in groups {
        let predicted = predict_sentiment(summary, &backend)?;
        println!("{summary:?}: ratings {ratings:?}, predicted {predicted}");
        sentiment_items.push(SentimentItem {
            summary: Some(summary),
            member_ratings: ratings,
        });
        rouge_items.push(SummarySources {
            summary,
            sources: sources.to_vec(),
        });
    }
    println!("\nsentiment score over all groups: {:.3}", s_sentiment(&sentiment_items, &backend)?);
    println!("mean ROUGE-1 F1: {:.3}", s_rouge(&rouge_items, 1, RougeComponent::F1)?);
    Ok(())
}
