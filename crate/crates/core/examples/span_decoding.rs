//! Decode an answer span from start/end distributions with both decoders,
//! and score it against a gold span. The plain mock yields seeded noise, so
//! the second half pins the answer with a QA fixture to show a peaked
//! distribution.
//!
//!     cargo run --example span_decoding

use opinionforge::backend::{mock_qa, MockBackend, ModelBackend, QaFixture};
use opinionforge::mrc::{decode_span, span_loss, span_text};
use opinionforge::Decoder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let question = "How is battery?";
    let context = "Battery easily lasts ten hours, but charging is slow.";
    let out = mock_qa(question, context, 42)?;
    let tok = &out.tokenization;
    println!("tokens: {:?} (separator at {})", tok.tokens, tok.sep_index);

    for decoder in [Decoder::Sequential, Decoder::Joint] {
        for strict in [false, true] {
            let (s, e) = decode_span(&out.distribution, tok.sep_index, decoder, strict)?;
            let p = out.distribution.start_probs[s] * out.distribution.end_probs[e];
            let text = span_text(context, tok, s, e).unwrap_or_default();
            println!("{decoder:?} strict={strict:<5} -> ({s}, {e}) p={p:.4} {text:?}");
        }
    }

    // "lasts ten hours" as the gold answer
    let gold_s = tok.tokens.iter().position(|t| t == "lasts").expect("token present");
    let loss = span_loss(&out.distribution, gold_s, gold_s + 2)?;
    println!("noise loss against gold ({gold_s}, {}): {loss:.4}", gold_s + 2);

    let pinned = MockBackend::new(42).with_fixtures(vec![QaFixture {
        question: question.into(),
        context: context.into(),
        answer: "lasts ten hours".into(),
    }]);
    let out = pinned.qa(question, context)?;
    let tok = &out.tokenization;
    for decoder in [Decoder::Sequential, Decoder::Joint] {
        let (s, e) = decode_span(&out.distribution, tok.sep_index, decoder, true)?;
        let text = span_text(context, tok, s, e).unwrap_or_default();
        println!("fixture {decoder:?} -> ({s}, {e}) {text:?}");
    }
    let loss = span_loss(&out.distribution, gold_s, gold_s + 2)?;
    println!("fixture loss against gold: {loss:.4}");
    Ok(())
}
