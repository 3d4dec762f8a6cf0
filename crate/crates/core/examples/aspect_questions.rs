//! Turn an aspect list into the questions asked of every review.
//!
//!     cargo run --example aspect_questions

use opinionforge::aspects::parse_aspects;
use opinionforge::{default_aspects, generate_questions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for q in generate_questions(&default_aspects())? {
        println!("{:<18} {:<20} {}", q.aspect.key, q.variant.to_string(), q.question);
    }

    // `!` keeps the display casing, `#` starts a comment
    let custom = parse_aspects("# headphones\nNoise Cancelling\n!USB-C\nComfort\n")?;
    println!();
    for q in generate_questions(&custom)? {
        println!("{}", q.question);
    }
    Ok(())
}
