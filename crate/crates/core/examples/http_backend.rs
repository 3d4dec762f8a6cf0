//! Serve the mock over the wire protocol and drive the pipeline through the
//! HTTP client, exactly as with an external inference sidecar.
//!
//!     cargo run --example http_backend

use std::path::PathBuf;
use std::sync::Arc;

use opinionforge::backend::server::serve;
use opinionforge::pipeline::run_with_backends;
use opinionforge::{BackendConfig, HttpBackend, MockBackend, ModelBackend, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = serve(Arc::new(MockBackend::new(7)), "127.0.0.1:0", 4)?;
    println!("mock sidecar at {}", server.url());

    let mut backend_config = BackendConfig::http(server.url());
    backend_config.max_retries = 2;
    backend_config.backoff_ms = 50;
    let client = HttpBackend::new(&backend_config)?;
    client.health()?;

    let probs = client.sentiment("Great battery, excellent screen.")?;
    println!("sentiment distribution: {probs:.3?}");
    let vectors = client.embed(&["battery life".to_string(), "screen".to_string()])?;
    println!("embedding dims: {}", vectors[0].len());

    let config = RunConfig {
        input_path: Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/reviews.jsonl")),
        backend: backend_config,
        opinion_extraction: false,
        output_dir: std::env::temp_dir().join("opinionforge-http-example"),
        ..RunConfig::default()
    };
    let (report, _) = run_with_backends(&config, &client, &client)?;
    for (group, scores) in &report.per_group {
        println!("{group:<12} S={:.3} R1-F1={:.3}", scores.scores.s_sentiment, scores.scores.rouge1.f1);
    }

    server.shutdown();
    Ok(())
}
