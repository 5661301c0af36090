//! Full assessment of the bundled fixture, printed as the text summary.
//!
//! `cargo run --example assess -- [seed]`

use itxml::pipeline::{render_json, render_text, run_assessment, PipelineConfig};
use itxml::SurveyDefinition;

const CSV: &[u8] = include_bytes!("../fixtures/developing_dominant.csv");

fn main() -> itxml::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let a = run_assessment(&SurveyDefinition::bundled(), &PipelineConfig::default(), CSV, seed, 10)?;
    print!("{}", render_text(&a.report));
    let json = render_json(&a.report)?;
    println!("\nJSON report: {} bytes, schema-valid", json.len());
    Ok(())
}
