//! Recoding of categorical answers onto the numeric scale.
//!
//! `cargo run --example recode`

use itxml::survey::{recode, RecodeMap};
use itxml::SurveyDefinition;

fn main() -> itxml::Result<()> {
    let map = RecodeMap::privacy_incidents();
    for e in map.entries() {
        println!("{:<14} -> {}", e.label, e.value);
    }

    let survey = SurveyDefinition::bundled();
    let q = survey.question("ac_least_privilege").expect("bundled question");
    for answer in ["1", " 4 ", "5"] {
        println!("ac_least_privilege {answer:?} -> {}", recode(&q.scale, answer)?);
    }
    // out-of-scale answers are rejected, and cleaning blanks them
    println!("ac_least_privilege \"6\" -> {}", recode(&q.scale, "6").unwrap_err());
    Ok(())
}
