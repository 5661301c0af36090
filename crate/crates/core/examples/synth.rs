//! Samples a synthetic survey from the bundled developing-dominant scenario
//! and prints the ground truth next to the first rows.

use itxml::synth::{sample_dataset, ScenarioSpec};
use itxml::SurveyDefinition;

fn main() -> itxml::Result<()> {
    let spec = ScenarioSpec::from_toml_str(include_str!("../fixtures/developing_dominant.toml"))?;
    let data = sample_dataset(&SurveyDefinition::bundled(), &spec)?;

    println!("{} columns, {} rows", data.header.len(), data.rows.len());
    for row in data.rows.iter().take(3) {
        println!("{}", row[..8].join(","));
    }
    for org in &data.truth.orgs {
        let mut counts = [0usize; 3];
        org.states.iter().for_each(|&s| counts[s] += 1);
        println!("{} true state counts B/D/A {:?}", org.org_id, counts);
    }
    println!("stationary {:.3?}", spec.true_params.stationary());
    Ok(())
}
