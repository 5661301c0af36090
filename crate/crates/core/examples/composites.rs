//! Dimension composite scores, threshold labels and descriptive statistics
//! for the bundled fixture.

use itxml::pipeline::prepare;
use itxml::preprocess::describe_dataset;
use itxml::SurveyDefinition;

const CSV: &[u8] = include_bytes!("../fixtures/developing_dominant.csv");

fn main() -> itxml::Result<()> {
    let survey = SurveyDefinition::bundled();
    let ds = prepare(&survey, CSV, 0.5)?.dataset;

    for i in 0..5 {
        let c = &ds.composites[i];
        println!(
            "{} {}  SM {:.2}  TA {:.2}  AC {:.2}  PF {:.2}  overall {:.2} -> {}",
            ds.org_index[i],
            ds.respondent_ids[i],
            c.security_maturity.unwrap_or(f64::NAN),
            c.threat_awareness.unwrap_or(f64::NAN),
            c.access_control.unwrap_or(f64::NAN),
            c.policy_framework.unwrap_or(f64::NAN),
            c.overall.unwrap_or(f64::NAN),
            ds.labels[i]
        );
    }
    println!();
    for (name, s) in describe_dataset(&ds)? {
        println!("{name:<18} n {}  mean {:.3}  std {:.3}  median {:.3}", s.count, s.mean, s.std, s.q50);
    }
    Ok(())
}
