//! Trains the random forest on an XOR pattern hidden among noise features,
//! then reports held-out metrics, 5-fold CV and feature importance.

use rand::Rng;

use itxml::forest::{cross_validate, evaluate, fit_forest, ForestConfig};
use itxml::rng::rng;
use itxml::MaturityLabel;

fn main() -> itxml::Result<()> {
    let mut r = rng(1);
    let x: Vec<Vec<f64>> = (0..400).map(|_| (0..10).map(|_| r.random::<f64>()).collect()).collect();
    let y: Vec<usize> = x.iter().map(|row| usize::from((row[0] > 0.5) != (row[1] > 0.5))).collect();

    let config = ForestConfig::default();
    let forest = fit_forest(&x[..300], &y[..300], &config, 1)?;
    let pred = forest.predict_many(&x[300..])?;
    // classes 0/1 reuse the Developing/Advanced labels for the metric report
    let as_label = |c: &usize| MaturityLabel::ALL[c + 1];
    let m = evaluate(
        &y[300..].iter().map(as_label).collect::<Vec<_>>(),
        &pred.iter().map(as_label).collect::<Vec<_>>(),
    )?;
    println!("held-out accuracy {:.3}, kappa {:.3}", m.accuracy, m.kappa);
    println!("confusion {:?}", m.confusion_matrix.counts);

    let cv = cross_validate(&x, &y, 5, &config, 2)?;
    println!("5-fold CV {:.3} ± {:.3} {:.3?}", cv.mean, cv.std, cv.folds);

    for (j, v) in forest.feature_importance().iter().enumerate() {
        println!("x{j} {v:.3}{}", if j < 2 { "  (informative)" } else { "" });
    }
    Ok(())
}
