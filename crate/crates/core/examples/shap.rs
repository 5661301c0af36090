//! Exact interventional Shapley values for a forest, checked against
//! coalition enumeration and the efficiency identity.

use rand::Rng;

use itxml::explain::{brute_force_shapley, sample_background, shap_values, GlobalImportance};
use itxml::forest::{fit_forest, ForestConfig};
use itxml::rng::rng;

fn main() -> itxml::Result<()> {
    let mut r = rng(3);
    let x: Vec<Vec<f64>> = (0..200).map(|_| (0..6).map(|_| r.random::<f64>()).collect()).collect();
    let y: Vec<usize> = x.iter().map(|v| usize::from(v[0] + 0.5 * v[1] > 0.75)).collect();
    let forest = fit_forest(&x, &y, &ForestConfig { n_trees: 25, ..ForestConfig::default() }, 3)?;
    let background = sample_background(&x, 20, 3);

    let probe = &x[0];
    let e = shap_values(&forest, probe, &background)?;
    let f = |z: &[f64]| forest.predict_proba(z).expect("six features")[1];
    let oracle = brute_force_shapley(&f, probe, &background, &(0..6).collect::<Vec<_>>())?;
    println!("f(x) = {:.4}, base = {:.4}", e.prediction[1], e.base_value[1]);
    for (j, (a, b)) in e.values[1].iter().zip(&oracle).enumerate() {
        println!("x{j}: {a:+.6}  enumeration {b:+.6}");
    }
    println!("efficiency gap {:.2e}", e.efficiency_gap(1));

    let all: Vec<Vec<f64>> = x[..50]
        .iter()
        .map(|row| shap_values(&forest, row, &background).map(|e| e.values[1].clone()))
        .collect::<itxml::Result<_>>()?;
    let global = GlobalImportance::from_values(&all);
    println!("ranking by mean |SHAP|: {:?}", global.ranking);
    Ok(())
}
