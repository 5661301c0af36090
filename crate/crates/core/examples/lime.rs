//! LIME surrogate around one point of a nonlinear model.

use itxml::explain::{lime_explain, LimeOptions, TrainingStats};

fn main() -> itxml::Result<()> {
    // f depends strongly on x0, weakly on x1, quadratically on x2, not on x3
    let model = |z: &[f64]| 2.0 * z[0] - 0.5 * z[1] + z[2] * z[2];
    let stats = TrainingStats {
        mean: vec![0.0; 4],
        std: vec![1.0, 1.0, 0.5, 2.0],
    };
    let x = [0.3, -1.0, 1.0, 0.0];
    let e = lime_explain(&model, &x, &stats, &LimeOptions::default(), 42)?;
    println!("kernel width {:.3}, fidelity {:.3}, intercept {:.3}", e.kernel_width, e.fidelity, e.intercept);
    for (j, w) in &e.weights {
        println!("x{j} {w:+.4} per std");
    }
    Ok(())
}
