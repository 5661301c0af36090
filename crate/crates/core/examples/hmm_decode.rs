//! Viterbi decoding and posterior confidence under a fixed three-state model.

use itxml::hmm::{classify_org, decode, map_states, HmmParams};

fn main() -> itxml::Result<()> {
    let params = HmmParams::new(
        vec![0.25, 0.5, 0.25],
        vec![
            vec![0.188, 0.490, 0.322],
            vec![0.228, 0.563, 0.209],
            vec![0.353, 0.395, 0.252],
        ],
        vec![vec![2.0], vec![3.0], vec![4.2]],
        vec![vec![0.09]; 3],
    )?;
    let obs: Vec<Vec<f64>> = [3.1, 2.9, 3.2, 4.1, 3.0, 2.1, 3.05, 2.95].iter().map(|&v| vec![v]).collect();

    let decoded = decode(&params, &obs)?;
    let labels = map_states(&params, None);
    println!("log-likelihood {:.4}", decoded.log_likelihood);
    for (t, (s, p)) in decoded.states.iter().zip(&decoded.posteriors).enumerate() {
        println!("t={t} x={:.2} state {s} ({}) posterior {:.3?}", obs[t][0], labels.label(*s), p);
    }
    let c = classify_org("example", &decoded, &labels);
    println!("dominant {} with confidence {:.3}", c.dominant, c.confidence);
    Ok(())
}
