//! Fits a Gaussian HMM to sequences drawn from a known model and compares
//! the estimate with the truth.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use itxml::hmm::{fit_with_restarts, FitOptions, HmmParams, ObservationSequence};
use itxml::rng::rng;

fn draw(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    p.iter().position(|x| {
        acc += x;
        u < acc
    }).unwrap_or(p.len() - 1)
}

fn main() -> itxml::Result<()> {
    let truth = HmmParams::new(
        vec![0.3, 0.4, 0.3],
        vec![vec![0.8, 0.15, 0.05], vec![0.1, 0.8, 0.1], vec![0.05, 0.15, 0.8]],
        vec![vec![1.5, 2.0], vec![3.0, 3.5], vec![4.5, 5.0]],
        vec![vec![0.25; 2]; 3],
    )?;
    let mut r = rng(7);
    let noise = Normal::new(0.0, 0.5).expect("positive sd");
    let seqs: Vec<ObservationSequence> = (0..50)
        .map(|i| {
            let mut s = draw(&truth.pi, r.random());
            let obs = (0..100)
                .map(|t| {
                    if t > 0 {
                        s = draw(&truth.transitions[s], r.random());
                    }
                    truth.means[s].iter().map(|m| m + noise.sample(&mut r)).collect()
                })
                .collect();
            ObservationSequence::new(format!("seq{i}"), obs)
        })
        .collect();

    let fit = fit_with_restarts(&seqs, 3, &FitOptions::default(), 7, 8)?;
    println!(
        "{} iterations, converged {}, log-likelihood {:.2}",
        fit.log_likelihoods.len() - 1,
        fit.converged,
        fit.final_log_likelihood()
    );
    // Restart 0 starts from ascending quantiles, so states usually come back
    // in ascending-mean order.
    for k in 0..3 {
        println!("state {k}: mean {:.3?} A {:.3?}", fit.params.means[k], fit.params.transitions[k]);
    }
    Ok(())
}
