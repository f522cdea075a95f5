//! Beta beliefs: conjugate updates, mean-matched soft updates and percentiles.
//!
//! ```bash
//! cargo run --example belief_updates
//! ```

use pebol::{exact_mixture_mean, BeliefState, BetaParams};

fn main() -> pebol::Result<()> {
    let prior = BetaParams::uniform();
    println!("prior        {:>6} {:>6}  mean {:.4}  var {:.4}", prior.alpha, prior.beta, prior.mean(), prior.variance());

    let liked = prior.observe_binary(true);
    println!("after 'yes'  {:>6} {:>6}  mean {:.4}", liked.alpha, liked.beta, liked.mean());

    // A soft observation splits its unit of evidence between alpha and beta.
    for w in [0.9, 0.5, 0.1] {
        let soft = prior.observe_probability(w);
        println!(
            "w = {w:.1}      {:>6.2} {:>6.2}  mean {:.4}  (exact mixture {:.4})",
            soft.alpha,
            soft.beta,
            soft.mean(),
            exact_mixture_mean(&prior, w)
        );
    }

    println!();
    let p = BetaParams::new(8.0, 3.0)?;
    for k in [0.1, 0.5, 0.9, 0.99] {
        let x = p.percentile(k)?;
        println!("Beta(8, 3) percentile {k:<4} = {x:.6}  cdf {:.3e} off", (p.cdf(x) - k).abs());
    }

    println!();
    let state = BeliefState::uniform(4)?
        .update_probabilistic(&[0.99, 0.7, 0.2, 0.01])?
        .update_binary(&[1, 1, 0, 0])?;
    for (i, (m, v)) in state.means().iter().zip(state.variances()).enumerate() {
        println!("item {i}: mean {m:.3}  sd {:.3}", v.sqrt());
    }
    println!("total evidence {:.1}, digest {}", state.total_mass(), state.digest());
    Ok(())
}
