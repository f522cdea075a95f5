//! Which item each acquisition policy would ask about next.
//!
//! ```bash
//! cargo run --example acquisition_policies
//! ```

use pebol::acquisition::{policy_scores, select_item};
use pebol::{BeliefState, BetaParams, Policy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pebol::Result<()> {
    // A confident favourite, an unexplored item, a likely dislike and a
    // well-explored middling item.
    let state = BeliefState::from_params(vec![
        BetaParams::new(6.0, 1.0)?,
        BetaParams::new(1.0, 1.0)?,
        BetaParams::new(1.0, 4.0)?,
        BetaParams::new(20.0, 20.0)?,
    ])?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let policies = [
        ("greedy", Policy::greedy()),
        ("ucb 0.9", Policy::ucb(0.9)?),
        ("ucb 0.99", Policy::ucb(0.99)?),
        ("er", Policy::entropy_reduction()),
    ];
    for (name, policy) in &policies {
        let scores = policy_scores(&state, policy, &mut rng)?.unwrap();
        let shown: Vec<String> = scores.iter().map(|s| format!("{s:.3}")).collect();
        println!("{name:<9} scores [{}] -> item {}", shown.join(", "), select_item(&state, policy, &mut rng)?);
    }

    let draws = 20_000;
    for (name, policy) in [("ts", Policy::thompson()), ("random", Policy::random())] {
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[select_item(&state, &policy, &mut rng)?] += 1;
        }
        let freq: Vec<String> = counts.iter().map(|c| format!("{:.3}", *c as f64 / draws as f64)).collect();
        println!("{name:<9} selection frequency [{}]", freq.join(", "));
    }
    Ok(())
}
