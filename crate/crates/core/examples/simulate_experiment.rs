//! Compare acquisition policies by MRR@10 over simulated users.
//!
//! ```bash
//! cargo run --release --example simulate_experiment
//! ```

use std::sync::Arc;

use pebol::dialogue::{ObservationMode, Providers, SessionConfig};
use pebol::simulation::{round_robin_users, run_experiment, write_outputs, NoiseModel, Responder};
use pebol::{synth_binary_code_catalog, Policy};

fn main() -> pebol::Result<()> {
    let catalog = Arc::new(synth_binary_code_catalog(100, 7, 0)?);
    let providers = Providers::offline(&catalog)?;
    let users = round_robin_users(200, catalog.len(), Responder::Oracle);
    // Some noise keeps the policies from all solving the catalog in seven turns.
    let noise = NoiseModel::new(0.2)?;

    println!("{:<8} {:<6} {:>7} {:>7} {:>7} {:>7}", "policy", "obs", "t=1", "t=3", "t=5", "t=10");
    for (name, policy) in [
        ("ts", Policy::thompson()),
        ("ucb", Policy::ucb(0.9)?),
        ("er", Policy::entropy_reduction()),
        ("greedy", Policy::greedy()),
        ("random", Policy::random()),
    ] {
        for obs in [ObservationMode::Binary, ObservationMode::Probabilistic] {
            let config = SessionConfig { policy, observation_mode: obs, seed: 2024, ..SessionConfig::default() };
            let r = run_experiment(catalog.clone(), &users, &config, noise, &providers)?;
            let at = |t: usize| r.summary(t).map_or(f64::NAN, |s| s.mean);
            let obs = if obs == ObservationMode::Binary { "B" } else { "P" };
            println!("{name:<8} {obs:<6} {:>7.3} {:>7.3} {:>7.3} {:>7.3}", at(1), at(3), at(5), at(10));
            if name == "ts" && obs == "P" {
                let dir = std::env::temp_dir().join("pebol-ts-p");
                write_outputs(&r, &dir)?;
                println!("         (per-user rows written to {})", dir.display());
            }
        }
    }
    Ok(())
}
