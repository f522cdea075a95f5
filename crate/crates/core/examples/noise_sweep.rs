//! How response noise erodes MRR@10. At level `p` each answer is replaced
//! by a coin flip with probability `p`.
//!
//! ```bash
//! cargo run --release --example noise_sweep
//! ```

use std::sync::Arc;

use pebol::dialogue::{Providers, SessionConfig};
use pebol::simulation::{round_robin_users, run_experiment, NoiseModel, Responder};
use pebol::synth_binary_code_catalog;

fn main() -> pebol::Result<()> {
    let catalog = Arc::new(synth_binary_code_catalog(100, 7, 3)?);
    let providers = Providers::offline(&catalog)?;
    let users = round_robin_users(300, catalog.len(), Responder::Oracle);
    let config = SessionConfig { seed: 5, ..SessionConfig::default() };

    for level in [0.0, 0.1, 0.25, 0.5, 0.75, 1.0] {
        let r = run_experiment(catalog.clone(), &users, &config, NoiseModel::new(level)?, &providers)?;
        let s = r.summary(10).unwrap();
        let bar = "=".repeat((s.mean * 50.0).round() as usize);
        println!("noise {level:<4}  MRR@10 {:.3} [{:.3}, {:.3}]  {bar}", s.mean, s.ci_lb, s.ci_ub);
    }
    Ok(())
}
