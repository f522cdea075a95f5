//! PEBOL against the baseline that puts the whole catalog in one prompt and
//! asks the language model for questions and recommendations directly.
//!
//! With the stub model the baseline's recommendation list never changes,
//! which makes it a floor; point `LLM_ENDPOINT` at a real model to compare
//! in earnest (the oracle entailment model still needs catalog features).
//!
//! ```bash
//! cargo run --example monollm_baseline
//! ```

use std::sync::Arc;

use pebol::dialogue::{Method, Providers, SessionConfig};
use pebol::simulation::{round_robin_users, run_experiment, NoiseModel, Responder};
use pebol::{load_catalog, FeatureOracle, RemoteChat, Templates};

fn main() -> pebol::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/movies.jsonl");
    let catalog = Arc::new(load_catalog(path)?);
    let mut providers = Providers::offline(&catalog)?;
    if std::env::var("LLM_ENDPOINT").is_ok() {
        providers = Providers::new(
            Arc::new(RemoteChat::from_env()?),
            Arc::new(FeatureOracle::from_catalog(&catalog, 10.0)?),
            Arc::new(Templates::default()),
        );
    }
    let users = round_robin_users(48, catalog.len(), Responder::Oracle);

    for method in [Method::Pebol, Method::MonoLlm] {
        let config = SessionConfig { method, max_turns: 5, top_k: 5, seed: 1, ..SessionConfig::default() };
        let r = run_experiment(catalog.clone(), &users, &config, NoiseModel::none(), &providers)?;
        let curve: Vec<String> = r.per_turn.iter().map(|s| format!("{:.2}", s.mean)).collect();
        println!("{method:?}: MRR@5 by turn {}  (failed users: {})", curve.join(" "), r.failed_users);
    }
    Ok(())
}
