//! One elicitation session against a synthetic catalog, answered by a user
//! who likes a single hidden item.
//!
//! Every item is a distinct 7-bit code and every question asks about one
//! bit, so seven truthful answers pin the target down.
//!
//! ```bash
//! cargo run --example oracle_session
//! ```

use std::sync::Arc;

use pebol::dialogue::{Phase, Providers, Session, SessionConfig};
use pebol::simulation::{simulate_response, NoiseModel, SimulatedUser};
use pebol::synth_binary_code_catalog;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pebol::Result<()> {
    let catalog = Arc::new(synth_binary_code_catalog(100, 7, 1)?);
    let providers = Providers::offline(&catalog)?;
    let user = SimulatedUser::oracle(42);
    println!("hidden target: {} ({})\n", catalog.items()[42].id, catalog.items()[42].description);

    let config = SessionConfig { seed: 11, max_turns: 7, ..SessionConfig::default() };
    let mut session = Session::start(config, catalog.clone(), providers.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    while session.phase() != Phase::Finished {
        let query = session.next_query()?;
        let answer = simulate_response(&user, &catalog, &query, &NoiseModel::none(), &providers.templates, &mut rng)?;
        let result = session.submit_response(answer)?;
        let top: Vec<&str> = result.ranking.entries.iter().take(3).map(|e| catalog.items()[e.index].id.as_str()).collect();
        let rank = result.ranking.position(user.target).map_or("-".to_string(), |r| r.to_string());
        println!("turn {}: {:<16} {:<3}  target rank {rank:<2}  top {top:?}", query.turn, query.text, answer.as_str());
    }
    Ok(())
}
