//! Answer the questions yourself.
//!
//! Uses the offline providers over `examples/data/movies.jsonl`. Set
//! `LLM_ENDPOINT` and `NLI_ENDPOINT` to use real models instead.
//!
//! ```bash
//! cargo run --example interactive
//! ```

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use pebol::dialogue::{Phase, Providers, Session, SessionConfig};
use pebol::{load_catalog, Answer, Error, RemoteChat, RemoteNli, Templates};

fn providers(catalog: &pebol::ItemCatalog) -> pebol::Result<Providers> {
    if std::env::var("LLM_ENDPOINT").is_ok() && std::env::var("NLI_ENDPOINT").is_ok() {
        return Ok(Providers::new(
            Arc::new(RemoteChat::from_env()?),
            Arc::new(RemoteNli::from_env()?),
            Arc::new(Templates::default()),
        ));
    }
    Providers::offline(catalog)
}

fn main() -> pebol::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/movies.jsonl");
    let catalog = Arc::new(load_catalog(path)?);
    let config = SessionConfig { max_turns: 6, top_k: 3, seed: rand::random(), ..SessionConfig::default() };
    let mut session = Session::start(config, catalog.clone(), providers(&catalog)?)?;
    let mut lines = io::stdin().lock().lines();

    while session.phase() != Phase::Finished {
        let query = match session.next_query() {
            Ok(q) => q,
            Err(Error::AllAspectsExhausted) => break,
            Err(e) => return Err(e),
        };
        let answer = loop {
            print!("{} [yes/no] ", query.text);
            io::stdout().flush()?;
            let Some(line) = lines.next() else { return Ok(()) };
            if let Ok(a) = line?.trim().to_lowercase().parse::<Answer>() {
                break a;
            }
        };
        let result = session.submit_response(answer)?;
        for (r, e) in result.ranking.entries.iter().enumerate() {
            println!("  {}. {:<15} {:.2}", r + 1, catalog.items()[e.index].id, e.score);
        }
    }
    println!("\nfinal beliefs:");
    let mut rows = session.belief_snapshot()?;
    rows.sort_by(|a, b| b.mean.total_cmp(&a.mean));
    for row in rows {
        let bar = "#".repeat((row.mean * 40.0).round() as usize);
        println!("{:<15} {:.2} {bar}", row.id, row.mean);
    }
    Ok(())
}
