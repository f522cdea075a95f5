//! Score one preference against a catalog with real models.
//!
//! ```bash
//! export LLM_ENDPOINT=https://api.openai.com/v1 LLM_API_KEY=sk-... LLM_MODEL=gpt-3.5-turbo
//! export NLI_ENDPOINT=http://localhost:9000/nli
//! cargo run --example remote_providers -- "animated family film"
//! ```
//!
//! The NLI endpoint takes `{"premise", "hypothesis"}` and answers
//! `{"entail_logit", "contradiction_logit", "neutral_logit"}`.

use pebol::entailment::{score_catalog, EntailmentConfig};
use pebol::querygen::{extract_aspect, generate_query};
use pebol::{load_catalog, RemoteChat, RemoteNli, Templates};

fn main() -> pebol::Result<()> {
    if std::env::var("LLM_ENDPOINT").is_err() || std::env::var("NLI_ENDPOINT").is_err() {
        eprintln!("set LLM_ENDPOINT and NLI_ENDPOINT (see the header of this file)");
        return Ok(());
    }
    let chat = RemoteChat::from_env()?;
    let nli = RemoteNli::from_env()?;
    let templates = Templates::default();
    let catalog = load_catalog(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/movies.jsonl"))?;

    let description = std::env::args().nth(1).unwrap_or_else(|| catalog.items()[0].description.clone());
    let aspect = extract_aspect(&chat, &templates, &description, &[], true)?;
    let query = generate_query(&chat, &templates, &aspect)?;
    println!("aspect: {aspect}\nquery:  {query}\n");

    let w = score_catalog(&nli, &catalog, aspect.as_str(), &EntailmentConfig::default())?;
    let mut scored: Vec<_> = catalog.items().iter().zip(w).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (item, p) in scored {
        println!("{:<15} P(entails) {p:.3}", item.id);
    }
    Ok(())
}
