//! Save a session mid-dialogue and pick it up again later.
//!
//! ```bash
//! cargo run --example session_persistence
//! ```

use std::sync::Arc;

use pebol::dialogue::{Providers, Session, SessionConfig, SessionExport};
use pebol::{synth_binary_code_catalog, Answer};

fn main() -> pebol::Result<()> {
    let catalog = Arc::new(synth_binary_code_catalog(50, 6, 4)?);
    let providers = Providers::offline(&catalog)?;
    let mut session = Session::start(SessionConfig { seed: 3, ..SessionConfig::default() }, catalog.clone(), providers.clone())?;
    for answer in [Answer::Yes, Answer::No] {
        let q = session.next_query()?;
        println!("{} {answer}", q.text);
        session.submit_response(answer)?;
    }
    let pending = session.next_query()?;
    println!("{} ... (saving)", pending.text);

    let json = serde_json::to_string_pretty(&session.export())?;
    println!("export is {} bytes", json.len());

    let export: SessionExport = serde_json::from_str(&json)?;
    let mut resumed = Session::import(export, catalog, providers)?;
    resumed.submit_response(Answer::Yes)?;
    let mut original = session;
    original.submit_response(Answer::Yes)?;

    // The random stream was saved too, so both copies ask the same thing next.
    let (a, b) = (original.next_query()?, resumed.next_query()?);
    println!("next: {:?} / {:?}", a.text, b.text);
    assert_eq!(a, b);
    Ok(())
}
