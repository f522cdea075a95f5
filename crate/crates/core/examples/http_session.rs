//! Drive the REST service the way a front end would.
//!
//! Starts the service on an ephemeral port in the background, then plays a
//! session over HTTP. Run `pebol serve` for a standalone server.
//!
//! ```bash
//! cargo run --example http_session
//! ```

use std::sync::Arc;

use pebol::service::{router, SessionStore};
use serde_json::{json, Value};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = Arc::new(SessionStore::with_demo(0)?);
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    rt.spawn(async move { axum::serve(listener, router(store)).await });

    let http = ureq::Agent::new_with_defaults();
    let created: Value = http
        .post(&format!("{base}/sessions"))
        .send_json(json!({"catalog": "demo", "policy": "ucb", "max_turns": 4, "seed": 7}))?
        .body_mut()
        .read_json()?;
    let id = created["session_id"].as_str().unwrap();
    println!("session {id} over {} items", created["n_items"]);

    // This user likes anything tagged f0 or f3.
    loop {
        let q: Value = http.get(&format!("{base}/sessions/{id}/query")).call()?.body_mut().read_json()?;
        let aspect = q["aspect"].as_str().unwrap_or_default();
        let answer = if aspect == "f0" || aspect == "f3" { "yes" } else { "no" };
        let r: Value = http
            .post(&format!("{base}/sessions/{id}/response"))
            .send_json(json!({ "answer": answer }))?
            .body_mut()
            .read_json()?;
        let top: Vec<&str> = r["recommendations"].as_array().unwrap().iter().take(3).filter_map(|x| x["description"].as_str()).collect();
        println!("turn {}: {} -> {answer}; top {top:?}", q["turn"], q["query"]);
        if r["finished"] == true {
            break;
        }
    }

    // A finished session refuses further queries.
    let again = http.get(&format!("{base}/sessions/{id}/query")).call();
    println!("query after finishing: {:?}", again.err().map(|e| e.to_string()));
    Ok(())
}
