use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pebol::dialogue::{Method, ObservationMode, Providers, SessionConfig};
use pebol::entailment::{EntailmentConfig, EntailmentProvider, FeatureOracle, RemoteNli, DEFAULT_ORACLE_LOGIT};
use pebol::language::{LanguageProvider, RemoteChat, StubLm};
use pebol::service::{self, SessionStore};
use pebol::simulation::{round_robin_users, run_experiment, write_outputs, NoiseModel, Responder};
use pebol::{load_catalog, synth_binary_code_catalog, ItemCatalog, Policy, PolicyKind, Templates};

#[derive(Parser)]
#[command(name = "pebol", version, about = "Bayesian preference elicitation with language models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate users against a catalog and write per-turn MRR@k.
    Run(RunArgs),
    /// Serve interactive sessions over HTTP (address from PEBOL_ADDR).
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NliKind {
    Oracle,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum LlmKind {
    Stub,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResponderKind {
    Oracle,
    Llm,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value = "oracle")]
    nli: NliKind,
    #[arg(long, value_enum, default_value = "stub")]
    llm: LlmKind,
    /// Directory of prompt templates overriding the built-in ones.
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSONL catalog, or `synth:N:BITS[:SEED]` for a binary-code catalog.
    #[arg(long)]
    catalog: String,
    #[arg(long, default_value = "pebol")]
    method: Method,
    #[arg(long, default_value = "ts")]
    policy: PolicyKind,
    #[arg(long, default_value = "prob")]
    obs: ObservationMode,
    #[command(flatten)]
    providers: ProviderArgs,
    #[arg(long, default_value_t = 10)]
    turns: usize,
    #[arg(long, default_value_t = 100)]
    users: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    nli_temp: f64,
    #[arg(long, default_value_t = 0.9)]
    ucb_k: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    history: OnOff,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Who answers the simulated users' questions.
    #[arg(long, value_enum, default_value = "oracle")]
    responder: ResponderKind,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Extra catalogs as NAME=PATH (or NAME=synth:N:BITS[:SEED]); `demo` is always present.
    #[arg(long = "catalog")]
    catalogs: Vec<String>,
    #[arg(long, default_value_t = 0)]
    demo_seed: u64,
    #[command(flatten)]
    providers: ProviderArgs,
    /// Write and restore session snapshots in this directory.
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    snapshot_secs: u64,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn open_catalog(spec: &str) -> AnyResult<ItemCatalog> {
    if let Some(rest) = spec.strip_prefix("synth:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let (n, bits, seed) = match parts.as_slice() {
            [n, b] => (n.parse()?, b.parse()?, 0),
            [n, b, s] => (n.parse()?, b.parse()?, s.parse()?),
            _ => return Err(format!("expected synth:N:BITS[:SEED], got {spec:?}").into()),
        };
        return Ok(synth_binary_code_catalog(n, bits, seed)?);
    }
    Ok(load_catalog(spec)?)
}

fn build_providers(args: &ProviderArgs, catalog: &ItemCatalog) -> AnyResult<Providers> {
    let language: Arc<dyn LanguageProvider> = match args.llm {
        LlmKind::Stub => Arc::new(StubLm),
        LlmKind::Remote => Arc::new(RemoteChat::from_env()?),
    };
    let entailment: Arc<dyn EntailmentProvider> = match args.nli {
        NliKind::Oracle => Arc::new(FeatureOracle::from_catalog(catalog, DEFAULT_ORACLE_LOGIT)?),
        NliKind::Remote => Arc::new(RemoteNli::from_env()?),
    };
    let templates = match &args.templates {
        Some(dir) => Templates::load_dir(dir)?,
        None => Templates::default(),
    };
    Ok(Providers::new(language, entailment, Arc::new(templates)))
}

fn run(args: RunArgs) -> AnyResult<()> {
    let catalog = open_catalog(&args.catalog)?;
    let providers = build_providers(&args.providers, &catalog)?;
    let config = SessionConfig {
        method: args.method,
        policy: Policy::new(args.policy, args.ucb_k)?,
        observation_mode: args.obs,
        nli: EntailmentConfig::new(args.nli_temp)?,
        include_history: matches!(args.history, OnOff::On),
        max_turns: args.turns,
        top_k: args.top_k,
        seed: args.seed,
        ..SessionConfig::default()
    };
    let responder = match args.responder {
        ResponderKind::Oracle => Responder::Oracle,
        ResponderKind::Llm => Responder::Llm(providers.language.clone()),
    };
    let users = round_robin_users(args.users, catalog.len(), responder);
    let noise = NoiseModel::new(args.noise)?;
    let result = run_experiment(Arc::new(catalog), &users, &config, noise, &providers)?;
    write_outputs(&result, &args.out)?;
    for s in &result.per_turn {
        println!(
            "turn {:>2}  MRR@{} {:.4}  [{:.4}, {:.4}]  n={}",
            s.turn, config.top_k, s.mean, s.ci_lb, s.ci_ub, s.n
        );
    }
    if result.failed_users > 0 {
        eprintln!("{} user(s) failed; see summary.json", result.failed_users);
    }
    Ok(())
}

fn serve(args: ServeArgs) -> AnyResult<()> {
    let mut store = SessionStore::with_demo(args.demo_seed)?;
    for spec in &args.catalogs {
        let (name, source) = spec
            .split_once('=')
            .ok_or_else(|| format!("expected NAME=PATH, got {spec:?}"))?;
        let catalog = open_catalog(source)?;
        let providers = build_providers(&args.providers, &catalog)?;
        store.register_catalog(name, catalog, providers);
    }
    if let Some(dir) = &args.snapshot_dir {
        if dir.is_dir() {
            let n = store.restore_snapshots(dir)?;
            eprintln!("restored {n} session(s) from {}", dir.display());
        }
    }
    let store = Arc::new(store);
    let addr = service::listen_addr()?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        if let Some(dir) = args.snapshot_dir {
            service::spawn_snapshot_task(store.clone(), dir, Duration::from_secs(args.snapshot_secs.max(1)));
        }
        eprintln!("listening on http://{addr}");
        service::serve(store, addr).await
    })?;
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => run(a),
        Command::Serve(a) => serve(a),
    };
    if let Err(e) = res {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
