//! Bayesian preference elicitation over natural-language item descriptions.
//!
//! The engine keeps an independent Beta belief over every item's utility,
//! chooses which item to ask about with a bandit-style acquisition policy,
//! turns that item into a short yes/no question through a language model, and
//! converts each answer into per-item evidence with a natural-language
//! inference model. See the `examples/` directory for runnable walkthroughs.

pub mod acquisition;
pub mod belief;
pub mod catalog;
pub mod dialogue;
pub mod entailment;
mod error;
pub mod language;
pub mod querygen;
mod retry;
pub mod service;
pub mod simulation;
pub mod special;
pub mod templates;
pub mod text;

pub use acquisition::{rank_top_k, select_item, Policy, PolicyKind, Ranking};
pub use belief::{exact_mixture_mean, BeliefState, BetaParams};
pub use catalog::{load_catalog, synth_binary_code_catalog, Item, ItemCatalog};
pub use dialogue::{Method, ObservationMode, Phase, Providers, Session, SessionConfig};
pub use entailment::{EntailmentConfig, EntailmentProvider, FeatureOracle, RemoteNli};
pub use error::{Error, Result};
pub use language::{LanguageProvider, RemoteChat, StubLm};
pub use querygen::{Answer, Aspect};
pub use simulation::{run_experiment, NoiseModel, SimulatedUser};
pub use templates::Templates;
