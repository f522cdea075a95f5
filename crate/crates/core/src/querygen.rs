//! Query generation: aspect extraction, yes/no query wording, preference
//! descriptions, and the single-model (MonoLLM) baseline.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::acquisition::{RankedItem, Ranking};
use crate::catalog::ItemCatalog;
use crate::error::{invalid, Error, Result};
use crate::language::LanguageProvider;
use crate::templates::{render, Templates};
use crate::text::{loose_key, tokens, NEGATION_MARKER};

pub const MAX_ASPECT_WORDS: usize = 3;
/// Largest catalog the baseline will put in a prompt.
pub const DEFAULT_MONO_ITEM_CAP: usize = 100;

/// A short phrase (at most three words) describing an item.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Aspect(String);

impl Aspect {
    pub fn new(text: impl AsRef<str>) -> Result<Self> {
        let words: Vec<&str> = text.as_ref().split_whitespace().collect();
        if words.is_empty() {
            return Err(invalid("aspect is empty"));
        }
        if words.len() > MAX_ASPECT_WORDS {
            return Err(invalid(format!(
                "aspect {:?} has more than {MAX_ASPECT_WORDS} words",
                text.as_ref()
            )));
        }
        Ok(Self(words.join(" ")))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn key(&self) -> String {
        self.0.to_lowercase()
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Aspect {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::new(s)
    }
}

impl From<Aspect> for String {
    fn from(a: Aspect) -> Self {
        a.0
    }
}

/// A user's answer to a yes/no query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Answer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yes" => Ok(Answer::Yes),
            "no" => Ok(Answer::No),
            other => Err(invalid(format!("answer must be \"yes\" or \"no\", got {other:?}"))),
        }
    }
}

/// The aspect, or the aspect behind the negation marker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PreferenceDescription(String);

impl PreferenceDescription {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PreferenceDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn build_preference(aspect: &Aspect, answer: Answer) -> PreferenceDescription {
    match answer {
        Answer::Yes => PreferenceDescription(aspect.0.clone()),
        Answer::No => PreferenceDescription(format!("{NEGATION_MARKER}{}", aspect.0)),
    }
}

/// Renders the aspect-extraction prompt. History is only included when
/// `include_history` is set.
pub fn aspect_prompt(
    templates: &Templates,
    description: &str,
    history: &[Aspect],
    include_history: bool,
) -> String {
    let block = if include_history {
        let list: Vec<String> = history.iter().map(|a| format!("- {a}")).collect();
        render(&templates.aspect_history, &[("aspects", &list.join("\n"))])
    } else {
        String::new()
    };
    render(
        &templates.aspect,
        &[("description", description.trim()), ("history", &block)],
    )
}

fn to_elicitation(e: Error) -> Error {
    match e {
        Error::Transport { message, .. } => Error::Elicitation(message),
        other => other,
    }
}

fn clean_reply(text: &str) -> &str {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let line = line
        .strip_prefix("Aspect:")
        .or_else(|| line.strip_prefix("aspect:"))
        .unwrap_or(line)
        .trim();
    line.trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*'))
        .trim_end_matches(['.', '!'])
        .trim()
}

/// Asks `provider` for a fresh aspect of the item.
///
/// With `include_history` on, the returned aspect never matches (ignoring
/// case) an entry of `history`: a duplicate or malformed reply is re-prompted
/// once, then replaced by the first unused description token. With it off,
/// the history is neither shown to the provider nor enforced.
pub fn extract_aspect(
    provider: &dyn LanguageProvider,
    templates: &Templates,
    description: &str,
    history: &[Aspect],
    include_history: bool,
) -> Result<Aspect> {
    if description.trim().is_empty() {
        return Err(invalid("item description is empty"));
    }
    let used: HashSet<String> = if include_history {
        history.iter().map(Aspect::key).collect()
    } else {
        HashSet::new()
    };
    let Some(fallback) = tokens(description).find(|t| !used.contains(t)) else {
        return Err(Error::ExhaustedAspects);
    };
    let prompt = aspect_prompt(templates, description, history, include_history);
    for _ in 0..2 {
        let reply = provider.complete(&prompt).map_err(to_elicitation)?;
        if let Ok(aspect) = Aspect::new(clean_reply(&reply)) {
            if !used.contains(&aspect.key()) {
                return Ok(aspect);
            }
        }
    }
    Aspect::new(fallback)
}

pub fn query_prompt(templates: &Templates, aspect: &Aspect) -> String {
    render(&templates.query, &[("aspect", aspect.as_str())])
}

/// Wording of the yes/no question about `aspect`.
pub fn generate_query(
    provider: &dyn LanguageProvider,
    templates: &Templates,
    aspect: &Aspect,
) -> Result<String> {
    let prompt = query_prompt(templates, aspect);
    for _ in 0..2 {
        let reply = provider.complete(&prompt).map_err(to_elicitation)?;
        let line = reply.lines().map(str::trim).find(|l| !l.is_empty());
        if let Some(q) = line {
            return Ok(q.trim_matches('"').to_string());
        }
    }
    Err(Error::Elicitation(format!("empty query for aspect {aspect:?}")))
}

/// One question/answer pair of a baseline dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub query: String,
    pub answer: Answer,
}

fn items_block(catalog: &ItemCatalog) -> String {
    catalog
        .items()
        .iter()
        .map(|i| {
            let desc: Vec<&str> = i.description.split_whitespace().collect();
            format!("- {}: {}", i.id, desc.join(" "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn dialogue_block(history: &[Exchange]) -> String {
    history
        .iter()
        .map(|e| format!("Q: {}\nA: {}", e.query, e.answer))
        .collect::<Vec<_>>()
        .join("\n")
}

fn check_cap(catalog: &ItemCatalog, cap: usize) -> Result<()> {
    if catalog.len() > cap {
        return Err(invalid(format!(
            "catalog of {} items exceeds the baseline cap of {cap}",
            catalog.len()
        )));
    }
    Ok(())
}

fn to_baseline(e: Error) -> Error {
    match e {
        Error::InvalidArgument(_) | Error::Baseline(_) => e,
        other => Error::Baseline(other.to_string()),
    }
}

pub fn mono_query_prompt(templates: &Templates, catalog: &ItemCatalog, history: &[Exchange]) -> String {
    render(
        &templates.mono_query,
        &[("items", &items_block(catalog)), ("dialogue", &dialogue_block(history))],
    )
}

pub fn mono_recommend_prompt(
    templates: &Templates,
    catalog: &ItemCatalog,
    history: &[Exchange],
    k: usize,
) -> String {
    render(
        &templates.mono_recommend,
        &[
            ("items", &items_block(catalog)),
            ("dialogue", &dialogue_block(history)),
            ("k", &k.to_string()),
        ],
    )
}

/// Baseline: the model sees every description plus the dialogue and asks
/// the next question itself.
pub fn mono_generate_query(
    provider: &dyn LanguageProvider,
    templates: &Templates,
    catalog: &ItemCatalog,
    history: &[Exchange],
    item_cap: usize,
) -> Result<String> {
    check_cap(catalog, item_cap)?;
    let reply = provider
        .complete(&mono_query_prompt(templates, catalog, history))
        .map_err(to_baseline)?;
    reply
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(str::to_string)
        .ok_or_else(|| Error::Baseline("empty baseline query".into()))
}

/// Splits a model reply into candidate item names.
fn parse_names(reply: &str) -> Vec<String> {
    let trimmed = reply.trim();
    if trimmed.starts_with('[') {
        if let Ok(names) = serde_json::from_str::<Vec<String>>(trimmed) {
            return names;
        }
    }
    trimmed
        .lines()
        .map(|l| {
            let l = l.trim();
            let l = l.trim_start_matches(|c: char| c.is_ascii_digit());
            let l = l.trim_start_matches(['.', ')', '-', '*', ' ']);
            l.trim_matches(|c: char| matches!(c, '"' | '\'' | '`')).trim().to_string()
        })
        .filter(|l| !l.is_empty())
        .collect()
}

/// Resolves a returned name to a catalog index: exact id, exact description,
/// then the same two comparisons ignoring case and punctuation.
fn resolve(catalog: &ItemCatalog, name: &str) -> Option<usize> {
    let items = catalog.items();
    let candidates = [Some(name), name.split_once(':').map(|(head, _)| head.trim())];
    for cand in candidates.into_iter().flatten() {
        if let Some(i) = items.iter().position(|it| it.id == cand) {
            return Some(i);
        }
        if let Some(i) = items.iter().position(|it| it.description.trim() == cand) {
            return Some(i);
        }
        let key = loose_key(cand);
        if key.is_empty() {
            continue;
        }
        if let Some(i) = items.iter().position(|it| loose_key(&it.id) == key) {
            return Some(i);
        }
        if let Some(i) = items.iter().position(|it| loose_key(&it.description) == key) {
            return Some(i);
        }
    }
    None
}

/// Baseline recommendation list of exactly `min(k, N)` distinct items.
///
/// Resolved names come first in the model's order (score `1/rank`); the list is
/// padded with the remaining items in catalog order (score 0). An empty reply
/// is a baseline error.
pub fn mono_recommend(
    provider: &dyn LanguageProvider,
    templates: &Templates,
    catalog: &ItemCatalog,
    history: &[Exchange],
    k: usize,
    item_cap: usize,
) -> Result<Ranking> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    check_cap(catalog, item_cap)?;
    let reply = provider
        .complete(&mono_recommend_prompt(templates, catalog, history, k))
        .map_err(to_baseline)?;
    let names = parse_names(&reply);
    if names.is_empty() {
        return Err(Error::Baseline("could not parse any item names".into()));
    }
    Ok(resolve_ranking(catalog, &names, k))
}

pub(crate) fn resolve_ranking(catalog: &ItemCatalog, names: &[String], k: usize) -> Ranking {
    let want = k.min(catalog.len());
    let mut seen = HashSet::new();
    let mut entries = Vec::with_capacity(want);
    for name in names {
        if let Some(i) = resolve(catalog, name) {
            if seen.insert(i) {
                entries.push(RankedItem {
                    index: i,
                    score: 1.0 / (entries.len() + 1) as f64,
                });
            }
        }
    }
    entries.truncate(want);
    for i in 0..catalog.len() {
        if entries.len() >= want {
            break;
        }
        if seen.insert(i) {
            entries.push(RankedItem { index: i, score: 0.0 });
        }
    }
    Ranking { entries }
}
