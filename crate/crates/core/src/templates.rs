//! Prompt templates.
//!
//! Defaults are compiled in from `templates/*.txt`; [`Templates::load_dir`]
//! overrides any subset from a directory so an experiment can pin its exact
//! wording. Placeholders are `{name}` and are substituted in a single pass, so
//! braces inside substituted values are left alone.

use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub aspect: String,
    pub aspect_history: String,
    pub query: String,
    pub mono_query: String,
    pub mono_recommend: String,
    pub user_response: String,
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            aspect: include_str!("../templates/aspect.txt").to_string(),
            aspect_history: include_str!("../templates/aspect_history.txt").to_string(),
            query: include_str!("../templates/query.txt").to_string(),
            mono_query: include_str!("../templates/mono_query.txt").to_string(),
            mono_recommend: include_str!("../templates/mono_recommend.txt").to_string(),
            user_response: include_str!("../templates/user_response.txt").to_string(),
        }
    }
}

impl Templates {
    /// Defaults, with `<name>.txt` files found in `dir` taking precedence.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut t = Self::default();
        for (name, slot) in [
            ("aspect", &mut t.aspect),
            ("aspect_history", &mut t.aspect_history),
            ("query", &mut t.query),
            ("mono_query", &mut t.mono_query),
            ("mono_recommend", &mut t.mono_recommend),
            ("user_response", &mut t.user_response),
        ] {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                *slot = std::fs::read_to_string(path)?;
            }
        }
        Ok(t)
    }
}

/// Replaces each `{key}` in `template` with its value. Unknown placeholders
/// are kept verbatim.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}').and_then(|close| {
            let key = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| (close, *v))
        }) {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
