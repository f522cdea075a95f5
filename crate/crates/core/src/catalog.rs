//! Item catalogs: JSONL ingestion and a synthetic binary-code generator.
//!
//! One JSON object per line: `{"id": ..., "description": ..., "features": [...]}`
//! with `features` optional. File order is the canonical item index.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub id: String,
    pub description: String,
    /// Ground-truth features, read only by oracle providers and simulated users.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<String>>,
}

impl Item {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            features: None,
        }
    }

    pub fn with_features<S: Into<String>>(mut self, features: impl IntoIterator<Item = S>) -> Self {
        self.features = Some(features.into_iter().map(Into::into).collect());
        self
    }

    pub fn features(&self) -> &[String] {
        self.features.as_deref().unwrap_or(&[])
    }

    /// Case-insensitive feature membership.
    pub fn has_feature(&self, feature: &str) -> bool {
        let f = feature.trim();
        self.features().iter().any(|x| x.trim().eq_ignore_ascii_case(f))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemCatalog {
    items: Vec<Item>,
}

impl ItemCatalog {
    pub fn new(items: Vec<Item>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Validation("catalog is empty".into()));
        }
        let mut seen = HashSet::new();
        for item in &items {
            if item.description.trim().is_empty() {
                return Err(Error::Validation(format!(
                    "item {:?} has an empty description",
                    item.id
                )));
            }
            if !seen.insert(item.id.as_str()) {
                return Err(Error::Validation(format!("duplicate item id {:?}", item.id)));
            }
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn get(&self, index: usize) -> Option<&Item> {
        self.items.get(index)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.id == id)
    }

    /// Reads JSONL from any reader. Blank lines are skipped.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut items = Vec::new();
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let item: Item = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
            items.push(item);
        }
        Self::new(items)
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for item in &self.items {
            serde_json::to_writer(&mut out, item)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// Loads a JSONL catalog from disk.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<ItemCatalog> {
    let file = std::fs::File::open(path.as_ref())?;
    ItemCatalog::from_reader(file)
}

/// Placeholder description for an item with no features; it yields no aspect.
pub const EMPTY_CODE_DESCRIPTION: &str = "-";

/// `n_items` items with pairwise distinct `n_bits`-bit feature codes over the
/// aspects `f0..f{n_bits-1}`, sorted by code.
///
/// Item `i` has id `item{i}`, its present features as `features`, and those
/// feature names joined by spaces as its description.
pub fn synth_binary_code_catalog(n_items: usize, n_bits: u32, seed: u64) -> Result<ItemCatalog> {
    if n_items == 0 {
        return Err(invalid("n_items must be at least 1"));
    }
    if n_bits >= usize::BITS || (1usize << n_bits) < n_items {
        return Err(invalid(format!(
            "{n_bits} bits cannot encode {n_items} distinct items"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut codes = rand::seq::index::sample(&mut rng, 1usize << n_bits, n_items).into_vec();
    codes.sort_unstable();
    let width = (n_items - 1).to_string().len();
    let items = codes
        .into_iter()
        .enumerate()
        .map(|(i, code)| {
            let features: Vec<String> = (0..n_bits)
                .filter(|b| code >> b & 1 == 1)
                .map(|b| format!("f{b}"))
                .collect();
            let description = if features.is_empty() {
                EMPTY_CODE_DESCRIPTION.to_string()
            } else {
                features.join(" ")
            };
            Item::new(format!("item{i:0width$}"), description).with_features(features)
        })
        .collect();
    ItemCatalog::new(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_single_line() {
        let src = r#"{"id":"a","description":"Animated family film","features":["animated","family"]}"#;
        let c = ItemCatalog::from_reader(src.as_bytes()).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.items()[0].has_feature("Animated"));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let src = "{\"id\":\"a\",\"description\":\"x\"}\n{\"id\":\"a\",\"description\":\"y\"}\n";
        match ItemCatalog::from_reader(src.as_bytes()) {
            Err(Error::Validation(msg)) => assert!(msg.contains("\"a\"")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_description_reports_line() {
        let src = "{\"id\":\"a\",\"description\":\"x\"}\n{\"id\":\"b\"}\n";
        match ItemCatalog::from_reader(src.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_inputs_fail_validation() {
        assert!(matches!(ItemCatalog::from_reader(&b""[..]), Err(Error::Validation(_))));
        assert!(matches!(
            ItemCatalog::from_reader(&b"{\"id\":\"a\",\"description\":\"  \"}"[..]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn reserialization_is_byte_stable() {
        let src = concat!(
            r#"{"id":"a","description":"Animated \"family\" film, 1994","features":["animated","family"]}"#,
            "\n",
            r#"{"id":"b","description":"Line one\nline two"}"#,
            "\n",
            r#"{"id":"c","description":"ünïcode","features":[]}"#,
            "\n",
        );
        let c = ItemCatalog::from_reader(src.as_bytes()).unwrap();
        assert_eq!(c.to_jsonl(), src);
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, "{\"id\":\"x\",\"description\":\"d\"}\n").unwrap();
        assert_eq!(load_catalog(&path).unwrap().len(), 1);
        assert!(matches!(load_catalog(dir.path().join("missing")), Err(Error::Io(_))));
    }

    #[test]
    fn synth_enumerates_small_codes() {
        let c = synth_binary_code_catalog(4, 2, 123).unwrap();
        let feats: Vec<Vec<String>> = c.items().iter().map(|i| i.features().to_vec()).collect();
        assert_eq!(
            feats,
            vec![vec![], vec!["f0".to_string()], vec!["f1".to_string()], vec!["f0".to_string(), "f1".to_string()]]
        );
        assert_eq!(c.items()[0].description, EMPTY_CODE_DESCRIPTION);
        assert_eq!(c.items()[3].description, "f0 f1");
    }

    #[test]
    fn synth_rejects_too_few_bits() {
        assert!(matches!(synth_binary_code_catalog(5, 2, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn synth_is_seed_deterministic() {
        assert_eq!(
            synth_binary_code_catalog(100, 7, 9).unwrap(),
            synth_binary_code_catalog(100, 7, 9).unwrap()
        );
    }

    proptest! {
        #[test]
        fn synth_codes_are_distinct(n in 1usize..128, seed in any::<u64>()) {
            let c = synth_binary_code_catalog(n, 7, seed).unwrap();
            prop_assert_eq!(c.len(), n);
            let codes: HashSet<Vec<String>> = c.items().iter().map(|i| i.features().to_vec()).collect();
            prop_assert_eq!(codes.len(), n);
        }
    }
}
