use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const UNK_TAG_ID: u32 = 0;

const PAD: &str = "<pad>";
const UNK: &str = "<unk>";
const UNK_TAG: &str = "<unk_tag>";

/// Dense id maps for words, HTML tags and field names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    word_ids: HashMap<String, u32>,
    tags: Vec<String>,
    tag_ids: HashMap<String, u32>,
    fields: Vec<String>,
    field_ids: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    reserved: Reserved,
    words: BTreeMap<String, u32>,
    tags: BTreeMap<String, u32>,
    fields: BTreeMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct Reserved {
    pad_word: u32,
    unk_word: u32,
    unk_tag: u32,
    note: String,
}

fn index(items: &[String]) -> HashMap<String, u32> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as u32))
        .collect()
}

fn dense(map: BTreeMap<String, u32>, kind: &'static str) -> Result<Vec<String>> {
    let mut out = vec![None; map.len()];
    for (s, id) in map {
        let slot = out.get_mut(id as usize).ok_or(Error::Vocab {
            kind,
            id: id as usize,
            size: 0,
        })?;
        if slot.replace(s).is_some() {
            return Err(Error::Config(format!("duplicate {kind} id {id}")));
        }
    }
    out.into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Config(format!("{kind} ids are not dense")))
}

impl Vocab {
    /// Builds a vocabulary; reserved entries are prepended and duplicates
    /// keep their first position.
    pub fn new<W, T, F>(words: W, tags: T, fields: F) -> Vocab
    where
        W: IntoIterator<Item = String>,
        T: IntoIterator<Item = String>,
        F: IntoIterator<Item = String>,
    {
        fn dedup(head: &[&str], rest: impl IntoIterator<Item = String>) -> Vec<String> {
            let mut seen = std::collections::HashSet::new();
            head.iter()
                .map(|s| s.to_string())
                .chain(rest)
                .filter(|s| seen.insert(s.clone()))
                .collect()
        }
        let words = dedup(&[PAD, UNK], words);
        let tags = dedup(&[UNK_TAG], tags);
        let fields = dedup(&[], fields);
        Vocab {
            word_ids: index(&words),
            tag_ids: index(&tags),
            field_ids: index(&fields),
            words,
            tags,
            fields,
        }
    }

    /// Keeps every existing id and appends the entries of `other` not yet present.
    pub fn extend(&self, other: &Vocab) -> Vocab {
        Vocab::new(
            self.words.iter().chain(&other.words).cloned(),
            self.tags.iter().chain(&other.tags).cloned(),
            self.fields.iter().chain(&other.fields).cloned(),
        )
    }

    pub fn word_id(&self, word: &str) -> u32 {
        self.word_ids.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn tag_id(&self, tag: &str) -> u32 {
        self.tag_ids.get(tag).copied().unwrap_or(UNK_TAG_ID)
    }

    pub fn field_id(&self, field: &str) -> Result<u32> {
        self.field_ids
            .get(field)
            .copied()
            .ok_or_else(|| Error::UnknownField(field.to_string()))
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.word_ids.contains_key(word)
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn field(&self, id: u32) -> Option<&str> {
        self.fields.get(id as usize).map(String::as_str)
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn n_fields(&self) -> usize {
        self.fields.len()
    }

    fn to_file(&self) -> VocabFile {
        let map = |items: &[String]| {
            items
                .iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), i as u32))
                .collect()
        };
        VocabFile {
            reserved: Reserved {
                pad_word: PAD_ID,
                unk_word: UNK_ID,
                unk_tag: UNK_TAG_ID,
                note: format!(
                    "word ids {PAD_ID} ({PAD}) and {UNK_ID} ({UNK}) and tag id {UNK_TAG_ID} ({UNK_TAG}) are reserved"
                ),
            },
            words: map(&self.words),
            tags: map(&self.tags),
            fields: map(&self.fields),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("vocab serializes")
    }

    pub fn from_json(text: &str) -> Result<Vocab> {
        let file: VocabFile = serde_json::from_str(text)?;
        let words = dense(file.words, "word")?;
        let tags = dense(file.tags, "tag")?;
        let fields = dense(file.fields, "field")?;
        if words.get(PAD_ID as usize).map(String::as_str) != Some(PAD)
            || words.get(UNK_ID as usize).map(String::as_str) != Some(UNK)
            || tags.get(UNK_TAG_ID as usize).map(String::as_str) != Some(UNK_TAG)
        {
            return Err(Error::Config("vocabulary lacks reserved entries".into()));
        }
        Ok(Vocab {
            word_ids: index(&words),
            tag_ids: index(&tags),
            field_ids: index(&fields),
            words,
            tags,
            fields,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vocab> {
        Vocab::from_json(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 over the canonical JSON form; checkpoints record it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&self.to_file()).expect("vocab serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
