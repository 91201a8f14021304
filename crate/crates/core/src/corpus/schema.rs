use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a field's value is drawn and presented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Name,
    Description,
    Date,
    Location,
    Brand,
    Price,
    Color,
    Genre,
    Duration,
    Person,
    Cast,
    ReleaseDate,
}

impl ValueKind {
    /// Label words that may precede the value; empty for unlabeled kinds.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            ValueKind::Name | ValueKind::Description => &[],
            ValueKind::Date => &["Date", "When"],
            ValueKind::Location => &["Where", "Venue", "Location"],
            ValueKind::Brand => &["Brand", "Maker"],
            ValueKind::Price => &["Price", "Our price"],
            ValueKind::Color => &["Color", "Colour"],
            ValueKind::Genre => &["Genre", "Category"],
            ValueKind::Duration => &["Runtime", "Duration"],
            ValueKind::Person => &["Director", "Directed by"],
            ValueKind::Cast => &["Starring", "Cast"],
            ValueKind::ReleaseDate => &["Released", "Release date"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSchema {
    pub domain: String,
    pub fields: Vec<FieldSpec>,
}

impl FieldSchema {
    pub fn new(domain: &str, fields: &[(&str, ValueKind)]) -> Result<FieldSchema> {
        let mut seen = std::collections::HashSet::new();
        for (name, _) in fields {
            if !seen.insert(*name) {
                return Err(Error::Config(format!(
                    "duplicate field {name:?} in domain {domain:?}"
                )));
            }
        }
        Ok(FieldSchema {
            domain: domain.to_string(),
            fields: fields
                .iter()
                .map(|&(name, kind)| FieldSpec {
                    name: name.to_string(),
                    kind,
                })
                .collect(),
        })
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }

    pub fn events() -> FieldSchema {
        use ValueKind::*;
        FieldSchema::new(
            "events",
            &[
                ("name", Name),
                ("description", Description),
                ("date", Date),
                ("location", Location),
            ],
        )
        .expect("static schema")
    }

    pub fn products() -> FieldSchema {
        use ValueKind::*;
        FieldSchema::new(
            "products",
            &[
                ("name", Name),
                ("description", Description),
                ("brand", Brand),
                ("price", Price),
                ("color", Color),
            ],
        )
        .expect("static schema")
    }

    pub fn movies() -> FieldSchema {
        use ValueKind::*;
        FieldSchema::new(
            "movies",
            &[
                ("name", Name),
                ("description", Description),
                ("genre", Genre),
                ("duration", Duration),
                ("director", Person),
                ("actor", Cast),
                ("published_date", ReleaseDate),
            ],
        )
        .expect("static schema")
    }

    pub fn by_domain(domain: &str) -> Result<FieldSchema> {
        match domain {
            "events" => Ok(FieldSchema::events()),
            "products" => Ok(FieldSchema::products()),
            "movies" => Ok(FieldSchema::movies()),
            other => Err(Error::Config(format!("unknown domain {other:?}"))),
        }
    }
}

pub const DOMAINS: [&str; 3] = ["events", "products", "movies"];
