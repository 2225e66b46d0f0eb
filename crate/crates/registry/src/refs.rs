//! `category/name` package references.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Samplers,
    Benchmarks,
    Pruners,
    Visualization,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Samplers,
        Category::Benchmarks,
        Category::Pruners,
        Category::Visualization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Samplers => "samplers",
            Category::Benchmarks => "benchmarks",
            Category::Pruners => "pruners",
            Category::Visualization => "visualization",
        }
    }

    /// Whether packages of this category can be instantiated and run.
    pub fn is_executable(self) -> bool {
        matches!(self, Category::Samplers | Category::Benchmarks)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Category::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid package ref {text:?} at position {position}: {reason}")]
pub struct RefError {
    pub text: String,
    /// Byte offset of the offending character.
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackageRef {
    pub category: Category,
    pub name: String,
}

pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

pub fn parse_ref(text: &str) -> Result<PackageRef, RefError> {
    let err = |position: usize, reason: &str| RefError {
        text: text.to_owned(),
        position,
        reason: reason.to_owned(),
    };
    let slash = text
        .find('/')
        .ok_or_else(|| err(text.len(), "expected `category/name`"))?;
    let (category, name) = (&text[..slash], &text[slash + 1..]);
    if let Some(extra) = name.find('/') {
        return Err(err(slash + 1 + extra, "more than one `/`"));
    }
    if category.is_empty() {
        return Err(err(0, "empty category"));
    }
    let category: Category = category.parse().map_err(|_| {
        err(
            0,
            &format!(
                "unknown category {category:?}, expected one of samplers, benchmarks, pruners, visualization"
            ),
        )
    })?;
    if name.is_empty() {
        return Err(err(slash + 1, "empty package name"));
    }
    if let Some((i, c)) = name
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '_'))
    {
        return Err(err(
            slash + 1 + i,
            &format!("character {c:?} not allowed, names use [a-z0-9_]"),
        ));
    }
    Ok(PackageRef {
        category,
        name: name.to_owned(),
    })
}

impl PackageRef {
    pub fn new(category: Category, name: impl Into<String>) -> Result<Self, RefError> {
        parse_ref(&format!("{category}/{}", name.into()))
    }

    /// Path of the package relative to a registry root.
    pub fn registry_path(&self) -> String {
        format!("package/{}/{}", self.category, self.name)
    }
}

impl fmt::Display for PackageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.category, self.name)
    }
}

impl FromStr for PackageRef {
    type Err = RefError;

    fn from_str(s: &str) -> Result<Self, RefError> {
        parse_ref(s)
    }
}

impl Serialize for PackageRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PackageRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_ref(&text).map_err(serde::de::Error::custom)
    }
}
