use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Dot-separated attribute path such as `address2.city`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttrPath(Vec<String>);

impl AttrPath {
    pub fn new<I, S>(segments: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AttrPath(segments.into_iter().map(Into::into).collect())
    }

    pub fn parse(s: &str) -> Self {
        if s.is_empty() {
            return AttrPath(Vec::new());
        }
        AttrPath(s.split('.').map(str::to_string).collect())
    }

    pub fn single(name: impl Into<String>) -> Self {
        AttrPath(vec![name.into()])
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn head(&self) -> Option<&str> {
        self.0.first().map(String::as_str)
    }

    pub fn last(&self) -> Option<&str> {
        self.0.last().map(String::as_str)
    }

    pub fn tail(&self) -> AttrPath {
        AttrPath(self.0.iter().skip(1).cloned().collect())
    }

    pub fn child(&self, name: &str) -> AttrPath {
        let mut v = self.0.clone();
        v.push(name.to_string());
        AttrPath(v)
    }

    pub fn join(&self, other: &AttrPath) -> AttrPath {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        AttrPath(v)
    }

    pub fn starts_with(&self, prefix: &AttrPath) -> bool {
        self.0.len() >= prefix.0.len() && self.0[..prefix.0.len()] == prefix.0[..]
    }

    /// Replaces `prefix` by `replacement` when the path starts with it.
    pub fn rebase(&self, prefix: &AttrPath, replacement: &AttrPath) -> Option<AttrPath> {
        if !self.starts_with(prefix) {
            return None;
        }
        let mut v = replacement.0.clone();
        v.extend(self.0[prefix.0.len()..].iter().cloned());
        Some(AttrPath(v))
    }
}

impl fmt::Display for AttrPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

impl From<&str> for AttrPath {
    fn from(s: &str) -> Self {
        AttrPath::parse(s)
    }
}

impl Serialize for AttrPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AttrPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(AttrPath::parse(&s))
    }
}
