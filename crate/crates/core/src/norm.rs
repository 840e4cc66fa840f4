//! Norm ontology: the four norm types, their directional semantics and the
//! element slots every extracted norm carries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The kind of normative relationship a norm expresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormType {
    /// The subject commits to the object to ensure the consequent.
    Commitment,
    /// The subject is forbidden by the object from bringing about the consequent.
    Prohibition,
    /// The object authorizes the subject to bring about the consequent.
    Authorization,
    /// The object empowers the subject to bring about the consequent, changing
    /// an existing normative relationship.
    Power,
}

impl NormType {
    pub const ALL: [NormType; 4] = [
        NormType::Commitment,
        NormType::Prohibition,
        NormType::Authorization,
        NormType::Power,
    ];

    /// Lowercase wire name (`"commitment"`, ...).
    pub fn as_str(self) -> &'static str {
        match self {
            NormType::Commitment => "commitment",
            NormType::Prohibition => "prohibition",
            NormType::Authorization => "authorization",
            NormType::Power => "power",
        }
    }

    /// Capitalized label, as a model would write it in a response header.
    pub fn label(self) -> &'static str {
        match self {
            NormType::Commitment => "Commitment",
            NormType::Prohibition => "Prohibition",
            NormType::Authorization => "Authorization",
            NormType::Power => "Power",
        }
    }

    /// Which element slot is bound and which one grants or benefits.
    pub fn direction(self) -> Direction {
        direction_of(self)
    }
}

impl fmt::Display for NormType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown norm type `{0}`")]
pub struct UnknownNormType(pub String);

impl FromStr for NormType {
    type Err = UnknownNormType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lowered = s.trim().to_lowercase();
        NormType::ALL
            .into_iter()
            .find(|t| t.as_str() == lowered)
            .ok_or_else(|| UnknownNormType(s.to_string()))
    }
}

/// One of the four element slots of a norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormElementKind {
    Subject,
    Object,
    Antecedent,
    Consequent,
}

impl NormElementKind {
    pub const ALL: [NormElementKind; 4] = [
        NormElementKind::Subject,
        NormElementKind::Object,
        NormElementKind::Antecedent,
        NormElementKind::Consequent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NormElementKind::Subject => "subject",
            NormElementKind::Object => "object",
            NormElementKind::Antecedent => "antecedent",
            NormElementKind::Consequent => "consequent",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NormElementKind::Subject => "Subject",
            NormElementKind::Object => "Object",
            NormElementKind::Antecedent => "Antecedent",
            NormElementKind::Consequent => "Consequent",
        }
    }
}

impl fmt::Display for NormElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Role assignment for the two party slots of a norm type.
///
/// Commitments and prohibitions bind the subject towards the object. Authorizations
/// and powers are grants: the object authorizes or empowers the subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Duty {
        bound: NormElementKind,
        beneficiary: NormElementKind,
    },
    Grant {
        grantor: NormElementKind,
        grantee: NormElementKind,
    },
}

impl Direction {
    /// The two party slots as `(from, to)`: the party whose position creates the
    /// norm first.
    pub fn roles(self) -> (NormElementKind, NormElementKind) {
        match self {
            Direction::Duty { bound, beneficiary } => (bound, beneficiary),
            Direction::Grant { grantor, grantee } => (grantor, grantee),
        }
    }
}

pub fn direction_of(norm_type: NormType) -> Direction {
    use NormElementKind::{Object, Subject};
    match norm_type {
        NormType::Commitment | NormType::Prohibition => Direction::Duty {
            bound: Subject,
            beneficiary: Object,
        },
        NormType::Authorization | NormType::Power => Direction::Grant {
            grantor: Object,
            grantee: Subject,
        },
    }
}

/// Value of one element slot, kept verbatim (trimmed) from the model output.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ElementValue {
    Present(String),
    /// Left empty by the model. `marker` is the literal text it wrote
    /// (`"N/A"`, `"None explicitly stated"`, ...) or `None` when the field was
    /// missing from the block altogether.
    Empty {
        marker: Option<String>,
    },
}

impl ElementValue {
    pub fn absent() -> Self {
        ElementValue::Empty { marker: None }
    }

    pub fn is_present(&self) -> bool {
        matches!(self, ElementValue::Present(_))
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            ElementValue::Present(t) => Some(t),
            ElementValue::Empty { .. } => None,
        }
    }

    pub fn marker(&self) -> Option<&str> {
        match self {
            ElementValue::Present(_) => None,
            ElementValue::Empty { marker } => marker.as_deref(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ElementStatus {
    Present,
    Empty,
}

#[derive(Serialize, Deserialize)]
struct ElementWire {
    status: ElementStatus,
    text: Option<String>,
    marker: Option<String>,
}

impl Serialize for ElementValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let wire = match self {
            ElementValue::Present(t) => ElementWire {
                status: ElementStatus::Present,
                text: Some(t.clone()),
                marker: None,
            },
            ElementValue::Empty { marker } => ElementWire {
                status: ElementStatus::Empty,
                text: None,
                marker: marker.clone(),
            },
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ElementValue {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = ElementWire::deserialize(deserializer)?;
        match wire.status {
            ElementStatus::Present => {
                let text = wire
                    .text
                    .ok_or_else(|| D::Error::custom("present element without text"))?;
                if text.trim().is_empty() {
                    return Err(D::Error::custom("present element with blank text"));
                }
                Ok(ElementValue::Present(text))
            }
            ElementStatus::Empty => Ok(ElementValue::Empty {
                marker: wire.marker,
            }),
        }
    }
}

/// One extracted normative relationship.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Norm {
    /// 1-based position in the model's response.
    pub ordinal: u32,
    /// Ordered, duplicate-free. More than one entry is a model defect that the
    /// linter reports; it is kept as data here.
    pub types: Vec<NormType>,
    pub subject: ElementValue,
    pub object: ElementValue,
    pub antecedent: ElementValue,
    pub consequent: ElementValue,
    pub clause_id: String,
}

impl Norm {
    pub fn element(&self, kind: NormElementKind) -> &ElementValue {
        match kind {
            NormElementKind::Subject => &self.subject,
            NormElementKind::Object => &self.object,
            NormElementKind::Antecedent => &self.antecedent,
            NormElementKind::Consequent => &self.consequent,
        }
    }

    pub fn element_mut(&mut self, kind: NormElementKind) -> &mut ElementValue {
        match kind {
            NormElementKind::Subject => &mut self.subject,
            NormElementKind::Object => &mut self.object,
            NormElementKind::Antecedent => &mut self.antecedent,
            NormElementKind::Consequent => &mut self.consequent,
        }
    }

    /// `(kind, value)` pairs in slot order.
    pub fn elements(&self) -> impl Iterator<Item = (NormElementKind, &ElementValue)> {
        NormElementKind::ALL
            .into_iter()
            .map(|k| (k, self.element(k)))
    }

    pub fn is_complete(&self) -> bool {
        is_complete(self)
    }
}

/// True iff all four elements are present and the norm has exactly one type.
pub fn is_complete(norm: &Norm) -> bool {
    norm.types.len() == 1 && norm.elements().all(|(_, v)| v.is_present())
}
