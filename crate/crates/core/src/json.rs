//! JSON encoding of instances. Rationals are written as integers when whole
//! and as `"a/b"` strings otherwise.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PcsmError, Result};
use crate::instance::Instance;
use crate::oracle::{OracleKind, SetFunction, SubmodularOracle};
use crate::rational::{format_rational, parse_rational, Rational};

/// Serde adapter for a single rational.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Num(pub Rational);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Ok(v) = i64::try_from(*self.0.numer()) {
                return s.serialize_i64(v);
            }
        }
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or a rational string like \"3/4\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(Rational::from_integer(v as i128)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(Rational::from_integer(v as i128)))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                parse_rational(&v.to_string()).map(Num).map_err(E::custom)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                parse_rational(v).map(Num).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

fn nums(v: &[Rational]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

fn rats(v: &[Num]) -> Vec<Rational> {
    v.iter().map(|n| n.0).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveDoc {
    Linear { weights: Vec<Num> },
    Coverage { universe: usize, sets: Vec<Vec<usize>>, weights: Vec<Num> },
    ConcaveOfModular { weights: Vec<Num>, cap: Num },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub n: usize,
    #[serde(default)]
    pub packing: Vec<Vec<Num>>,
    #[serde(default)]
    pub covering: Vec<Vec<Num>>,
    #[serde(default)]
    pub pack_bound: Vec<Num>,
    #[serde(default)]
    pub cover_bound: Vec<Num>,
    pub objective: ObjectiveDoc,
}

impl From<&Instance> for InstanceDoc {
    fn from(inst: &Instance) -> Self {
        let objective = match inst.objective.kind() {
            OracleKind::Linear { weights } => ObjectiveDoc::Linear { weights: nums(weights) },
            OracleKind::Coverage { universe, sets, weights } => {
                ObjectiveDoc::Coverage { universe: *universe, sets: sets.clone(), weights: nums(weights) }
            }
            OracleKind::ConcaveOfModular { weights, cap } => {
                ObjectiveDoc::ConcaveOfModular { weights: nums(weights), cap: Num(*cap) }
            }
        };
        InstanceDoc {
            n: inst.n,
            packing: inst.packing.iter().map(|r| nums(r)).collect(),
            covering: inst.covering.iter().map(|r| nums(r)).collect(),
            pack_bound: nums(&inst.pack_bound),
            cover_bound: nums(&inst.cover_bound),
            objective,
        }
    }
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = PcsmError;

    fn try_from(doc: InstanceDoc) -> Result<Instance> {
        let objective = match doc.objective {
            ObjectiveDoc::Linear { weights } => SubmodularOracle::linear(rats(&weights))?,
            ObjectiveDoc::Coverage { universe, sets, weights } => {
                SubmodularOracle::coverage(universe, sets, rats(&weights))?
            }
            ObjectiveDoc::ConcaveOfModular { weights, cap } => {
                SubmodularOracle::concave_of_modular(rats(&weights), cap.0)?
            }
        };
        if objective.ground_size() != doc.n {
            return Err(PcsmError::InvalidInstance(format!(
                "n is {} but the objective covers {} elements",
                doc.n,
                objective.ground_size()
            )));
        }
        Instance::new(
            doc.packing.iter().map(|r| rats(r)).collect(),
            doc.covering.iter().map(|r| rats(r)).collect(),
            rats(&doc.pack_bound),
            rats(&doc.cover_bound),
            objective,
        )
    }
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    let doc: InstanceDoc = serde_json::from_str(text)?;
    Instance::try_from(doc)
}

/// Canonical compact encoding; equal instances give equal bytes.
pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string(&InstanceDoc::from(inst)).expect("instance serializes")
}

pub fn instance_to_json_pretty(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceDoc::from(inst)).expect("instance serializes")
}

/// Hex SHA-256 of the canonical encoding.
pub fn instance_digest(inst: &Instance) -> String {
    hex::encode(Sha256::digest(instance_to_json(inst).as_bytes()))
}
