//! JSON instance files.
//!
//! Every instance is an object with a `"type"` tag and a strictly checked
//! payload. Schema errors carry a JSON-pointer path to the offending value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::cb_spaces::{IntervalSet, IntervalSpace};
use crate::certificates::{Mode, OrderCode, RankCertificate};
use crate::gamma::{CellRelation, FinitePointSpace, RelationDomain};
use crate::ordinal::Ordinal;
use crate::subshift::Subshift;

pub const INSTANCE_TYPES: [&str; 5] = ["sft", "ordinal_space", "finite_relation", "order_code", "certificate"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("at {pointer}: {message}")]
    Schema { pointer: String, message: String },
}

impl InstanceError {
    fn at(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        InstanceError::Schema {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }

    /// JSON pointer of a schema error (`""` is the document root).
    pub fn pointer(&self) -> Option<&str> {
        match self {
            InstanceError::Schema { pointer, .. } => Some(pointer),
            InstanceError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftInstance {
    pub alphabet: Vec<String>,
    pub forbidden: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OperatorName {
    #[default]
    #[serde(rename = "cb")]
    Cb,
    #[serde(rename = "succ_expansion")]
    SuccExpansion,
}

/// `[0, gamma]` with an operator; `start` is the starting interval endpoint
/// for `succ_expansion` (default 1). CB always starts from the whole space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdinalSpaceInstance {
    pub gamma: Ordinal,
    #[serde(default)]
    pub operator: OperatorName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Ordinal>,
}

impl OrdinalSpaceInstance {
    pub fn start_interval(&self) -> IntervalSet {
        IntervalSet {
            gamma: self.gamma.clone(),
            endpoint: Some(self.start.clone().unwrap_or_else(Ordinal::one)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteRelationInstance {
    pub points: Vec<String>,
    pub pairs: Vec<(String, String)>,
}

impl FiniteRelationInstance {
    pub fn space(&self) -> Result<FinitePointSpace, InstanceError> {
        FinitePointSpace::new(self.points.clone()).map_err(|e| InstanceError::at("/points", e))
    }

    pub fn relation(&self, space: &FinitePointSpace) -> Result<CellRelation, InstanceError> {
        relation_at(space, &self.pairs, "/pairs")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderCodeInstance {
    pub elements: Vec<u64>,
    /// Elements in increasing order.
    pub order: Vec<u64>,
}

impl OrderCodeInstance {
    pub fn code(&self) -> OrderCode {
        OrderCode::from_listing(&self.elements, &self.order)
    }

    fn check(&self, pointer: &str) -> Result<(), InstanceError> {
        for (i, m) in self.order.iter().enumerate() {
            if !self.elements.contains(m) {
                return Err(InstanceError::at(
                    format!("{pointer}/order/{i}"),
                    format!("{m} is not listed in elements"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCertificate {
    mode: Mode,
    order: OrderCodeInstance,
    target: Value,
    assignment: BTreeMap<String, Value>,
}

/// A certificate whose target resolved to a concrete space and set.
#[derive(Debug, Clone)]
pub enum CertificateInstance {
    /// Intervals of `[0, gamma]` under `succ_expansion`.
    Interval {
        space: OrdinalSpaceInstance,
        cert: RankCertificate<IntervalSet>,
    },
    /// Relations on named points under Γ.
    Relation {
        space: FinitePointSpace,
        cert: RankCertificate<CellRelation>,
    },
}

impl CertificateInstance {
    /// Order code of the certificate.
    pub fn order(&self) -> &OrderCode {
        match self {
            CertificateInstance::Interval { cert, .. } => &cert.order,
            CertificateInstance::Relation { cert, .. } => &cert.order,
        }
    }

    /// Serializes back to the certificate JSON layout with an inline target.
    pub fn to_json(&self) -> Value {
        fn order_json(code: &OrderCode) -> Value {
            let listed: Vec<u64> = code
                .elements_in_order()
                .unwrap_or_else(|_| code.support().into_iter().collect());
            json!({ "elements": code.support().into_iter().collect::<Vec<_>>(), "order": listed })
        }
        match self {
            CertificateInstance::Interval { space, cert } => {
                let mut target = space.clone();
                target.operator = OperatorName::SuccExpansion;
                target.start = cert.target.endpoint.clone();
                let mut tv = serde_json::to_value(&target).expect("plain data");
                tv.as_object_mut()
                    .expect("struct")
                    .insert("type".into(), json!("ordinal_space"));
                let assignment: Map<String, Value> = cert
                    .assignment
                    .iter()
                    .map(|(m, h)| (m.to_string(), interval_json(h)))
                    .collect();
                json!({
                    "type": "certificate",
                    "mode": cert.mode,
                    "order": order_json(&cert.order),
                    "target": tv,
                    "assignment": assignment,
                })
            }
            CertificateInstance::Relation { space, cert } => {
                let target = json!({
                    "type": "finite_relation",
                    "points": space.cells(),
                    "pairs": cert.target.named_pairs(space),
                });
                let assignment: Map<String, Value> = cert
                    .assignment
                    .iter()
                    .map(|(m, h)| (m.to_string(), json!(h.named_pairs(space))))
                    .collect();
                json!({
                    "type": "certificate",
                    "mode": cert.mode,
                    "order": order_json(&cert.order),
                    "target": target,
                    "assignment": assignment,
                })
            }
        }
    }
}

/// `null` for the empty set, otherwise the endpoint string.
pub fn interval_json(s: &IntervalSet) -> Value {
    match &s.endpoint {
        Some(e) => json!(e.to_string()),
        None => Value::Null,
    }
}

#[derive(Debug, Clone)]
pub enum Instance {
    Sft(SftInstance),
    OrdinalSpace(OrdinalSpaceInstance),
    FiniteRelation(FiniteRelationInstance),
    OrderCode(OrderCodeInstance),
    Certificate(CertificateInstance),
}

impl Instance {
    pub fn type_name(&self) -> &'static str {
        match self {
            Instance::Sft(_) => "sft",
            Instance::OrdinalSpace(_) => "ordinal_space",
            Instance::FiniteRelation(_) => "finite_relation",
            Instance::OrderCode(_) => "order_code",
            Instance::Certificate(_) => "certificate",
        }
    }
}

/// Reads and parses an instance file; relative certificate target paths
/// resolve against the file's directory.
pub fn load_instance(path: &Path) -> Result<Instance, InstanceError> {
    let text = std::fs::read_to_string(path).map_err(|e| InstanceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_instance(&text, path.parent())
}

pub fn parse_instance(text: &str, base: Option<&Path>) -> Result<Instance, InstanceError> {
    let value: Value = serde_json::from_str(text).map_err(|e| InstanceError::at("", e))?;
    from_value(value, "", base, 0)
}

/// Parses an `sft` instance and builds its subshift.
pub fn parse_subshift(text: &str) -> Result<Subshift, InstanceError> {
    match parse_instance(text, None)? {
        Instance::Sft(sft) => build_subshift(&sft),
        other => Err(InstanceError::at(
            "/type",
            format!("expected sft, found {}", other.type_name()),
        )),
    }
}

pub fn build_subshift(sft: &SftInstance) -> Result<Subshift, InstanceError> {
    Subshift::from_strs(
        &sft.alphabet.iter().map(String::as_str).collect::<Vec<_>>(),
        &sft.forbidden.iter().map(String::as_str).collect::<Vec<_>>(),
    )
    .map_err(|e| InstanceError::at("", e))
}

const MAX_TARGET_DEPTH: usize = 8;

fn from_value(value: Value, pointer: &str, base: Option<&Path>, depth: usize) -> Result<Instance, InstanceError> {
    let Value::Object(mut map) = value else {
        return Err(InstanceError::at(pointer, "instance must be a JSON object"));
    };
    let tag = match map.remove("type") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(InstanceError::at(format!("{pointer}/type"), "type must be a string")),
        None => return Err(InstanceError::at(pointer, "missing field `type`")),
    };
    let payload = Value::Object(map);
    Ok(match tag.as_str() {
        "sft" => Instance::Sft(payload_as(payload, pointer)?),
        "ordinal_space" => {
            let space: OrdinalSpaceInstance = payload_as(payload, pointer)?;
            if space.operator == OperatorName::Cb && space.start.is_some() {
                return Err(InstanceError::at(
                    format!("{pointer}/start"),
                    "`start` applies to succ_expansion only",
                ));
            }
            if let Some(s) = &space.start {
                if s > &space.gamma {
                    return Err(InstanceError::at(format!("{pointer}/start"), format!("{s} exceeds gamma")));
                }
            }
            Instance::OrdinalSpace(space)
        }
        "finite_relation" => {
            let rel: FiniteRelationInstance = payload_as(payload, pointer)?;
            let space = rel.space().map_err(|e| reroot(e, pointer))?;
            rel.relation(&space).map_err(|e| reroot(e, pointer))?;
            Instance::FiniteRelation(rel)
        }
        "order_code" => {
            let code: OrderCodeInstance = payload_as(payload, pointer)?;
            code.check(pointer)?;
            Instance::OrderCode(code)
        }
        "certificate" => {
            let raw: RawCertificate = payload_as(payload, pointer)?;
            Instance::Certificate(resolve_certificate(raw, pointer, base, depth)?)
        }
        other => {
            return Err(InstanceError::at(
                format!("{pointer}/type"),
                format!("unknown type `{other}`, expected one of {}", INSTANCE_TYPES.join(", ")),
            ))
        }
    })
}

fn reroot(e: InstanceError, prefix: &str) -> InstanceError {
    match e {
        InstanceError::Schema { pointer, message } => InstanceError::Schema {
            pointer: format!("{prefix}{pointer}"),
            message,
        },
        io => io,
    }
}

fn payload_as<T: DeserializeOwned>(payload: Value, pointer: &str) -> Result<T, InstanceError> {
    serde_path_to_error::deserialize(payload).map_err(|e| {
        let mut p = pointer.to_string();
        for seg in e.path().iter() {
            match seg {
                serde_path_to_error::Segment::Seq { index } => p.push_str(&format!("/{index}")),
                serde_path_to_error::Segment::Map { key } => {
                    p.push('/');
                    p.push_str(&key.replace('~', "~0").replace('/', "~1"));
                }
                serde_path_to_error::Segment::Enum { .. } | serde_path_to_error::Segment::Unknown => {}
            }
        }
        InstanceError::at(p, e.into_inner())
    })
}

fn relation_at(space: &FinitePointSpace, pairs: &[(String, String)], pointer: &str) -> Result<CellRelation, InstanceError> {
    for (i, (a, b)) in pairs.iter().enumerate() {
        for (j, name) in [a, b].into_iter().enumerate() {
            space
                .index_of(name)
                .map_err(|e| InstanceError::at(format!("{pointer}/{i}/{j}"), e))?;
        }
    }
    space.relation(pairs).map_err(|e| InstanceError::at(pointer, e))
}

fn resolve_certificate(
    raw: RawCertificate,
    pointer: &str,
    base: Option<&Path>,
    depth: usize,
) -> Result<CertificateInstance, InstanceError> {
    raw.order.check(pointer)?;
    let target_ptr = format!("{pointer}/target");
    if depth >= MAX_TARGET_DEPTH {
        return Err(InstanceError::at(target_ptr, "target references nest too deeply"));
    }
    let target = match raw.target {
        Value::String(rel) => {
            let path: PathBuf = base.map_or_else(|| PathBuf::from(&rel), |b| b.join(&rel));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| InstanceError::at(&target_ptr, format!("cannot read {}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| InstanceError::at(&target_ptr, format!("{}: {e}", path.display())))?;
            from_value(value, "", path.parent(), depth + 1)
                .map_err(|e| InstanceError::at(&target_ptr, format!("{}: {e}", path.display())))?
        }
        v @ Value::Object(_) => from_value(v, &target_ptr, base, depth + 1)?,
        _ => return Err(InstanceError::at(target_ptr, "target must be an instance object or a file path")),
    };
    let order = raw.order.code();
    let mut keyed = BTreeMap::new();
    for (key, v) in raw.assignment {
        let m: u64 = key
            .parse()
            .map_err(|_| InstanceError::at(format!("{pointer}/assignment/{key}"), "key must be a natural number"))?;
        keyed.insert(m, (key, v));
    }
    match target {
        Instance::OrdinalSpace(space) => {
            if space.operator != OperatorName::SuccExpansion {
                return Err(InstanceError::at(
                    format!("{target_ptr}/operator"),
                    "certificates need an expansion; use succ_expansion",
                ));
            }
            let mut assignment = BTreeMap::new();
            for (m, (key, v)) in keyed {
                let p = format!("{pointer}/assignment/{key}");
                let endpoint: Option<Ordinal> = payload_as(v, &p)?;
                if let Some(e) = &endpoint {
                    if e > &space.gamma {
                        return Err(InstanceError::at(p, format!("{e} exceeds gamma {}", space.gamma)));
                    }
                }
                assignment.insert(
                    m,
                    IntervalSet {
                        gamma: space.gamma.clone(),
                        endpoint,
                    },
                );
            }
            let cert = RankCertificate {
                order,
                target: space.start_interval(),
                assignment,
                mode: raw.mode,
            };
            Ok(CertificateInstance::Interval { space, cert })
        }
        Instance::FiniteRelation(rel) => {
            let space = rel.space().map_err(|e| reroot(e, &target_ptr))?;
            let target = rel.relation(&space).map_err(|e| reroot(e, &target_ptr))?;
            let mut assignment = BTreeMap::new();
            for (m, (key, v)) in keyed {
                let p = format!("{pointer}/assignment/{key}");
                let pairs: Vec<(String, String)> = payload_as(v, &p)?;
                assignment.insert(m, relation_at(&space, &pairs, &p)?);
            }
            let cert = RankCertificate {
                order,
                target,
                assignment,
                mode: raw.mode,
            };
            Ok(CertificateInstance::Relation { space, cert })
        }
        other => Err(InstanceError::at(
            format!("{target_ptr}/type"),
            format!("certificate target cannot be {}", other.type_name()),
        )),
    }
}

/// The lattice a relation certificate lives in.
pub fn relation_domain(space: &FinitePointSpace) -> RelationDomain {
    RelationDomain::new(space.len())
}

/// The lattice an interval certificate lives in.
pub fn interval_domain(space: &OrdinalSpaceInstance) -> IntervalSpace {
    IntervalSpace::new(space.gamma.clone())
}
