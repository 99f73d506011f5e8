use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

/// Runtime data value. Records keep their fields sorted, so structural
/// equality and ordering never depend on insertion order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Str(String),
    List(Vec<Value>),
    Record(BTreeMap<String, Value>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "Boolean",
            Value::Int(_) => "Integer",
            Value::Str(_) => "String",
            Value::List(_) => "list",
            Value::Record(_) => "record",
        }
    }

    /// Converts JSON into a value. Non-integral numbers are rejected.
    pub fn from_json(v: &serde_json::Value) -> Result<Value, String> {
        Ok(match v {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => return Err(format!("number {n} is not a 64-bit integer")),
            },
            serde_json::Value::String(s) => Value::Str(s.clone()),
            serde_json::Value::Array(a) => Value::List(a.iter().map(Value::from_json).collect::<Result<_, _>>()?),
            serde_json::Value::Object(o) => Value::Record(
                o.iter()
                    .map(|(k, v)| Ok((k.clone(), Value::from_json(v)?)))
                    .collect::<Result<_, String>>()?,
            ),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Bool(b) => (*b).into(),
            Value::Int(i) => (*i).into(),
            Value::Str(s) => s.clone().into(),
            Value::List(l) => l.iter().map(Value::to_json).collect(),
            Value::Record(r) => serde_json::Value::Object(r.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()),
        }
    }

    /// Stable 16-hex-digit digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        let text = self.to_json().to_string();
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

/// Scope-chained variable environment; the last frame is the innermost.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarEnv {
    frames: Vec<BTreeMap<String, Value>>,
}

impl VarEnv {
    pub fn new() -> Self {
        VarEnv {
            frames: vec![BTreeMap::new()],
        }
    }

    pub fn from_frames(frames: Vec<BTreeMap<String, Value>>) -> Self {
        VarEnv { frames }
    }

    pub fn push(&mut self, frame: BTreeMap<String, Value>) {
        self.frames.push(frame);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }

    /// Binds in the innermost frame.
    pub fn bind(&mut self, name: &str, v: Value) {
        if self.frames.is_empty() {
            self.frames.push(BTreeMap::new());
        }
        self.frames.last_mut().unwrap().insert(name.to_string(), v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_float_rejection() {
        let j: serde_json::Value = serde_json::from_str(r#"{"b":[1,"x",true,null],"a":{"c":-3}}"#).unwrap();
        let v = Value::from_json(&j).unwrap();
        assert_eq!(v.to_json(), j);
        assert!(Value::from_json(&serde_json::json!(1.5)).is_err());
    }

    #[test]
    fn digest_ignores_key_order() {
        let a = Value::from_json(&serde_json::json!({"x":1,"y":2})).unwrap();
        let b = Value::from_json(&serde_json::from_str(r#"{"y":2,"x":1}"#).unwrap()).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
        assert_ne!(a.digest(), Value::Int(1).digest());
    }

    #[test]
    fn inner_frame_shadows() {
        let mut env = VarEnv::new();
        env.bind("x", Value::Int(1));
        env.push(BTreeMap::new());
        assert_eq!(env.get("x"), Some(&Value::Int(1)));
        env.bind("x", Value::Int(2));
        assert_eq!(env.get("x"), Some(&Value::Int(2)));
    }
}
