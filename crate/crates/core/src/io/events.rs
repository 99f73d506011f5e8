//! Event scripts: the external stimuli fed to an execution.
//!
//! ```text
//! # comment
//! recv "Supplier Process" Order {"id": 7, "items": [1, 2], "total": 1200}
//! timer "Wait Payment"
//! ```

use std::fmt;

use thiserror::Error;

use crate::exec::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScriptEvent {
    /// A message delivered to the named pool / main activity.
    Message {
        target: String,
        name: String,
        payload: Value,
    },
    /// Fires the timer node with this name.
    Timer(String),
}

impl fmt::Display for ScriptEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScriptEvent::Message { target, name, payload } => {
                write!(f, "recv {} {name} {payload}", serde_json::Value::from(target.as_str()))
            }
            ScriptEvent::Timer(n) => write!(f, "timer {}", serde_json::Value::from(n.as_str())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventScript {
    pub events: Vec<ScriptEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

/// Splits a leading JSON string literal off `s`.
fn quoted(s: &str) -> Result<(String, &str), String> {
    let bytes = s.as_bytes();
    let mut i = 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => {
                let text: String = serde_json::from_str(&s[..=i]).map_err(|e| format!("bad quoted name: {e}"))?;
                return Ok((text, &s[i + 1..]));
            }
            _ => i += 1,
        }
    }
    Err("unterminated quoted name".into())
}

fn parse_line(line: &str) -> Result<ScriptEvent, String> {
    let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let rest = rest.trim_start();
    match word {
        "recv" => {
            if !rest.starts_with('"') {
                return Err("expected quoted target after 'recv'".into());
            }
            let (target, rest) = quoted(rest)?;
            let rest = rest.trim_start();
            let (name, payload) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            if target.is_empty() || name.is_empty() {
                return Err("target and event name must be non-empty".into());
            }
            let payload = payload.trim();
            if payload.is_empty() {
                return Err("missing JSON payload".into());
            }
            let json: serde_json::Value = serde_json::from_str(payload).map_err(|e| format!("bad payload: {e}"))?;
            Ok(ScriptEvent::Message {
                target,
                name: name.to_string(),
                payload: Value::from_json(&json)?,
            })
        }
        "timer" => {
            let name = if rest.starts_with('"') {
                let (n, tail) = quoted(rest)?;
                if !tail.trim().is_empty() {
                    return Err("trailing text after timer name".into());
                }
                n
            } else {
                rest.trim_end().to_string()
            };
            if name.is_empty() {
                return Err("missing timer name".into());
            }
            Ok(ScriptEvent::Timer(name))
        }
        other => Err(format!("unknown event kind '{other}'")),
    }
}

pub fn parse_event_script(text: &str) -> Result<EventScript, ScriptError> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        events.push(parse_line(line).map_err(|message| ScriptError { line: i + 1, message })?);
    }
    Ok(EventScript { events })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recv_line() {
        let s = parse_event_script(r#"recv "Supplier Process" Order {"items":[1,2],"total":1200}"#).unwrap();
        assert_eq!(s.events.len(), 1);
        match &s.events[0] {
            ScriptEvent::Message { target, name, payload } => {
                assert_eq!(target, "Supplier Process");
                assert_eq!(name, "Order");
                assert_eq!(payload.to_json(), serde_json::json!({"items":[1,2],"total":1200}));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn timer_forms() {
        let s = parse_event_script("timer T1\n# note\n\ntimer \"Wait a Day\"\ntimer Wait a Day").unwrap();
        assert_eq!(
            s.events,
            vec![
                ScriptEvent::Timer("T1".into()),
                ScriptEvent::Timer("Wait a Day".into()),
                ScriptEvent::Timer("Wait a Day".into())
            ]
        );
    }

    #[test]
    fn errors_carry_line() {
        assert_eq!(parse_event_script("frobnicate x").unwrap_err().line, 1);
        assert_eq!(parse_event_script("timer A\nrecv P Order {}").unwrap_err().line, 2);
        assert_eq!(parse_event_script(r#"recv "P" Order {"x":1.5}"#).unwrap_err().line, 1);
        assert_eq!(parse_event_script(r#"recv "P" Order"#).unwrap_err().line, 1);
    }

    #[test]
    fn display_reparses() {
        let text = r#"recv "A \"q\"" Sig [1,{"k":"v"}]"#;
        let s = parse_event_script(text).unwrap();
        let again = parse_event_script(&s.events[0].to_string()).unwrap();
        assert_eq!(s, again);
    }
}
