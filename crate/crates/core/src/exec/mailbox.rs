use std::collections::BTreeMap;

use crate::exec::Value;
use crate::io::events::{EventScript, ScriptEvent};

/// Where an offered message comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Source {
    Script,
    Queue,
}

/// External script cursor plus one FIFO per (pool, message name) for
/// messages sent by other pools.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub(crate) struct Mailbox {
    pub script: usize,
    pub queues: BTreeMap<(usize, String), Vec<Value>>,
}

impl Mailbox {
    /// Messages `name` currently deliverable to `pool`.
    pub fn offers(&self, script: &EventScript, pool: usize, pool_name: &str, name: &str) -> Vec<(Source, Value)> {
        let mut out = Vec::new();
        if let Some(ScriptEvent::Message {
            target,
            name: n,
            payload,
        }) = script.events.get(self.script)
        {
            if target == pool_name && n == name {
                out.push((Source::Script, payload.clone()));
            }
        }
        if let Some(v) = self.queues.get(&(pool, name.to_string())).and_then(|q| q.first()) {
            out.push((Source::Queue, v.clone()));
        }
        out
    }

    pub fn timer_offered(&self, script: &EventScript, name: &str) -> bool {
        matches!(script.events.get(self.script), Some(ScriptEvent::Timer(t)) if t == name)
    }

    pub fn take(&mut self, src: Source, pool: usize, name: &str) {
        match src {
            Source::Script => self.script += 1,
            Source::Queue => {
                let key = (pool, name.to_string());
                if let Some(q) = self.queues.get_mut(&key) {
                    q.remove(0);
                    if q.is_empty() {
                        self.queues.remove(&key);
                    }
                }
            }
        }
    }

    pub fn take_timer(&mut self) {
        self.script += 1;
    }

    pub fn post(&mut self, pool: usize, name: &str, v: Value) {
        self.queues.entry((pool, name.to_string())).or_default().push(v);
    }
}
