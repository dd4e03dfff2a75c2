//! Interned event identifiers.
//!
//! Events are identified by their textual token; the same token names the
//! same event in every automaton of a system. Interning gives cheap copies
//! and a stable order for deterministic iteration.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

/// An interned event token.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(u32);

struct Interner {
    by_name: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

fn interner() -> &'static Mutex<Interner> {
    static INTERNER: OnceLock<Mutex<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        Mutex::new(Interner {
            by_name: HashMap::new(),
            names: Vec::new(),
        })
    })
}

impl EventId {
    /// Interns a token. Empty tokens are not representable as events and
    /// must be rejected by callers before interning.
    pub fn new(name: &str) -> EventId {
        let mut int = interner().lock().unwrap();
        if let Some(&idx) = int.by_name.get(name) {
            return EventId(idx);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let idx = int.names.len() as u32;
        int.names.push(leaked);
        int.by_name.insert(leaked, idx);
        EventId(idx)
    }

    pub fn name(self) -> &'static str {
        interner().lock().unwrap().names[self.0 as usize]
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Debug for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EventId({:?})", self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_idempotent() {
        let a = EventId::new("p0");
        let b = EventId::new("p0");
        assert_eq!(a, b);
        assert_eq!(a.name(), "p0");
        assert_ne!(a, EventId::new("p1"));
    }
}
