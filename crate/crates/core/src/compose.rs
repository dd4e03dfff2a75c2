//! Asynchronous parallel composition with output-to-input rendezvous.
//!
//! Each event has at most one sending component; every component listing it
//! as an input synchronizes on the same step (multicast). An output is
//! blocked while some listener has no matching input transition at its
//! current state. Inputs of the product are the inputs no component sends;
//! they fire as environment steps synchronizing all listeners at once.

use crate::automata::{Automaton, Direction, StateId};
use crate::event::EventId;
use std::collections::{BTreeSet, HashMap, VecDeque};
use thiserror::Error;

pub type GlobalState = Vec<StateId>;

#[derive(Debug, Error)]
pub enum CompositionError {
    #[error("event '{0}' is an output of both '{1}' and '{2}'")]
    SharedOutput(EventId, String, String),
    #[error("duplicate component name '{0}'")]
    DuplicateName(String),
}

#[derive(Clone, Debug)]
pub struct Product {
    components: Vec<Automaton>,
    inputs: BTreeSet<EventId>,
    outputs: BTreeSet<EventId>,
    /// Component index sending each internal event.
    sender_of: HashMap<EventId, usize>,
    /// Component indices listening on each event, in component order.
    listeners: HashMap<EventId, Vec<usize>>,
}

/// One enabled product step: the event, the sending component (`None` for
/// an environment input), and the successor global state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub event: EventId,
    pub sender: Option<usize>,
    pub dst: GlobalState,
}

impl Product {
    pub fn new(components: Vec<Automaton>) -> Result<Product, CompositionError> {
        let mut sender_of: HashMap<EventId, usize> = HashMap::new();
        let mut listeners: HashMap<EventId, Vec<usize>> = HashMap::new();
        let mut names: BTreeSet<&str> = BTreeSet::new();
        for (i, a) in components.iter().enumerate() {
            if !names.insert(a.name()) {
                return Err(CompositionError::DuplicateName(a.name().to_string()));
            }
            for &e in a.outputs() {
                if let Some(&j) = sender_of.get(&e) {
                    return Err(CompositionError::SharedOutput(
                        e,
                        components[j].name().to_string(),
                        a.name().to_string(),
                    ));
                }
                sender_of.insert(e, i);
            }
            for &e in a.inputs() {
                listeners.entry(e).or_default().push(i);
            }
        }
        let mut inputs: BTreeSet<EventId> = BTreeSet::new();
        let mut outputs: BTreeSet<EventId> = BTreeSet::new();
        for a in &components {
            inputs.extend(a.inputs());
            outputs.extend(a.outputs());
        }
        let inputs = inputs.difference(&outputs).copied().collect();
        Ok(Product {
            components,
            inputs,
            outputs,
            sender_of,
            listeners,
        })
    }

    pub fn components(&self) -> &[Automaton] {
        &self.components
    }

    pub fn inputs(&self) -> &BTreeSet<EventId> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<EventId> {
        &self.outputs
    }

    pub fn sender_of(&self, e: EventId) -> Option<usize> {
        self.sender_of.get(&e).copied()
    }

    pub fn listeners(&self, e: EventId) -> &[usize] {
        self.listeners.get(&e).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn initial(&self) -> GlobalState {
        self.components.iter().map(|a| a.initial()).collect()
    }

    pub fn is_closed(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn is_error(&self, g: &GlobalState) -> bool {
        self.components
            .iter()
            .zip(g)
            .any(|(a, &q)| a.is_error(q))
    }

    pub fn is_accepting(&self, g: &GlobalState) -> bool {
        self.components
            .iter()
            .zip(g)
            .any(|(a, &q)| a.is_accepting(q))
    }

    /// Whether the multicast on `e` from `g` has all listeners ready,
    /// ignoring component `skip` (the sender, if internal).
    fn listeners_ready(&self, g: &GlobalState, e: EventId, skip: usize) -> bool {
        self.listeners(e)
            .iter()
            .all(|&j| j == skip || self.components[j].has_transition(g[j], e))
    }

    /// Whether event `e` can fire from `g`: an internal output with a
    /// willing sender and all listeners ready, or an external input with
    /// all listeners ready.
    pub fn sync_enabled(&self, g: &GlobalState, e: EventId) -> bool {
        match self.sender_of(e) {
            Some(i) => {
                self.components[i].has_transition(g[i], e) && self.listeners_ready(g, e, i)
            }
            None => {
                !self.listeners(e).is_empty() && self.listeners_ready(g, e, usize::MAX)
            }
        }
    }

    /// All enabled steps from `g`, in deterministic order: internal outputs
    /// by sending component then transition order, then external inputs in
    /// event order.
    pub fn steps(&self, g: &GlobalState) -> Vec<Step> {
        let mut out = Vec::new();
        for (i, a) in self.components.iter().enumerate() {
            for t in a.outgoing(g[i]) {
                if a.direction(t.event) != Some(Direction::Output) {
                    continue;
                }
                if !self.listeners_ready(g, t.event, i) {
                    continue;
                }
                let mut base = g.clone();
                base[i] = t.dst;
                self.expand_listeners(&base, t.event, i, |dst| {
                    out.push(Step {
                        event: t.event,
                        sender: Some(i),
                        dst,
                    });
                });
            }
        }
        for &e in &self.inputs {
            if self.listeners(e).is_empty() || !self.listeners_ready(g, e, usize::MAX) {
                continue;
            }
            self.expand_listeners(g, e, usize::MAX, |dst| {
                out.push(Step {
                    event: e,
                    sender: None,
                    dst,
                });
            });
        }
        out
    }

    /// Cartesian expansion over nondeterministic listener moves.
    fn expand_listeners(
        &self,
        base: &GlobalState,
        e: EventId,
        skip: usize,
        mut emit: impl FnMut(GlobalState),
    ) {
        let ls: Vec<usize> = self
            .listeners(e)
            .iter()
            .copied()
            .filter(|&j| j != skip)
            .collect();
        let mut stack: Vec<(usize, GlobalState)> = vec![(0, base.clone())];
        while let Some((k, g)) = stack.pop() {
            if k == ls.len() {
                emit(g);
                continue;
            }
            let j = ls[k];
            // Reverse push keeps emission in transition order.
            let succs: Vec<StateId> = self.components[j].successors(g[j], e).collect();
            for &d in succs.iter().rev() {
                let mut g2 = g.clone();
                g2[j] = d;
                stack.push((k + 1, g2));
            }
        }
    }

    /// BFS over the reachable global state graph.
    pub fn explore(&self) -> Explored {
        let mut states: Vec<GlobalState> = vec![self.initial()];
        let mut index: HashMap<GlobalState, usize> = HashMap::new();
        index.insert(self.initial(), 0);
        let mut edges: Vec<Vec<Edge>> = Vec::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        queue.push_back(0);
        edges.push(Vec::new());
        while let Some(s) = queue.pop_front() {
            let g = states[s].clone();
            let mut out = Vec::new();
            for step in self.steps(&g) {
                let d = match index.get(&step.dst) {
                    Some(&d) => d,
                    None => {
                        let d = states.len();
                        index.insert(step.dst.clone(), d);
                        states.push(step.dst.clone());
                        edges.push(Vec::new());
                        queue.push_back(d);
                        d
                    }
                };
                out.push(Edge {
                    event: step.event,
                    sender: step.sender,
                    dst: d,
                });
            }
            edges[s] = out;
        }
        Explored {
            states,
            edges,
            initial: 0,
        }
    }

    /// Flattens the reachable product into a single automaton. State names
    /// join `component=state` segments with `|`; segments of nested
    /// products are spliced in, so differently grouped compositions of the
    /// same components produce comparable names.
    pub fn to_automaton(&self, name: &str) -> Automaton {
        let ex = self.explore();
        let mut b = crate::automata::AutomatonBuilder::new(name);
        for &e in &self.inputs {
            b.input(e.name());
        }
        for &e in &self.outputs {
            b.output(e.name());
        }
        let label = |g: &GlobalState| -> String {
            let mut parts = Vec::new();
            for (a, &q) in self.components.iter().zip(g) {
                let n = a.state_name(q);
                if n.contains('|') {
                    // Nested product state: splice its segments through.
                    parts.push(n.to_string());
                } else {
                    parts.push(format!("{}={}", a.name(), n));
                }
            }
            parts.join("|")
        };
        let ids: Vec<StateId> = ex.states.iter().map(|g| b.state(&label(g))).collect();
        b.set_initial(ids[ex.initial]);
        for (s, out) in ex.edges.iter().enumerate() {
            for e in out {
                b.transition(ids[s], e.event, ids[e.dst]);
            }
        }
        for (s, g) in ex.states.iter().enumerate() {
            if self.is_error(g) {
                b.mark_error(ids[s]);
            }
            if self.is_accepting(g) {
                b.mark_accepting(ids[s]);
            }
        }
        b.build()
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub event: EventId,
    pub sender: Option<usize>,
    pub dst: usize,
}

#[derive(Clone, Debug)]
pub struct Explored {
    pub states: Vec<GlobalState>,
    pub edges: Vec<Vec<Edge>>,
    pub initial: usize,
}

impl Explored {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }
}

/// Binary composition over flattened automata.
pub fn compose2(a: &Automaton, b: &Automaton) -> Result<Product, CompositionError> {
    Product::new(vec![a.clone(), b.clone()])
}

pub fn compose_all(components: &[Automaton]) -> Result<Product, CompositionError> {
    Product::new(components.to_vec())
}

/// Canonical shape of an automaton whose state names are `|`-joined
/// `component=state` segments: segments sorted, then states, transitions,
/// and markings listed as name triples. Two compositions of the same
/// component set are equal iff their canonical shapes are equal,
/// independent of component order or grouping.
#[derive(Debug, PartialEq, Eq)]
pub struct CanonicalShape {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub initial: String,
    pub states: BTreeSet<String>,
    pub transitions: BTreeSet<(String, String, String)>,
    pub errors: BTreeSet<String>,
    pub accepting: BTreeSet<String>,
}

pub fn canonical_shape(a: &Automaton) -> CanonicalShape {
    let norm = |name: &str| -> String {
        let mut parts: Vec<&str> = name.split('|').collect();
        parts.sort_unstable();
        parts.join("|")
    };
    let mut inputs: Vec<String> = a.inputs().iter().map(|e| e.name().to_string()).collect();
    inputs.sort();
    let mut outputs: Vec<String> = a.outputs().iter().map(|e| e.name().to_string()).collect();
    outputs.sort();
    CanonicalShape {
        inputs,
        outputs,
        initial: norm(a.state_name(a.initial())),
        states: a.states().map(|q| norm(a.state_name(q))).collect(),
        transitions: a
            .transitions()
            .iter()
            .map(|t| {
                (
                    norm(a.state_name(t.src)),
                    t.event.name().to_string(),
                    norm(a.state_name(t.dst)),
                )
            })
            .collect(),
        errors: a.error_states().iter().map(|&q| norm(a.state_name(q))).collect(),
        accepting: a
            .accepting_states()
            .iter()
            .map(|&q| norm(a.state_name(q)))
            .collect(),
    }
}
