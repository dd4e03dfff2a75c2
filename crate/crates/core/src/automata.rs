//! Finite-state input-output automata.
//!
//! An automaton has disjoint input and output alphabets, dense integer
//! state ids with a separate name table, and optional error/accepting
//! markings. Monitors are ordinary automata carrying markings; there is
//! no separate monitor type.

use crate::event::EventId;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

/// Dense state index within one automaton.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Transition {
    pub src: StateId,
    pub event: EventId,
    pub dst: StateId,
}

impl Transition {
    pub fn new(src: StateId, event: EventId, dst: StateId) -> Self {
        Transition { src, event, dst }
    }
}

/// Direction of an event relative to one automaton's interface.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    Input,
    Output,
}

/// Classification of a state by its outgoing transitions.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StateClass {
    /// No outgoing transitions.
    Deadlock,
    /// At least one outgoing transition, all input-labeled.
    Input,
    /// Exactly one outgoing transition, output-labeled.
    Output,
    /// Anything else.
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StructuralViolation {
    /// Event present in both the input and the output alphabet.
    AlphabetOverlap(EventId),
    /// Transition labeled with an event in neither alphabet.
    UnknownLabel(Transition),
    /// Transition endpoint outside the state set.
    BadEndpoint(Transition),
    /// Initial state outside the state set.
    BadInitial(StateId),
    /// Error or accepting marking on a state outside the state set.
    BadMarking(StateId),
}

impl fmt::Display for StructuralViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructuralViolation::AlphabetOverlap(e) => {
                write!(f, "event '{e}' is both an input and an output")
            }
            StructuralViolation::UnknownLabel(t) => write!(
                f,
                "transition {} -{}-> {} labeled with event outside I and O",
                t.src.0, t.event, t.dst.0
            ),
            StructuralViolation::BadEndpoint(t) => write!(
                f,
                "transition {} -{}-> {} references a missing state",
                t.src.0, t.event, t.dst.0
            ),
            StructuralViolation::BadInitial(q) => {
                write!(f, "initial state {} is not a state", q.0)
            }
            StructuralViolation::BadMarking(q) => {
                write!(f, "marked state {} is not a state", q.0)
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("unknown state id {0}")]
    UnknownState(u32),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    name: String,
    state_names: Vec<String>,
    initial: StateId,
    inputs: BTreeSet<EventId>,
    outputs: BTreeSet<EventId>,
    transitions: Vec<Transition>,
    error_states: BTreeSet<StateId>,
    accepting_states: BTreeSet<StateId>,
    /// Outgoing transitions grouped by source state, kept in transition order.
    outgoing: Vec<Vec<Transition>>,
}

impl Automaton {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.state_names.len() as u32).map(StateId)
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.state_names[q.index()]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.state_names
            .iter()
            .position(|n| n == name)
            .map(|i| StateId(i as u32))
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn inputs(&self) -> &BTreeSet<EventId> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<EventId> {
        &self.outputs
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn error_states(&self) -> &BTreeSet<StateId> {
        &self.error_states
    }

    pub fn accepting_states(&self) -> &BTreeSet<StateId> {
        &self.accepting_states
    }

    pub fn is_error(&self, q: StateId) -> bool {
        self.error_states.contains(&q)
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting_states.contains(&q)
    }

    pub fn outgoing(&self, q: StateId) -> &[Transition] {
        &self.outgoing[q.index()]
    }

    /// Direction of an event relative to this automaton, if it belongs to
    /// its interface at all.
    pub fn direction(&self, e: EventId) -> Option<Direction> {
        if self.inputs.contains(&e) {
            Some(Direction::Input)
        } else if self.outputs.contains(&e) {
            Some(Direction::Output)
        } else {
            None
        }
    }

    pub fn has_transition(&self, q: StateId, e: EventId) -> bool {
        self.outgoing(q).iter().any(|t| t.event == e)
    }

    pub fn successors(&self, q: StateId, e: EventId) -> impl Iterator<Item = StateId> + '_ {
        self.outgoing(q)
            .iter()
            .filter(move |t| t.event == e)
            .map(|t| t.dst)
    }

    /// Structural invariant check. An empty result means the automaton is
    /// well-formed; violations are data, not failures.
    pub fn validate(&self) -> Vec<StructuralViolation> {
        let mut out = Vec::new();
        for &e in self.inputs.intersection(&self.outputs) {
            out.push(StructuralViolation::AlphabetOverlap(e));
        }
        let n = self.state_names.len() as u32;
        if self.initial.0 >= n {
            out.push(StructuralViolation::BadInitial(self.initial));
        }
        for &t in &self.transitions {
            if t.src.0 >= n || t.dst.0 >= n {
                out.push(StructuralViolation::BadEndpoint(t));
            }
            if self.direction(t.event).is_none() {
                out.push(StructuralViolation::UnknownLabel(t));
            }
        }
        for &q in self.error_states.iter().chain(self.accepting_states.iter()) {
            if q.0 >= n {
                out.push(StructuralViolation::BadMarking(q));
            }
        }
        out
    }

    pub fn classify_state(&self, q: StateId) -> Result<StateClass, AutomatonError> {
        if q.index() >= self.n_states() {
            return Err(AutomatonError::UnknownState(q.0));
        }
        let out = self.outgoing(q);
        if out.is_empty() {
            return Ok(StateClass::Deadlock);
        }
        let all_inputs = out
            .iter()
            .all(|t| self.direction(t.event) == Some(Direction::Input));
        if all_inputs {
            return Ok(StateClass::Input);
        }
        if out.len() == 1 && self.direction(out[0].event) == Some(Direction::Output) {
            return Ok(StateClass::Output);
        }
        Ok(StateClass::Mixed)
    }

    /// A state is deterministic-compatible when multiple outgoing
    /// transitions are all labeled with pairwise-distinct inputs.
    pub fn is_deterministic_at(&self, q: StateId) -> bool {
        let out = self.outgoing(q);
        if out.len() <= 1 {
            return true;
        }
        let mut seen = BTreeSet::new();
        for t in out {
            if self.direction(t.event) != Some(Direction::Input) || !seen.insert(t.event) {
                return false;
            }
        }
        true
    }

    pub fn is_deterministic(&self) -> bool {
        self.states().all(|q| self.is_deterministic_at(q))
    }

    pub fn is_closed(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn is_receptive(&self) -> bool {
        self.states()
            .all(|q| self.inputs.iter().all(|&e| self.has_transition(q, e)))
    }

    /// Same automaton with extra alphabet events (e.g. an interface
    /// declared wider than the behavior observed so far).
    pub fn with_interface(&self, inputs: &[&str], outputs: &[&str]) -> Automaton {
        let mut a = self.clone();
        a.inputs.extend(inputs.iter().map(|e| EventId::new(e)));
        a.outputs.extend(outputs.iter().map(|e| EventId::new(e)));
        a
    }

    /// Completion: same interface and states, extra transitions.
    pub fn completed_with(&self, added: &[Transition]) -> Automaton {
        let mut transitions = self.transitions.clone();
        for &t in added {
            if !transitions.contains(&t) {
                transitions.push(t);
            }
        }
        Automaton::assemble(
            self.name.clone(),
            self.state_names.clone(),
            self.initial,
            self.inputs.clone(),
            self.outputs.clone(),
            transitions,
            self.error_states.clone(),
            self.accepting_states.clone(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: String,
        state_names: Vec<String>,
        initial: StateId,
        inputs: BTreeSet<EventId>,
        outputs: BTreeSet<EventId>,
        mut transitions: Vec<Transition>,
        error_states: BTreeSet<StateId>,
        accepting_states: BTreeSet<StateId>,
    ) -> Automaton {
        transitions.sort();
        transitions.dedup();
        let mut outgoing = vec![Vec::new(); state_names.len()];
        for &t in &transitions {
            if t.src.index() < outgoing.len() {
                outgoing[t.src.index()].push(t);
            }
        }
        Automaton {
            name,
            state_names,
            initial,
            inputs,
            outputs,
            transitions,
            error_states,
            accepting_states,
            outgoing,
        }
    }

    /// Parses the line-oriented textual format.
    pub fn parse(text: &str) -> Result<Automaton, AutomatonError> {
        let mut b: Option<AutomatonBuilder> = None;
        let mut initial_name: Option<String> = None;
        let mut errors: Vec<String> = Vec::new();
        let mut accepting: Vec<String> = Vec::new();

        let err = |line: usize, msg: &str| AutomatonError::Parse {
            line,
            msg: msg.to_string(),
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            let kw = tok.next().unwrap();
            let rest: Vec<&str> = tok.collect();
            match kw {
                "automaton" => {
                    if rest.len() != 1 {
                        return Err(err(line_no, "expected: automaton <name>"));
                    }
                    b = Some(AutomatonBuilder::new(rest[0]));
                }
                _ => {
                    let b = b
                        .as_mut()
                        .ok_or_else(|| err(line_no, "missing 'automaton <name>' header"))?;
                    match kw {
                        "inputs" => {
                            for e in &rest {
                                b.input(e);
                            }
                        }
                        "outputs" => {
                            for e in &rest {
                                b.output(e);
                            }
                        }
                        "states" => {
                            for s in &rest {
                                b.state(s);
                            }
                        }
                        "initial" => {
                            if rest.len() != 1 {
                                return Err(err(line_no, "expected: initial <state>"));
                            }
                            b.state(rest[0]);
                            initial_name = Some(rest[0].to_string());
                        }
                        "error" => {
                            for s in &rest {
                                b.state(s);
                                errors.push(s.to_string());
                            }
                        }
                        "accepting" => {
                            for s in &rest {
                                b.state(s);
                                accepting.push(s.to_string());
                            }
                        }
                        "trans" => {
                            if rest.len() != 3 {
                                return Err(err(line_no, "expected: trans <src> <event> <dst>"));
                            }
                            let src = b.state(rest[0]);
                            let dst = b.state(rest[2]);
                            let e = EventId::new(rest[1]);
                            b.transition(src, e, dst);
                        }
                        other => {
                            return Err(err(line_no, &format!("unknown directive '{other}'")));
                        }
                    }
                }
            }
        }

        let mut b = b.ok_or_else(|| err(0, "empty automaton description"))?;
        let initial = initial_name.ok_or_else(|| err(0, "missing 'initial' directive"))?;
        let init = b.state(&initial);
        b.set_initial(init);
        for s in errors {
            let q = b.state(&s);
            b.mark_error(q);
        }
        for s in accepting {
            let q = b.state(&s);
            b.mark_accepting(q);
        }
        Ok(b.build())
    }

    /// Emits the textual format; `parse(emit(a))` reproduces `a`.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("automaton {}\n", self.name));
        let names = |set: &BTreeSet<EventId>| {
            let mut v: Vec<&str> = set.iter().map(|e| e.name()).collect();
            v.sort_unstable();
            v.join(" ")
        };
        if !self.inputs.is_empty() {
            s.push_str(&format!("inputs {}\n", names(&self.inputs)));
        }
        if !self.outputs.is_empty() {
            s.push_str(&format!("outputs {}\n", names(&self.outputs)));
        }
        if !self.state_names.is_empty() {
            s.push_str(&format!("states {}\n", self.state_names.join(" ")));
        }
        s.push_str(&format!("initial {}\n", self.state_name(self.initial)));
        if !self.error_states.is_empty() {
            let v: Vec<&str> = self.error_states.iter().map(|&q| self.state_name(q)).collect();
            s.push_str(&format!("error {}\n", v.join(" ")));
        }
        if !self.accepting_states.is_empty() {
            let v: Vec<&str> = self
                .accepting_states
                .iter()
                .map(|&q| self.state_name(q))
                .collect();
            s.push_str(&format!("accepting {}\n", v.join(" ")));
        }
        for t in &self.transitions {
            s.push_str(&format!(
                "trans {} {} {}\n",
                self.state_name(t.src),
                t.event,
                self.state_name(t.dst)
            ));
        }
        s
    }

    /// Canonical textual form, invariant under state renaming and state
    /// reordering: states are renumbered by breadth-first search from the
    /// initial state following event-name order. Two deterministic
    /// automata are isomorphic iff their signatures are equal.
    pub fn canonical_signature(&self) -> String {
        let mut order: Vec<Option<usize>> = vec![None; self.n_states()];
        let mut bfs: Vec<StateId> = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        order[self.initial.index()] = Some(0);
        bfs.push(self.initial);
        queue.push_back(self.initial);
        while let Some(q) = queue.pop_front() {
            let mut out: Vec<&Transition> = self.outgoing(q).iter().collect();
            out.sort_by_key(|t| (t.event.name(), t.dst));
            for t in out {
                if order[t.dst.index()].is_none() {
                    order[t.dst.index()] = Some(bfs.len());
                    bfs.push(t.dst);
                    queue.push_back(t.dst);
                }
            }
        }
        // Unreachable states keep a stable tail order by name.
        let mut rest: Vec<StateId> = self
            .states()
            .filter(|q| order[q.index()].is_none())
            .collect();
        rest.sort_by_key(|&q| self.state_name(q).to_string());
        for q in rest {
            order[q.index()] = Some(bfs.len());
            bfs.push(q);
        }
        let num = |q: StateId| order[q.index()].unwrap();
        let mut lines = Vec::new();
        let names = |set: &BTreeSet<EventId>| {
            let mut v: Vec<&str> = set.iter().map(|e| e.name()).collect();
            v.sort_unstable();
            v.join(" ")
        };
        lines.push(format!("states {}", self.n_states()));
        lines.push(format!("inputs {}", names(&self.inputs)));
        lines.push(format!("outputs {}", names(&self.outputs)));
        let mut trans: Vec<String> = self
            .transitions
            .iter()
            .map(|t| format!("t {} {} {}", num(t.src), t.event, num(t.dst)))
            .collect();
        trans.sort();
        lines.extend(trans);
        let mut marks: Vec<String> = self
            .error_states
            .iter()
            .map(|&q| format!("e {}", num(q)))
            .chain(self.accepting_states.iter().map(|&q| format!("a {}", num(q))))
            .collect();
        marks.sort();
        lines.extend(marks);
        lines.join("\n")
    }

    /// DOT export. Input edges are labeled `e?`, output edges `e!`;
    /// error states are double-circled red, accepting double-circled green.
    /// Transitions in `dashed` are rendered with dashed style.
    pub fn to_dot(&self, dashed: &[Transition]) -> String {
        let mut s = String::new();
        s.push_str(&format!("digraph \"{}\" {{\n", self.name));
        s.push_str("  rankdir=LR;\n");
        s.push_str("  __init [shape=point, style=invis];\n");
        for q in self.states() {
            let mut attrs = vec![format!("label=\"{}\"", self.state_name(q))];
            if self.is_error(q) {
                attrs.push("shape=doublecircle".into());
                attrs.push("color=red".into());
            } else if self.is_accepting(q) {
                attrs.push("shape=doublecircle".into());
                attrs.push("color=green".into());
            } else {
                attrs.push("shape=circle".into());
            }
            s.push_str(&format!("  s{} [{}];\n", q.0, attrs.join(", ")));
        }
        s.push_str(&format!("  __init -> s{};\n", self.initial.0));
        for t in &self.transitions {
            let mark = match self.direction(t.event) {
                Some(Direction::Input) => "?",
                Some(Direction::Output) => "!",
                None => "",
            };
            let style = if dashed.contains(t) { ", style=dashed" } else { "" };
            s.push_str(&format!(
                "  s{} -> s{} [label=\"{}{}\"{}];\n",
                t.src.0, t.dst.0, t.event, mark, style
            ));
        }
        s.push_str("}\n");
        s
    }
}

/// Incremental construction of automata; states are created on first use.
#[derive(Clone, Debug)]
pub struct AutomatonBuilder {
    name: String,
    state_names: Vec<String>,
    by_name: HashMap<String, StateId>,
    initial: StateId,
    inputs: BTreeSet<EventId>,
    outputs: BTreeSet<EventId>,
    transitions: Vec<Transition>,
    error_states: BTreeSet<StateId>,
    accepting_states: BTreeSet<StateId>,
}

impl AutomatonBuilder {
    pub fn new(name: &str) -> Self {
        AutomatonBuilder {
            name: name.to_string(),
            state_names: Vec::new(),
            by_name: HashMap::new(),
            initial: StateId(0),
            inputs: BTreeSet::new(),
            outputs: BTreeSet::new(),
            transitions: Vec::new(),
            error_states: BTreeSet::new(),
            accepting_states: BTreeSet::new(),
        }
    }

    pub fn state(&mut self, name: &str) -> StateId {
        if let Some(&q) = self.by_name.get(name) {
            return q;
        }
        let q = StateId(self.state_names.len() as u32);
        self.state_names.push(name.to_string());
        self.by_name.insert(name.to_string(), q);
        q
    }

    pub fn input(&mut self, name: &str) -> EventId {
        let e = EventId::new(name);
        self.inputs.insert(e);
        e
    }

    pub fn output(&mut self, name: &str) -> EventId {
        let e = EventId::new(name);
        self.outputs.insert(e);
        e
    }

    pub fn set_initial(&mut self, q: StateId) {
        self.initial = q;
    }

    pub fn transition(&mut self, src: StateId, event: EventId, dst: StateId) {
        self.transitions.push(Transition::new(src, event, dst));
    }

    /// Convenience: named transition, creating endpoints as needed.
    pub fn trans(&mut self, src: &str, event: &str, dst: &str) {
        let s = self.state(src);
        let d = self.state(dst);
        let e = EventId::new(event);
        self.transition(s, e, d);
    }

    pub fn mark_error(&mut self, q: StateId) {
        self.error_states.insert(q);
    }

    pub fn mark_accepting(&mut self, q: StateId) {
        self.accepting_states.insert(q);
    }

    pub fn build(self) -> Automaton {
        Automaton::assemble(
            self.name,
            self.state_names,
            self.initial,
            self.inputs,
            self.outputs,
            self.transitions,
            self.error_states,
            self.accepting_states,
        )
    }
}
