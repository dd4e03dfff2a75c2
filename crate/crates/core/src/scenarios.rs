//! Scenario descriptions and their compilation into automaton skeletons.
//!
//! A scenario is a set of per-process lanes: sequences of sent events
//! (`!`), received events (`?`), and state labels (`@`). A scenario may
//! declare symmetry substitutions; each substitution adds a copy of every
//! lane with events and labels renamed.
//!
//! Compilation identifies lane positions by the pair (last label, events
//! observed since that label). A label occurrence merges the current
//! position with the label's own state, so revisiting a label closes a
//! loop. After the label-induced quotient, a congruence closure merges the
//! targets of equally-labeled transitions leaving the same state; any
//! nondeterminism that survives is reported as a conflict.

use crate::automata::{Automaton, AutomatonBuilder};
use crate::event::EventId;
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LaneItem {
    Label(String),
    Out(EventId),
    In(EventId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lane {
    pub process: String,
    pub items: Vec<LaneItem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    /// Names of substitutions generating symmetric copies of every lane.
    pub symmetric: Vec<String>,
    pub lanes: Vec<Lane>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst {
    pub name: String,
    pub events: BTreeMap<EventId, EventId>,
    pub labels: BTreeMap<String, String>,
}

impl Subst {
    fn map_event(&self, e: EventId) -> EventId {
        self.events.get(&e).copied().unwrap_or(e)
    }

    fn map_label(&self, l: &str) -> String {
        self.labels.get(l).cloned().unwrap_or_else(|| l.to_string())
    }

    pub fn apply(&self, lane: &Lane) -> Lane {
        Lane {
            process: lane.process.clone(),
            items: lane
                .items
                .iter()
                .map(|it| match it {
                    LaneItem::Label(l) => LaneItem::Label(self.map_label(l)),
                    LaneItem::Out(e) => LaneItem::Out(self.map_event(*e)),
                    LaneItem::In(e) => LaneItem::In(self.map_event(*e)),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub substs: Vec<Subst>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("scenario '{scenario}' references unknown substitution '{subst}'")]
    UnknownSubst { scenario: String, subst: String },
    #[error("substitution '{0}' maps two events to '{1}'")]
    NonBijective(String, EventId),
    #[error("process '{process}': event '{event}' is used both as input and output")]
    DirectionConflict { process: String, event: EventId },
    #[error("process '{process}': lane in scenario '{scenario}' does not open with a label")]
    UnlabeledLaneStart { process: String, scenario: String },
    #[error("process '{process}': state '{state}' is nondeterministic after merging")]
    Nondeterministic { process: String, state: String },
    #[error("no scenarios in input")]
    Empty,
}

/// Lane identity key: (last label, events since that label).
type Key = (String, Vec<EventId>);

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind { parent: Vec::new() }
    }

    fn add(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let n = self.parent[c];
            self.parent[c] = r;
            c = n;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Lower id wins, keeping representatives deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

impl ScenarioSet {
    pub fn parse(text: &str) -> Result<ScenarioSet, ScenarioError> {
        let err = |line: usize, msg: String| ScenarioError::Parse { line, msg };
        let mut set = ScenarioSet::default();
        enum Ctx {
            None,
            Scenario,
            Subst,
        }
        let mut ctx = Ctx::None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            // Split glued sigils: "!send" and "! send" are equivalent.
            let mut toks: Vec<String> = Vec::new();
            for t in line.split_whitespace() {
                if t.len() > 1 && (t.starts_with('!') || t.starts_with('?') || t.starts_with('@'))
                {
                    toks.push(t[..1].to_string());
                    toks.push(t[1..].to_string());
                } else {
                    toks.push(t.to_string());
                }
            }
            match toks[0].as_str() {
                "scenario" => {
                    if toks.len() < 2 {
                        return Err(err(line_no, "expected: scenario <name>".into()));
                    }
                    let mut sc = Scenario {
                        name: toks[1].clone(),
                        symmetric: Vec::new(),
                        lanes: Vec::new(),
                    };
                    if toks.len() > 2 {
                        if toks[2] != "symmetric" {
                            return Err(err(
                                line_no,
                                "expected: scenario <name> [symmetric <subst>...]".into(),
                            ));
                        }
                        sc.symmetric = toks[3..].to_vec();
                        if sc.symmetric.is_empty() {
                            return Err(err(line_no, "symmetric needs at least one name".into()));
                        }
                    }
                    set.scenarios.push(sc);
                    ctx = Ctx::Scenario;
                }
                "subst" => {
                    if toks.len() != 2 {
                        return Err(err(line_no, "expected: subst <name>".into()));
                    }
                    set.substs.push(Subst {
                        name: toks[1].clone(),
                        ..Subst::default()
                    });
                    ctx = Ctx::Subst;
                }
                "lane" => match ctx {
                    Ctx::Scenario => {
                        if toks.len() != 2 {
                            return Err(err(line_no, "expected: lane <process>".into()));
                        }
                        set.scenarios.last_mut().unwrap().lanes.push(Lane {
                            process: toks[1].clone(),
                            items: Vec::new(),
                        });
                    }
                    _ => return Err(err(line_no, "'lane' outside a scenario".into())),
                },
                "map" | "maplabel" => match ctx {
                    Ctx::Subst => {
                        if toks.len() != 3 {
                            return Err(err(line_no, format!("expected: {} <from> <to>", toks[0])));
                        }
                        let s = set.substs.last_mut().unwrap();
                        if toks[0] == "map" {
                            s.events
                                .insert(EventId::new(&toks[1]), EventId::new(&toks[2]));
                        } else {
                            s.labels.insert(toks[1].clone(), toks[2].clone());
                        }
                    }
                    _ => return Err(err(line_no, format!("'{}' outside a subst", toks[0]))),
                },
                "!" | "?" | "@" => {
                    let lane = match ctx {
                        Ctx::Scenario => set
                            .scenarios
                            .last_mut()
                            .unwrap()
                            .lanes
                            .last_mut()
                            .ok_or_else(|| err(line_no, "lane item before 'lane'".into()))?,
                        _ => return Err(err(line_no, "lane item outside a scenario".into())),
                    };
                    let mut i = 0;
                    while i < toks.len() {
                        if i + 1 >= toks.len() {
                            return Err(err(line_no, format!("'{}' needs a name", toks[i])));
                        }
                        let name = &toks[i + 1];
                        lane.items.push(match toks[i].as_str() {
                            "!" => LaneItem::Out(EventId::new(name)),
                            "?" => LaneItem::In(EventId::new(name)),
                            "@" => LaneItem::Label(name.clone()),
                            other => {
                                return Err(err(line_no, format!("unexpected token '{other}'")))
                            }
                        });
                        i += 2;
                    }
                }
                other => return Err(err(line_no, format!("unknown directive '{other}'"))),
            }
        }
        for s in &set.substs {
            let mut seen = BTreeMap::new();
            for (&from, &to) in &s.events {
                if let Some(_prev) = seen.insert(to, from) {
                    return Err(ScenarioError::NonBijective(s.name.clone(), to));
                }
            }
        }
        Ok(set)
    }

    /// Emits the textual form; `parse(emit(s))` reproduces `s`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for s in &self.substs {
            out.push_str(&format!("subst {}\n", s.name));
            for (f, t) in &s.events {
                out.push_str(&format!("  map {f} {t}\n"));
            }
            for (f, t) in &s.labels {
                out.push_str(&format!("  maplabel {f} {t}\n"));
            }
        }
        for sc in &self.scenarios {
            if sc.symmetric.is_empty() {
                out.push_str(&format!("scenario {}\n", sc.name));
            } else {
                out.push_str(&format!(
                    "scenario {} symmetric {}\n",
                    sc.name,
                    sc.symmetric.join(" ")
                ));
            }
            for lane in &sc.lanes {
                out.push_str(&format!("  lane {}\n", lane.process));
                let items: Vec<String> = lane
                    .items
                    .iter()
                    .map(|it| match it {
                        LaneItem::Label(l) => format!("@{l}"),
                        LaneItem::Out(e) => format!("!{e}"),
                        LaneItem::In(e) => format!("?{e}"),
                    })
                    .collect();
                out.push_str(&format!("    {}\n", items.join(" ")));
            }
        }
        out
    }

    fn subst_by_name(&self, name: &str) -> Option<&Subst> {
        self.substs.iter().find(|s| s.name == name)
    }

    /// All lanes per process, original scenarios expanded with their
    /// symmetric copies, in file order.
    fn expanded_lanes(&self) -> Result<Vec<(String, Lane)>, ScenarioError> {
        let mut out = Vec::new();
        for sc in &self.scenarios {
            for lane in &sc.lanes {
                out.push((sc.name.clone(), lane.clone()));
            }
            for sname in &sc.symmetric {
                let s = self
                    .subst_by_name(sname)
                    .ok_or_else(|| ScenarioError::UnknownSubst {
                        scenario: sc.name.clone(),
                        subst: sname.clone(),
                    })?;
                for lane in &sc.lanes {
                    out.push((sc.name.clone(), s.apply(lane)));
                }
            }
        }
        Ok(out)
    }

    /// Compiles the scenario set into one skeleton automaton per process.
    pub fn compile(&self) -> Result<BTreeMap<String, Automaton>, ScenarioError> {
        if self.scenarios.is_empty() {
            return Err(ScenarioError::Empty);
        }
        let lanes = self.expanded_lanes()?;
        let mut processes: Vec<String> = Vec::new();
        for (_, lane) in &lanes {
            if !processes.contains(&lane.process) {
                processes.push(lane.process.clone());
            }
        }
        let mut result = BTreeMap::new();
        for proc in &processes {
            let a = compile_process(proc, lanes.iter().filter(|(_, l)| &l.process == proc))?;
            result.insert(proc.clone(), a);
        }
        Ok(result)
    }
}

fn compile_process<'a>(
    process: &str,
    lanes: impl Iterator<Item = &'a (String, Lane)>,
) -> Result<Automaton, ScenarioError> {
    let mut inputs: BTreeMap<EventId, ()> = BTreeMap::new();
    let mut outputs: BTreeMap<EventId, ()> = BTreeMap::new();
    let mut keys: HashMap<Key, usize> = HashMap::new();
    let mut key_of: Vec<Key> = Vec::new();
    let mut uf = UnionFind::new();
    let mut transitions: Vec<(usize, EventId, usize)> = Vec::new();
    let mut initial: Option<usize> = None;

    let node = |keys: &mut HashMap<Key, usize>,
                    key_of: &mut Vec<Key>,
                    uf: &mut UnionFind,
                    k: Key|
     -> usize {
        *keys.entry(k.clone()).or_insert_with(|| {
            key_of.push(k);
            uf.add()
        })
    };

    for (scenario, lane) in lanes {
        let mut items = lane.items.iter();
        let first_label = match items.next() {
            Some(LaneItem::Label(l)) => l.clone(),
            _ => {
                return Err(ScenarioError::UnlabeledLaneStart {
                    process: process.to_string(),
                    scenario: scenario.clone(),
                })
            }
        };
        let mut cur: Key = (first_label, Vec::new());
        let mut cur_node = node(&mut keys, &mut key_of, &mut uf, cur.clone());
        if initial.is_none() {
            initial = Some(cur_node);
        }
        for item in items {
            match item {
                LaneItem::Label(l) => {
                    let lk: Key = (l.clone(), Vec::new());
                    let ln = node(&mut keys, &mut key_of, &mut uf, lk.clone());
                    uf.union(cur_node, ln);
                    cur = lk;
                    cur_node = ln;
                }
                LaneItem::Out(e) | LaneItem::In(e) => {
                    let e = *e;
                    match item {
                        LaneItem::Out(_) => {
                            if inputs.contains_key(&e) {
                                return Err(ScenarioError::DirectionConflict {
                                    process: process.to_string(),
                                    event: e,
                                });
                            }
                            outputs.insert(e, ());
                        }
                        LaneItem::In(_) => {
                            if outputs.contains_key(&e) {
                                return Err(ScenarioError::DirectionConflict {
                                    process: process.to_string(),
                                    event: e,
                                });
                            }
                            inputs.insert(e, ());
                        }
                        LaneItem::Label(_) => unreachable!(),
                    }
                    let mut nk = cur.clone();
                    nk.1.push(e);
                    let nn = node(&mut keys, &mut key_of, &mut uf, nk.clone());
                    transitions.push((cur_node, e, nn));
                    cur = nk;
                    cur_node = nn;
                }
            }
        }
    }
    let initial = initial.expect("at least one lane per process");

    // Congruence closure: same source, same event => same target.
    loop {
        let mut merged = false;
        let mut by_src_ev: HashMap<(usize, EventId), usize> = HashMap::new();
        for &(s, e, d) in &transitions {
            let (rs, rd) = (uf.find(s), uf.find(d));
            match by_src_ev.get(&(rs, e)) {
                Some(&other) if uf.find(other) != rd => {
                    uf.union(other, rd);
                    merged = true;
                }
                Some(_) => {}
                None => {
                    by_src_ev.insert((rs, e), rd);
                }
            }
        }
        if !merged {
            break;
        }
    }

    // Name each class after its most concise member key: shortest suffix
    // first, then lexicographic. A bare label beats any suffix form.
    let mut class_members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for n in 0..key_of.len() {
        class_members.entry(uf.find(n)).or_default().push(n);
    }
    let key_name = |k: &Key| -> String {
        if k.1.is_empty() {
            k.0.clone()
        } else {
            let mut s = k.0.clone();
            for e in &k.1 {
                s.push('.');
                s.push_str(e.name());
            }
            s
        }
    };
    let mut names: BTreeMap<usize, String> = BTreeMap::new();
    for (&rep, members) in &class_members {
        let best = members
            .iter()
            .map(|&n| key_name(&key_of[n]))
            .min_by(|a, b| (a.len(), a.as_str()).cmp(&(b.len(), b.as_str())))
            .unwrap();
        names.insert(rep, best);
    }

    let mut b = AutomatonBuilder::new(process);
    for (&e, _) in &inputs {
        b.input(e.name());
    }
    for (&e, _) in &outputs {
        b.output(e.name());
    }
    // Creation order of the first member fixes the state order.
    let init_rep = uf.find(initial);
    b.state(&names[&init_rep]);
    for n in 0..key_of.len() {
        let rep = uf.find(n);
        b.state(&names[&rep]);
    }
    for &(s, e, d) in &transitions {
        let (rs, rd) = (uf.find(s), uf.find(d));
        let (sn, dn) = (names[&rs].clone(), names[&rd].clone());
        let si = b.state(&sn);
        let di = b.state(&dn);
        b.transition(si, e, di);
    }
    let init = b.state(&names[&init_rep]);
    b.set_initial(init);
    let a = b.build();
    for q in a.states() {
        if !a.is_deterministic_at(q) {
            return Err(ScenarioError::Nondeterministic {
                process: process.to_string(),
                state: a.state_name(q).to_string(),
            });
        }
    }
    Ok(a)
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("process '{process}' cannot execute lane step {step} ({event})")]
    Stuck {
        process: String,
        step: usize,
        event: EventId,
    },
    #[error("event '{event}' has the wrong direction at lane step {step}")]
    WrongDirection { step: usize, event: EventId },
}

/// Checks that a lane's event sequence is executable in `a`. The walk
/// starts at the state named like the lane's opening label if one exists;
/// otherwise any state may serve as the start (lanes produced by symmetry
/// substitutions describe behavior from a non-initial label).
/// Nondeterministic choices are resolved by backtracking.
pub fn replay_lane(a: &Automaton, lane: &Lane) -> Result<(), ReplayError> {
    use crate::automata::Direction;
    let events: Vec<(usize, EventId, Direction)> = lane
        .items
        .iter()
        .enumerate()
        .filter_map(|(i, it)| match it {
            LaneItem::Out(e) => Some((i, *e, Direction::Output)),
            LaneItem::In(e) => Some((i, *e, Direction::Input)),
            LaneItem::Label(_) => None,
        })
        .collect();
    for &(step, e, dir) in &events {
        if a.direction(e) != Some(dir) {
            return Err(ReplayError::WrongDirection { step, event: e });
        }
    }
    let starts: Vec<crate::automata::StateId> = match lane.items.first() {
        Some(LaneItem::Label(l)) => match a.state_by_name(l) {
            Some(q) => vec![q],
            None => a.states().collect(),
        },
        _ => vec![a.initial()],
    };
    // DFS over (position, state).
    let mut stack: Vec<(usize, crate::automata::StateId)> =
        starts.iter().map(|&q| (0usize, q)).collect();
    let mut seen = std::collections::HashSet::new();
    while let Some((pos, q)) = stack.pop() {
        if pos == events.len() {
            return Ok(());
        }
        if !seen.insert((pos, q)) {
            continue;
        }
        for d in a.successors(q, events[pos].1) {
            stack.push((pos + 1, d));
        }
    }
    // Report the deepest reachable failing step.
    let mut depth = events.len() - 1;
    let mut frontier = starts;
    for (i, &(_, e, _)) in events.iter().enumerate() {
        let next: Vec<_> = frontier
            .iter()
            .flat_map(|&q| a.successors(q, e).collect::<Vec<_>>())
            .collect();
        if next.is_empty() {
            depth = i;
            break;
        }
        frontier = next;
    }
    Err(ReplayError::Stuck {
        process: a.name().to_string(),
        step: events[depth].0,
        event: events[depth].1,
    })
}
