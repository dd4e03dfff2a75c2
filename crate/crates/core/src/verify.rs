//! Verification of composed products: deadlock-freedom, safety (error
//! states unreachable), liveness (no reachable accepting cycle), and
//! non-blockingness. Liveness is decided both by nested depth-first search
//! and by SCC decomposition; the two must agree.

use crate::automata::{Direction, StateClass};
use crate::compose::{Explored, GlobalState, Product};
use crate::event::EventId;
use std::collections::{BTreeSet, VecDeque};

/// Non-blockingness flavor.
///
/// A component is *willing* to output `x` when its current local state has
/// an `x`-labeled output transition. Strong: a violation is a reachable
/// global state where some component is willing to output `x`, the
/// multicast on `x` is not enabled, and every listener sits at a
/// non-output state (no excuse of being busy sending). Weak: a violation
/// is a reachable global state where some component is willing to output
/// `x` and no `x`-labeled product transition is reachable from there.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NbMode {
    Strong,
    Weak,
}

/// Which checks to run on a product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Profile {
    pub deadlock: bool,
    pub safety: bool,
    pub liveness: bool,
    pub nonblocking: Option<NbMode>,
}

impl Profile {
    pub fn full(nb: NbMode) -> Profile {
        Profile {
            deadlock: true,
            safety: true,
            liveness: true,
            nonblocking: Some(nb),
        }
    }

    pub fn deadlock_only() -> Profile {
        Profile {
            deadlock: true,
            safety: false,
            liveness: false,
            nonblocking: None,
        }
    }
}

/// A finite run of the product, optionally closed into a lasso: when
/// `loop_start` is `Some(k)`, the final state equals `states[k]` and the
/// suffix from `k` repeats forever.
#[derive(Clone, Debug)]
pub struct Trace {
    pub events: Vec<EventId>,
    pub states: Vec<GlobalState>,
    pub loop_start: Option<usize>,
}

impl Trace {
    /// Re-executes the trace on the product, checking every step is an
    /// enabled product step and the lasso (if any) closes.
    pub fn replay(&self, p: &Product) -> bool {
        if self.states.len() != self.events.len() + 1 {
            return false;
        }
        if self.states[0] != p.initial() {
            return false;
        }
        for (i, &e) in self.events.iter().enumerate() {
            let ok = p
                .steps(&self.states[i])
                .iter()
                .any(|s| s.event == e && s.dst == self.states[i + 1]);
            if !ok {
                return false;
            }
        }
        match self.loop_start {
            None => true,
            Some(k) => k < self.states.len() && self.states.last() == Some(&self.states[k]),
        }
    }
}

/// A non-blockingness violation: at the last state of `trace`, component
/// `component` is willing to output `event` but blocked.
#[derive(Clone, Debug)]
pub struct BlockingWitness {
    pub trace: Trace,
    pub component: String,
    pub event: EventId,
    pub mode: NbMode,
}

/// Full verification result. `None` per field means the corresponding
/// check passed or was not requested.
#[derive(Clone, Debug)]
pub struct Report {
    pub n_states: usize,
    pub deadlock: Option<Trace>,
    pub safety: Option<Trace>,
    pub liveness: Option<Trace>,
    pub blocking: Option<BlockingWitness>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.deadlock.is_none()
            && self.safety.is_none()
            && self.liveness.is_none()
            && self.blocking.is_none()
    }
}

/// Witness-free verdict used in search inner loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuickVerdict {
    pub deadlock_free: bool,
    pub safe: bool,
    pub live: bool,
    pub nonblocking: bool,
}

impl QuickVerdict {
    pub fn all_pass(&self) -> bool {
        self.deadlock_free && self.safe && self.live && self.nonblocking
    }
}

fn deadlock_state(ex: &Explored) -> Option<usize> {
    ex.edges.iter().position(|out| out.is_empty())
}

fn error_state(p: &Product, ex: &Explored) -> Option<usize> {
    ex.states.iter().position(|g| p.is_error(g))
}

/// Liveness by SCC decomposition (iterative Tarjan): a violation is a
/// reachable SCC that contains an accepting state and carries at least one
/// cycle (more than one state, or a self-loop).
pub fn accepting_scc(p: &Product, ex: &Explored) -> Option<Vec<usize>> {
    let n = ex.n_states();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut best: Option<Vec<usize>> = None;

    // call stack: (node, next child position)
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut ci)) = call.last_mut() {
            if *ci < ex.edges[v].len() {
                let w = ex.edges[v][*ci].dst;
                *ci += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&mut (u, _)) = call.last_mut() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut scc = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        scc.push(w);
                        if w == v {
                            break;
                        }
                    }
                    let cyclic = scc.len() > 1
                        || ex.edges[scc[0]].iter().any(|e| e.dst == scc[0]);
                    if cyclic && scc.iter().any(|&s| p.is_accepting(&ex.states[s])) {
                        // Keep the SCC whose smallest member has the
                        // smallest BFS index, for deterministic witnesses.
                        let key = *scc.iter().min().unwrap();
                        if best
                            .as_ref()
                            .map(|b| key < *b.iter().min().unwrap())
                            .unwrap_or(true)
                        {
                            best = Some(scc);
                        }
                    }
                }
            }
        }
    }
    best
}

/// Liveness by nested depth-first search: returns true iff some reachable
/// accepting state lies on a cycle.
pub fn accepting_cycle_ndfs(p: &Product, ex: &Explored) -> bool {
    let n = ex.n_states();
    let accepting: Vec<bool> = ex.states.iter().map(|g| p.is_accepting(g)).collect();
    let mut blue = vec![false; n];
    let mut red = vec![false; n];
    let mut on_outer = vec![false; n];

    // Outer (blue) DFS with explicit stack; inner (red) search launched at
    // the post-order visit of each accepting state.
    let mut outer: Vec<(usize, usize)> = vec![(ex.initial, 0)];
    blue[ex.initial] = true;
    on_outer[ex.initial] = true;
    while let Some(&mut (v, ref mut ci)) = outer.last_mut() {
        if *ci < ex.edges[v].len() {
            let w = ex.edges[v][*ci].dst;
            *ci += 1;
            if !blue[w] {
                blue[w] = true;
                on_outer[w] = true;
                outer.push((w, 0));
            }
            continue;
        }
        outer.pop();
        on_outer[v] = false;
        if !accepting[v] {
            continue;
        }
        // Inner search: from v, can we close a cycle back to v? Reaching
        // any state still on the outer stack also implies a cycle through
        // an accepting state (v is a descendant of all of them).
        let mut inner: Vec<usize> = vec![v];
        while let Some(u) = inner.pop() {
            for e in &ex.edges[u] {
                let w = e.dst;
                if w == v || on_outer[w] {
                    return true;
                }
                if !red[w] {
                    red[w] = true;
                    inner.push(w);
                }
            }
        }
    }
    false
}

/// BFS shortest path (as a list of state indices) from the initial state
/// to the first state satisfying `target`.
fn shortest_path(ex: &Explored, target: impl Fn(usize) -> bool) -> Vec<usize> {
    if target(ex.initial) {
        return vec![ex.initial];
    }
    let mut parent = vec![usize::MAX; ex.n_states()];
    let mut queue = VecDeque::new();
    parent[ex.initial] = ex.initial;
    queue.push_back(ex.initial);
    while let Some(v) = queue.pop_front() {
        for e in &ex.edges[v] {
            if parent[e.dst] != usize::MAX {
                continue;
            }
            parent[e.dst] = v;
            if target(e.dst) {
                let mut path = vec![e.dst];
                let mut cur = e.dst;
                while cur != ex.initial {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return path;
            }
            queue.push_back(e.dst);
        }
    }
    Vec::new()
}

/// Shortest cycle through `start` staying inside `members`.
fn cycle_through(ex: &Explored, start: usize, members: &BTreeSet<usize>) -> Vec<usize> {
    // BFS from successors of start back to start.
    let mut parent = vec![usize::MAX; ex.n_states()];
    let mut queue = VecDeque::new();
    for e in &ex.edges[start] {
        if e.dst == start {
            return vec![start, start];
        }
        if members.contains(&e.dst) && parent[e.dst] == usize::MAX {
            parent[e.dst] = start;
            queue.push_back(e.dst);
        }
    }
    while let Some(v) = queue.pop_front() {
        for e in &ex.edges[v] {
            if e.dst == start {
                let mut rev = Vec::new();
                let mut c = v;
                while c != start {
                    rev.push(c);
                    c = parent[c];
                }
                rev.reverse();
                let mut fwd = vec![start];
                fwd.extend(rev);
                fwd.push(start);
                return fwd;
            }
            if members.contains(&e.dst) && parent[e.dst] == usize::MAX {
                parent[e.dst] = v;
                queue.push_back(e.dst);
            }
        }
    }
    Vec::new()
}

fn path_to_trace(ex: &Explored, path: &[usize], loop_start: Option<usize>) -> Trace {
    let mut events = Vec::new();
    for w in path.windows(2) {
        let e = ex.edges[w[0]]
            .iter()
            .find(|e| e.dst == w[1])
            .expect("path edge must exist");
        events.push(e.event);
    }
    Trace {
        events,
        states: path.iter().map(|&s| ex.states[s].clone()).collect(),
        loop_start,
    }
}

/// Strong non-blockingness violations, as (state, component, event).
fn strong_blocking(p: &Product, ex: &Explored) -> Option<(usize, usize, EventId)> {
    for (s, g) in ex.states.iter().enumerate() {
        for (i, a) in p.components().iter().enumerate() {
            for t in a.outgoing(g[i]) {
                if a.direction(t.event) != Some(Direction::Output) {
                    continue;
                }
                if p.sync_enabled(g, t.event) {
                    continue;
                }
                let all_non_output = p.listeners(t.event).iter().all(|&j| {
                    j == i
                        || p.components()[j].classify_state(g[j]).unwrap()
                            != StateClass::Output
                });
                if all_non_output {
                    return Some((s, i, t.event));
                }
            }
        }
    }
    None
}

/// Weak non-blockingness violations: component willing to output `x` at a
/// state from which no `x`-labeled product transition is reachable.
fn weak_blocking(p: &Product, ex: &Explored) -> Option<(usize, usize, EventId)> {
    // Events someone is willing to send somewhere.
    let mut events: BTreeSet<EventId> = BTreeSet::new();
    for a in p.components() {
        events.extend(a.outputs());
    }
    // can_reach[e] = states from which an e-labeled edge is reachable,
    // via backward closure from the sources of e-edges.
    let n = ex.n_states();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, out) in ex.edges.iter().enumerate() {
        for e in out {
            rev[e.dst].push(s);
        }
    }
    for &x in &events {
        let mut ok = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for (s, out) in ex.edges.iter().enumerate() {
            if out.iter().any(|e| e.event == x) && !ok[s] {
                ok[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &u in &rev[v] {
                if !ok[u] {
                    ok[u] = true;
                    queue.push_back(u);
                }
            }
        }
        for (s, g) in ex.states.iter().enumerate() {
            if ok[s] {
                continue;
            }
            for (i, a) in p.components().iter().enumerate() {
                if a.outputs().contains(&x) && a.has_transition(g[i], x) {
                    return Some((s, i, x));
                }
            }
        }
    }
    None
}

/// Runs the requested checks and extracts shortest witnesses.
pub fn verify_all(p: &Product, profile: &Profile) -> Report {
    let ex = p.explore();
    verify_explored(p, &ex, profile)
}

pub fn verify_explored(p: &Product, ex: &Explored, profile: &Profile) -> Report {
    let mut report = Report {
        n_states: ex.n_states(),
        deadlock: None,
        safety: None,
        liveness: None,
        blocking: None,
    };
    if profile.deadlock {
        if let Some(d) = deadlock_state(ex) {
            let path = shortest_path(ex, |s| s == d);
            report.deadlock = Some(path_to_trace(ex, &path, None));
        }
    }
    if profile.safety {
        if let Some(s) = error_state(p, ex) {
            let path = shortest_path(ex, |x| x == s);
            report.safety = Some(path_to_trace(ex, &path, None));
        }
    }
    if profile.liveness {
        let scc = accepting_scc(p, ex);
        debug_assert_eq!(scc.is_some(), accepting_cycle_ndfs(p, ex));
        if let Some(scc) = scc {
            let members: BTreeSet<usize> = scc.iter().copied().collect();
            let anchor = *scc
                .iter()
                .filter(|&&s| p.is_accepting(&ex.states[s]))
                .min()
                .unwrap();
            let prefix = shortest_path(ex, |s| s == anchor);
            let cycle = cycle_through(ex, anchor, &members);
            let mut path = prefix.clone();
            path.extend(&cycle[1..]);
            let loop_start = Some(prefix.len() - 1);
            report.liveness = Some(path_to_trace(ex, &path, loop_start));
        }
    }
    if let Some(mode) = profile.nonblocking {
        let hit = match mode {
            NbMode::Strong => strong_blocking(p, ex),
            NbMode::Weak => weak_blocking(p, ex),
        };
        if let Some((s, i, e)) = hit {
            let path = shortest_path(ex, |x| x == s);
            report.blocking = Some(BlockingWitness {
                trace: path_to_trace(ex, &path, None),
                component: p.components()[i].name().to_string(),
                event: e,
                mode,
            });
        }
    }
    report
}

/// Witness-free verification for search inner loops. Checks not in the
/// profile report as passing.
pub fn quick_check(p: &Product, profile: &Profile) -> QuickVerdict {
    let ex = p.explore();
    quick_check_explored(p, &ex, profile)
}

pub fn quick_check_explored(p: &Product, ex: &Explored, profile: &Profile) -> QuickVerdict {
    QuickVerdict {
        deadlock_free: !profile.deadlock || deadlock_state(ex).is_none(),
        safe: !profile.safety || error_state(p, ex).is_none(),
        live: !profile.liveness || accepting_scc(p, ex).is_none(),
        nonblocking: match profile.nonblocking {
            None => true,
            Some(NbMode::Strong) => strong_blocking(p, ex).is_none(),
            Some(NbMode::Weak) => weak_blocking(p, ex).is_none(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{Automaton, AutomatonBuilder, Transition};
    use crate::compose::compose_all;
    use crate::event::EventId;
    use crate::fixtures;

    fn abp_product(sender: Automaton, receiver: Automaton) -> Product {
        let mut comps = vec![sender, receiver];
        comps.extend(fixtures::abp_environment());
        compose_all(&comps).unwrap()
    }

    #[test]
    fn manual_solution_passes_full_profile() {
        let p = abp_product(fixtures::abp_sender_manual(), fixtures::abp_receiver_manual());
        let r = verify_all(&p, &Profile::full(NbMode::Strong));
        assert!(r.deadlock.is_none(), "deadlock: {:?}", r.deadlock);
        assert!(r.safety.is_none(), "safety: {:?}", r.safety);
        assert!(r.liveness.is_none(), "liveness: {:?}", r.liveness);
        assert!(r.blocking.is_none(), "blocking: {:?}", r.blocking);
        let r = verify_all(&p, &Profile::full(NbMode::Weak));
        assert!(r.passed());
    }

    #[test]
    fn computed_variant_passes_full_profile() {
        let p = abp_product(fixtures::abp_sender_computed(), fixtures::abp_receiver_manual());
        assert!(verify_all(&p, &Profile::full(NbMode::Strong)).passed());
    }

    #[test]
    fn skeleton_violates_strong_nonblocking() {
        let p = abp_product(
            fixtures::abp_sender_scenario1_skeleton(),
            fixtures::abp_receiver_scenario1_skeleton(),
        );
        let r = verify_all(&p, &Profile::full(NbMode::Strong));
        let b = r.blocking.expect("skeleton must block");
        assert!(b.trace.replay(&p));
    }

    #[test]
    fn ignoring_duplicates_without_acking_fails_liveness() {
        // Receiver that swallows duplicate packets silently: packets keep
        // arriving but are neither delivered nor acknowledged.
        let base = fixtures::abp_receiver_scenario1_skeleton();
        let r0 = base.state_by_name("r0").unwrap();
        let r3 = base.state_by_name("r3").unwrap();
        let bad = base.completed_with(&[
            Transition::new(r0, EventId::new("p1'"), r0),
            Transition::new(r3, EventId::new("p0'"), r3),
        ]);
        let p = abp_product(fixtures::abp_sender_manual(), bad);
        let r = verify_all(&p, &Profile::full(NbMode::Strong));
        let lasso = r.liveness.expect("must violate liveness");
        assert!(lasso.replay(&p));
        assert!(lasso.loop_start.is_some());
    }

    #[test]
    fn deadlock_witness_is_shortest() {
        // a emits x_dl1 then wants x_dl2; b only ever accepts x_dl1.
        let mut a = AutomatonBuilder::new("a");
        a.output("x_dl1");
        a.output("x_dl2");
        a.trans("a0", "x_dl1", "a1");
        a.trans("a1", "x_dl2", "a2");
        let q = a.state("a0");
        a.set_initial(q);
        let mut b = AutomatonBuilder::new("b");
        b.input("x_dl1");
        b.input("x_dl2");
        b.trans("b0", "x_dl1", "b1");
        let q = b.state("b0");
        b.set_initial(q);
        let p = compose_all(&[a.build(), b.build()]).unwrap();
        let r = verify_all(&p, &Profile::deadlock_only());
        let t = r.deadlock.expect("deadlocks");
        assert_eq!(t.events.len(), 1); // after x_dl1, x_dl2 blocks forever
        assert!(t.replay(&p));
    }

    #[test]
    fn safety_witness_reaches_error() {
        // Receiver delivering before any send trips the alternation monitor.
        let mut r = AutomatonBuilder::new("rogue");
        r.output("deliver");
        r.trans("u", "deliver", "v");
        let q = r.state("u");
        r.set_initial(q);
        let p = compose_all(&[r.build(), fixtures::safety_monitor()]).unwrap();
        let rep = verify_all(
            &p,
            &Profile {
                deadlock: false,
                safety: true,
                liveness: false,
                nonblocking: None,
            },
        );
        let t = rep.safety.expect("unsafe");
        assert_eq!(t.events.len(), 1);
        assert!(t.replay(&p));
    }

    #[test]
    fn ndfs_and_scc_agree_on_abp_products() {
        for (s, r) in [
            (fixtures::abp_sender_manual(), fixtures::abp_receiver_manual()),
            (
                fixtures::abp_sender_scenario1_skeleton(),
                fixtures::abp_receiver_scenario1_skeleton(),
            ),
        ] {
            let p = abp_product(s, r);
            let ex = p.explore();
            assert_eq!(
                accepting_scc(&p, &ex).is_some(),
                accepting_cycle_ndfs(&p, &ex)
            );
        }
    }

    #[test]
    fn weak_blocking_detected() {
        // a wants to emit x_wb forever; b never accepts it anywhere.
        let mut a = AutomatonBuilder::new("a");
        a.output("x_wb");
        a.output("y_wb");
        a.trans("a0", "x_wb", "a0");
        a.trans("a0", "y_wb", "a0");
        let q = a.state("a0");
        a.set_initial(q);
        let mut b = AutomatonBuilder::new("b");
        b.input("x_wb");
        b.input("y_wb");
        b.trans("b0", "y_wb", "b0");
        let q = b.state("b0");
        b.set_initial(q);
        let p = compose_all(&[a.build(), b.build()]).unwrap();
        let prof = Profile {
            deadlock: false,
            safety: false,
            liveness: false,
            nonblocking: Some(NbMode::Weak),
        };
        let r = verify_all(&p, &prof);
        let w = r.blocking.expect("weakly blocked");
        assert_eq!(w.event.name(), "x_wb");
        // Strong blocking holds here too: b is at an input state.
        let prof = Profile {
            nonblocking: Some(NbMode::Strong),
            ..prof
        };
        assert!(verify_all(&p, &prof).blocking.is_some());
    }

    #[test]
    fn output_listener_is_excused_in_strong_mode() {
        // b is busy outputting z_ex; a's pending x_ex is not a strong
        // violation while b is at an output state, but it is a weak one
        // since no x_ex edge ever fires.
        let mut a = AutomatonBuilder::new("a");
        a.output("x_ex");
        a.trans("a0", "x_ex", "a1");
        let q = a.state("a0");
        a.set_initial(q);
        let mut b = AutomatonBuilder::new("b");
        b.input("x_ex");
        b.output("z_ex");
        b.trans("b0", "z_ex", "b0");
        let q = b.state("b0");
        b.set_initial(q);
        let p = compose_all(&[a.build(), b.build()]).unwrap();
        let strong = Profile {
            deadlock: false,
            safety: false,
            liveness: false,
            nonblocking: Some(NbMode::Strong),
        };
        assert!(verify_all(&p, &strong).blocking.is_none());
        let weak = Profile {
            nonblocking: Some(NbMode::Weak),
            ..strong
        };
        assert!(verify_all(&p, &weak).blocking.is_some());
    }

    #[test]
    fn replay_rejects_tampered_trace() {
        let p = abp_product(fixtures::abp_sender_manual(), fixtures::abp_receiver_manual());
        let step = &p.steps(&p.initial())[0];
        let good = Trace {
            events: vec![step.event],
            states: vec![p.initial(), step.dst.clone()],
            loop_start: None,
        };
        assert!(good.replay(&p));
        // A multicast moves every listener, so keeping a listener in place
        // is not a valid step.
        let bad = Trace {
            events: vec![step.event],
            states: vec![p.initial(), p.initial()],
            loop_start: None,
        };
        assert!(!bad.replay(&p));
        // A lasso must close on the claimed loop entry.
        let open = Trace {
            loop_start: Some(0),
            ..good
        };
        assert!(!open.replay(&p));
    }
}
