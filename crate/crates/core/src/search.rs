//! Explicit completion search.
//!
//! A completion instance is a set of components, some of which (the
//! targets) may receive additional transitions. The search explores sets
//! of candidate transitions in a tree where each child adds one candidate
//! with a higher index than the last, so every set is visited at most
//! once. Safety and liveness violations prune the whole subtree — adding
//! transitions only adds product behavior, so those violations can never
//! be repaired. Deadlocks and blocking are repairable and only cause
//! descent. Candidates are ordered by a similarity score favoring
//! transitions that mirror existing structure.

use crate::automata::{Automaton, StateClass, StateId, Transition};
use crate::compose::Product;
use crate::event::EventId;
use crate::verify::{quick_check_explored, Profile};
use std::collections::HashSet;

#[derive(Clone, Debug)]
pub struct Instance {
    pub components: Vec<Automaton>,
    /// Indices into `components` naming the incomplete ones.
    pub targets: Vec<usize>,
    pub profile: Profile,
}

/// One addable transition on one target component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub component: usize,
    pub transition: Transition,
    pub score: usize,
}

impl Instance {
    /// All viable candidates in heuristic order. A candidate is viable
    /// when it can belong to some deterministic completion: inputs may be
    /// added to input or deadlock states, outputs only to deadlock states,
    /// and never on a (state, event) pair the skeleton already covers.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for &ci in &self.targets {
            let a = &self.components[ci];
            let events: Vec<(EventId, bool)> = a
                .inputs()
                .iter()
                .map(|&e| (e, true))
                .chain(a.outputs().iter().map(|&e| (e, false)))
                .collect();
            for q in a.states() {
                let class = a.classify_state(q).unwrap();
                for &(e, is_input) in &events {
                    let viable = match class {
                        StateClass::Deadlock => true,
                        StateClass::Input => is_input && !a.has_transition(q, e),
                        StateClass::Output | StateClass::Mixed => false,
                    };
                    if !viable {
                        continue;
                    }
                    for dst in a.states() {
                        out.push(Candidate {
                            component: ci,
                            transition: Transition::new(q, e, dst),
                            score: similarity(a, q, e, dst),
                        });
                    }
                }
            }
        }
        // Stable sort: descending score, then declaration order of the
        // component, then (src, event name, dst).
        out.sort_by(|x, y| {
            y.score
                .cmp(&x.score)
                .then(x.component.cmp(&y.component))
                .then(x.transition.src.cmp(&y.transition.src))
                .then(x.transition.event.name().cmp(y.transition.event.name()))
                .then(x.transition.dst.cmp(&y.transition.dst))
        });
        out
    }

    pub fn completed(&self, added: &[(usize, Transition)]) -> Vec<Automaton> {
        let mut comps = self.components.clone();
        for &ci in &self.targets {
            let extra: Vec<Transition> = added
                .iter()
                .filter(|(c, _)| *c == ci)
                .map(|&(_, t)| t)
                .collect();
            if !extra.is_empty() {
                comps[ci] = comps[ci].completed_with(&extra);
            }
        }
        comps
    }
}

/// How much `q --e--> dst` resembles existing structure: the number of
/// other events `e2` witnessed by some state `p` that moves like `q` on
/// `e2` and already has the `e` transition to `dst`.
fn similarity(a: &Automaton, q: StateId, e: EventId, dst: StateId) -> usize {
    let peers: Vec<StateId> = a
        .transitions()
        .iter()
        .filter(|t| t.event == e && t.dst == dst)
        .map(|t| t.src)
        .collect();
    if peers.is_empty() {
        return 0;
    }
    let mut events = std::collections::BTreeSet::new();
    for t in a.outgoing(q) {
        if t.event == e {
            continue;
        }
        if peers
            .iter()
            .any(|&p| a.successors(p, t.event).any(|r| r == t.dst))
        {
            events.insert(t.event);
        }
    }
    events.len()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Nodes whose product was explored and verified.
    pub nodes: u64,
    pub pruned_safety: u64,
    pub pruned_liveness: u64,
    pub pruned_determinism: u64,
    pub memo_hits: u64,
}

#[derive(Clone, Debug)]
pub enum SearchResult {
    /// Added transitions of a completion passing the whole profile.
    Solution(Vec<(usize, Transition)>, SearchStats),
    /// The full candidate tree was exhausted without a solution.
    Unsat(SearchStats),
    /// The node budget ran out before the tree was exhausted.
    BudgetExhausted(SearchStats),
}

impl SearchResult {
    pub fn stats(&self) -> SearchStats {
        match self {
            SearchResult::Solution(_, s) => *s,
            SearchResult::Unsat(s) => *s,
            SearchResult::BudgetExhausted(s) => *s,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub budget: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { budget: 1_000_000 }
    }
}

struct Searcher<'a> {
    instance: &'a Instance,
    candidates: Vec<Candidate>,
    memo: HashSet<Box<[u32]>>,
    stats: SearchStats,
    budget: u64,
    exhausted: bool,
}

pub fn solve(instance: &Instance, config: &SearchConfig) -> SearchResult {
    let mut s = Searcher {
        instance,
        candidates: instance.candidates(),
        memo: HashSet::new(),
        stats: SearchStats::default(),
        budget: config.budget,
        exhausted: false,
    };
    let mut added: Vec<u32> = Vec::new();
    s.memo.insert(Box::from(&added[..]));
    match s.dfs(&mut added) {
        Some(sol) => {
            let added = sol
                .iter()
                .map(|&i| {
                    let c = s.candidates[i as usize];
                    (c.component, c.transition)
                })
                .collect();
            SearchResult::Solution(added, s.stats)
        }
        None if s.exhausted => SearchResult::BudgetExhausted(s.stats),
        None => SearchResult::Unsat(s.stats),
    }
}

impl Searcher<'_> {
    fn dfs(&mut self, added: &mut Vec<u32>) -> Option<Vec<u32>> {
        if self.stats.nodes >= self.budget {
            self.exhausted = true;
            return None;
        }
        self.stats.nodes += 1;
        let pairs: Vec<(usize, Transition)> = added
            .iter()
            .map(|&i| {
                let c = self.candidates[i as usize];
                (c.component, c.transition)
            })
            .collect();
        let comps = self.instance.completed(&pairs);
        let product = Product::new(comps).expect("instance components must compose");
        let ex = product.explore();
        let v = quick_check_explored(&product, &ex, &self.instance.profile);
        if !v.safe {
            self.stats.pruned_safety += 1;
            return None;
        }
        if !v.live {
            self.stats.pruned_liveness += 1;
            return None;
        }
        if v.all_pass() {
            return Some(added.clone());
        }
        let start = added.last().map(|&l| l as usize + 1).unwrap_or(0);
        for i in start..self.candidates.len() {
            added.push(i as u32);
            let fresh = self.memo.insert(Box::from(&added[..]));
            if !fresh {
                self.stats.memo_hits += 1;
                added.pop();
                continue;
            }
            if self.breaks_determinism(added) {
                self.stats.pruned_determinism += 1;
                added.pop();
                continue;
            }
            if let Some(sol) = self.dfs(added) {
                return Some(sol);
            }
            added.pop();
            if self.exhausted {
                return None;
            }
        }
        None
    }

    /// Whether the last added candidate makes its source state
    /// nondeterministic in the completed component.
    fn breaks_determinism(&self, added: &[u32]) -> bool {
        let last = self.candidates[*added.last().unwrap() as usize];
        let a = &self.instance.components[last.component];
        let q = last.transition.src;
        let mut events: Vec<EventId> =
            a.outgoing(q).iter().map(|t| t.event).collect();
        for &i in added {
            let c = self.candidates[i as usize];
            if c.component == last.component && c.transition.src == q {
                events.push(c.transition.event);
            }
        }
        if events.len() <= 1 {
            return false;
        }
        // Multiple transitions: all must be pairwise-distinct inputs.
        let mut seen = std::collections::BTreeSet::new();
        for e in events {
            if !a.inputs().contains(&e) || !seen.insert(e) {
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::AutomatonBuilder;
    use crate::compose::compose_all;
    use crate::fixtures;
    use crate::verify::{verify_all, NbMode};

    fn abp_instance(sender: Automaton, receiver: Automaton) -> Instance {
        let mut components = vec![sender, receiver];
        components.extend(fixtures::abp_environment());
        Instance {
            components,
            targets: vec![0, 1],
            profile: Profile::full(NbMode::Strong),
        }
    }

    #[test]
    fn similarity_prefers_mirrored_structure() {
        let a = fixtures::abp_sender_all_skeleton();
        let q = a.state_by_name("a3").unwrap();
        let timeout = EventId::new("timeout");
        let mirrored = similarity(&a, q, timeout, a.state_by_name("a4").unwrap());
        let self_loop = similarity(&a, q, timeout, q);
        assert!(mirrored > self_loop);
    }

    #[test]
    fn first_scenario_instance_completes_with_six_additions() {
        let inst = abp_instance(
            fixtures::abp_sender_scenario1_skeleton(),
            fixtures::abp_receiver_scenario1_skeleton(),
        );
        let r = solve(&inst, &SearchConfig::default());
        let (added, _) = match r {
            SearchResult::Solution(a, s) => (a, s),
            other => panic!("expected solution, got {other:?}"),
        };
        assert_eq!(added.len(), 6);
        let comps = inst.completed(&added);
        let p = compose_all(&comps).unwrap();
        assert!(verify_all(&p, &Profile::full(NbMode::Strong)).passed());
        assert!(verify_all(&p, &Profile::full(NbMode::Weak)).passed());
    }

    #[test]
    fn all_scenarios_instance_completes_with_eight_additions() {
        let inst = abp_instance(
            fixtures::abp_sender_all_skeleton(),
            fixtures::abp_receiver_all_skeleton(),
        );
        let r = solve(&inst, &SearchConfig::default());
        let (added, _) = match r {
            SearchResult::Solution(a, s) => (a, s),
            other => panic!("expected solution, got {other:?}"),
        };
        assert_eq!(added.len(), 8);
        // All additions land on the sender; the receiver is complete.
        assert!(added.iter().all(|(c, _)| *c == 0));
        let comps = inst.completed(&added);
        let p = compose_all(&comps).unwrap();
        assert!(verify_all(&p, &Profile::full(NbMode::Strong)).passed());
    }

    #[test]
    fn tiny_budget_reports_exhaustion() {
        let inst = abp_instance(
            fixtures::abp_sender_scenario1_skeleton(),
            fixtures::abp_receiver_scenario1_skeleton(),
        );
        let r = solve(&inst, &SearchConfig { budget: 3 });
        assert!(matches!(r, SearchResult::BudgetExhausted(_)));
    }

    #[test]
    fn unsatisfiable_instance_reports_unsat() {
        // x_uns can never fire: the listener has no transitions at all and
        // is not a completion target, so every node deadlocks.
        let mut a = AutomatonBuilder::new("src");
        a.output("x_uns");
        a.trans("u0", "x_uns", "u1");
        let q = a.state("u0");
        a.set_initial(q);
        let mut b = AutomatonBuilder::new("sink");
        b.input("x_uns");
        b.state("v0");
        let q = b.state("v0");
        b.set_initial(q);
        let inst = Instance {
            components: vec![a.build(), b.build()],
            targets: vec![0],
            profile: Profile::deadlock_only(),
        };
        let r = solve(&inst, &SearchConfig::default());
        assert!(matches!(r, SearchResult::Unsat(_)), "{r:?}");
    }

    #[test]
    fn complete_instance_solves_at_the_root() {
        let inst = abp_instance(
            fixtures::abp_sender_manual(),
            fixtures::abp_receiver_manual(),
        );
        let r = solve(&inst, &SearchConfig::default());
        match r {
            SearchResult::Solution(added, stats) => {
                assert!(added.is_empty());
                assert_eq!(stats.nodes, 1);
            }
            other => panic!("expected root solution, got {other:?}"),
        }
    }
}
