//! Symbolic completion over binary decision diagrams.
//!
//! The unknown completion is encoded as *parameter variables*: one slot
//! per viable (state, event) pair of a target component, holding either a
//! successor state or a "no transition" mark. The product transition
//! relation, determinism, and the verified properties all become BDD
//! predicates over (parameter bits, state bits); the set of good
//! completions is computed once and satisfying assignments are decoded
//! back into transitions. Parameter bits sit at the top of the order,
//! state bits follow with current and next copies interleaved.
//! Non-blockingness in the weak sense is not encoded directly:
//! candidates are checked explicitly and refuted ones excluded from the
//! solution set.

use crate::automata::{Automaton, Direction, StateId, Transition};
use crate::bdd::{Bdd, BddError, Ref, FALSE, TRUE};
use crate::compose::{compose_all, Product};
use crate::event::EventId;
use crate::search::Instance;
use crate::verify::{verify_all, NbMode, Profile};
use std::collections::{BTreeSet, HashMap};

#[derive(Clone, Copy, Debug, Default)]
pub struct SymbolicStats {
    /// Total BDD variables (state bits plus parameter bits).
    pub n_vars: usize,
    /// Arena size after solving.
    pub n_nodes: usize,
    /// Number of completions decoded and verified explicitly.
    pub candidates_tried: u64,
}

#[derive(Clone, Debug)]
pub enum SymbolicResult {
    Solution(Vec<(usize, Transition)>, SymbolicStats),
    Unsat(SymbolicStats),
    /// The node cap or the retry limit was hit.
    ResourceExhausted(SymbolicStats),
}

#[derive(Clone, Copy, Debug)]
pub struct SymbolicConfig {
    pub node_cap: usize,
    /// Upper bound on decode-verify-exclude rounds.
    pub max_retries: u64,
}

impl Default for SymbolicConfig {
    fn default() -> Self {
        SymbolicConfig {
            node_cap: Bdd::DEFAULT_NODE_CAP,
            max_retries: 10_000,
        }
    }
}

/// One undetermined (state, event) pair of a target component.
struct Slot {
    component: usize,
    src: StateId,
    event: EventId,
    is_input: bool,
    /// Parameter bit variables, least significant first.
    vars: Vec<u32>,
    /// Number of states of the component; valid target codes are below it.
    n_states: u32,
    /// All-ones code reserved for "add no transition"; codes between
    /// `n_states` and `bot` are excluded by the domain constraint.
    bot: u32,
}

fn bits_for(codes: usize) -> u32 {
    if codes <= 1 {
        0
    } else {
        (codes - 1).ilog2() + 1
    }
}

struct Encoding {
    bdd: Bdd,
    components: Vec<Automaton>,
    profile: Profile,
    /// First BDD variable of the state block (parameters sit below it).
    state_base: u32,
    /// Per component, global state-bit indices; bit k lives at BDD
    /// variable state_base + 2k (current) and state_base + 2k + 1 (next).
    comp_bits: Vec<Vec<u32>>,
    slots: Vec<Slot>,
    cur_vars: Vec<u32>,
    init: Ref,
    /// Partitioned transition relation: per event, the movers' bits only.
    /// Framed components are handled by not quantifying their variables.
    parts: Vec<Part>,
    /// Parameter domain and determinism constraints.
    constraint: Ref,
    error: Ref,
    accepting: Ref,
    deadlock: Ref,
    strong_nb: Ref,
    /// Extra garbage-collection roots owned by in-flight fixpoints.
    keep: Vec<Ref>,
    node_cap: usize,
    /// Arena size that triggers a collection; adapted after each one so
    /// collections stay rare relative to the live working set (each clears
    /// the operation cache, which is expensive to repopulate).
    gc_threshold: usize,
}

/// One event's slice of the transition relation, over the current and
/// next bits of the participating components plus the parameters.
struct Part {
    rel: Ref,
    mover_cur: Vec<u32>,
    mover_next: Vec<u32>,
    cur2next: HashMap<u32, u32>,
    next2cur: HashMap<u32, u32>,
}

type R<T> = Result<T, BddError>;

impl Encoding {
    fn build(instance: &Instance, product: &Product, node_cap: usize) -> R<Encoding> {
        let comps = product.components();

        // Parameter slots come first in the variable order: the reachable
        // set is a function from parameter valuations to state sets, and
        // parameters-on-top lets distinct valuations share equal state-set
        // subgraphs. Slots follow the same (component, state, event) order
        // the explicit engine derives its candidates from.
        let mut slots: Vec<Slot> = Vec::new();
        let mut pv = 0u32;
        let mut slot_of: HashMap<(usize, StateId, EventId), usize> = HashMap::new();
        for &ci in &instance.targets {
            let a = &comps[ci];
            let events: Vec<(EventId, bool)> = a
                .inputs()
                .iter()
                .map(|&e| (e, true))
                .chain(a.outputs().iter().map(|&e| (e, false)))
                .collect();
            for q in a.states() {
                use crate::automata::StateClass::*;
                let class = a.classify_state(q).unwrap();
                for &(e, is_input) in &events {
                    let viable = match class {
                        Deadlock => true,
                        Input => is_input && !a.has_transition(q, e),
                        Output | Mixed => false,
                    };
                    if !viable {
                        continue;
                    }
                    let n = bits_for(a.n_states() + 1);
                    slot_of.insert((ci, q, e), slots.len());
                    slots.push(Slot {
                        component: ci,
                        src: q,
                        event: e,
                        is_input,
                        vars: (pv..pv + n).collect(),
                        n_states: a.n_states() as u32,
                        bot: (1u32 << n) - 1,
                    });
                    pv += n;
                }
            }
        }

        // State bits, current/next interleaved, after the parameters.
        let state_base = pv;
        let mut comp_bits: Vec<Vec<u32>> = Vec::new();
        let mut k = 0u32;
        for a in comps {
            let n = bits_for(a.n_states());
            comp_bits.push((k..k + n).collect());
            k += n;
        }
        let cur_vars: Vec<u32> = (0..k).map(|b| state_base + 2 * b).collect();

        let mut enc = Encoding {
            bdd: Bdd::new(node_cap),
            components: instance.components.clone(),
            profile: instance.profile,
            state_base,
            comp_bits,
            slots,
            cur_vars,
            init: FALSE,
            parts: Vec::new(),
            constraint: FALSE,
            error: FALSE,
            accepting: FALSE,
            deadlock: FALSE,
            strong_nb: FALSE,
            keep: Vec::new(),
            node_cap,
            gc_threshold: (node_cap / 2).max(1 << 16),
        };

        // Initial state.
        let mut init = TRUE;
        for (c, a) in comps.iter().enumerate() {
            let s = enc.state_eq(c, a.initial(), false)?;
            init = enc.bdd.and(init, s)?;
        }
        enc.init = init;

        // Parameter domains, plus determinism: a slot routed to an output
        // forces every other slot at the same source state to stay empty.
        let mut constraint = TRUE;
        for i in 0..enc.slots.len() {
            let mut dom = enc.param_eq(i, enc.slots[i].bot)?;
            for v in 0..enc.slots[i].n_states {
                let eq = enc.param_eq(i, v)?;
                dom = enc.bdd.or(dom, eq)?;
            }
            constraint = enc.bdd.and(constraint, dom)?;
        }
        for i in 0..enc.slots.len() {
            if enc.slots[i].is_input {
                continue;
            }
            let bot_i = enc.param_eq(i, enc.slots[i].bot)?;
            let filled_i = enc.bdd.not(bot_i)?;
            for j in 0..enc.slots.len() {
                if j == i
                    || enc.slots[j].component != enc.slots[i].component
                    || enc.slots[j].src != enc.slots[i].src
                {
                    continue;
                }
                let bot_j = enc.param_eq(j, enc.slots[j].bot)?;
                let mutex = enc.bdd.implies(filled_i, bot_j)?;
                constraint = enc.bdd.and(constraint, mutex)?;
            }
        }
        enc.constraint = constraint;

        // Transition relation: one disjunct per event; participants move,
        // the rest are framed. Internal outputs need the sender willing and
        // all listeners ready; environment inputs move every listener.
        let mut alphabet: BTreeSet<EventId> = BTreeSet::new();
        for a in comps {
            alphabet.extend(a.inputs());
            alphabet.extend(a.outputs());
        }
        for &e in &alphabet {
            let mut movers: Vec<usize> = Vec::new();
            if let Some(s) = product.sender_of(e) {
                movers.push(s);
            } else if product.listeners(e).is_empty() {
                continue;
            }
            for &l in product.listeners(e) {
                if !movers.contains(&l) {
                    movers.push(l);
                }
            }
            let mut rel = TRUE;
            let mut mover_cur: Vec<u32> = Vec::new();
            let mut mover_next: Vec<u32> = Vec::new();
            for &c in &movers {
                let m = enc.move_rel(&slot_of, c, e)?;
                rel = enc.bdd.and(rel, m)?;
                for &k in &enc.comp_bits[c] {
                    mover_cur.push(state_base + 2 * k);
                    mover_next.push(state_base + 2 * k + 1);
                }
            }
            mover_cur.sort_unstable();
            mover_next.sort_unstable();
            let cur2next: HashMap<u32, u32> =
                mover_cur.iter().map(|&v| (v, v + 1)).collect();
            let next2cur: HashMap<u32, u32> =
                mover_next.iter().map(|&v| (v, v - 1)).collect();
            enc.parts.push(Part {
                rel,
                mover_cur,
                mover_next,
                cur2next,
                next2cur,
            });
        }

        // Marked states.
        let mut error = FALSE;
        let mut accepting = FALSE;
        for (c, a) in comps.iter().enumerate() {
            for q in a.states() {
                if a.is_error(q) {
                    let s = enc.state_eq(c, q, false)?;
                    error = enc.bdd.or(error, s)?;
                }
                if a.is_accepting(q) {
                    let s = enc.state_eq(c, q, false)?;
                    accepting = enc.bdd.or(accepting, s)?;
                }
            }
        }
        enc.error = error;
        enc.accepting = accepting;

        // Deadlock: no event is sync-enabled.
        let mut deadlock = TRUE;
        for &e in &alphabet {
            let en = enc.sync_enabled(product, &slot_of, e)?;
            let dis = enc.bdd.not(en)?;
            deadlock = enc.bdd.and(deadlock, dis)?;
        }
        enc.deadlock = deadlock;

        // Strong blocking: some component willing to output, the multicast
        // disabled, and every listener at a non-output-class state.
        let mut strong = FALSE;
        for c in 0..comps.len() {
            let outs: Vec<EventId> = comps[c].outputs().iter().copied().collect();
            for x in outs {
                let willing = enc.local_enabled(&slot_of, c, x)?;
                let en = enc.sync_enabled(product, &slot_of, x)?;
                let blocked = enc.bdd.not(en)?;
                let mut excuse_free = TRUE;
                for &j in product.listeners(x) {
                    if j == c {
                        continue;
                    }
                    let non_out = enc.non_output_class(&slot_of, j)?;
                    excuse_free = enc.bdd.and(excuse_free, non_out)?;
                }
                let v = enc.bdd.and_all(&[willing, blocked, excuse_free])?;
                strong = enc.bdd.or(strong, v)?;
            }
        }
        enc.strong_nb = strong;

        Ok(enc)
    }

    fn bit_lit(&mut self, var: u32, positive: bool) -> R<Ref> {
        if positive {
            self.bdd.var(var)
        } else {
            self.bdd.nvar(var)
        }
    }

    /// Component `c` is at state `q` (current or next copy).
    fn state_eq(&mut self, c: usize, q: StateId, next: bool) -> R<Ref> {
        let bits = self.comp_bits[c].clone();
        let base = self.state_base;
        let mut f = TRUE;
        for (b, &k) in bits.iter().enumerate() {
            let var = base + 2 * k + next as u32;
            let lit = self.bit_lit(var, q.0 >> b & 1 == 1)?;
            f = self.bdd.and(f, lit)?;
        }
        Ok(f)
    }

    fn param_eq(&mut self, slot: usize, code: u32) -> R<Ref> {
        let vars = self.slots[slot].vars.clone();
        let mut f = TRUE;
        for (b, &var) in vars.iter().enumerate() {
            let lit = self.bit_lit(var, code >> b & 1 == 1)?;
            f = self.bdd.and(f, lit)?;
        }
        Ok(f)
    }

    /// Component `c` takes an `e`-transition (fixed or parametric).
    fn move_rel(
        &mut self,
        slot_of: &HashMap<(usize, StateId, EventId), usize>,
        c: usize,
        e: EventId,
    ) -> R<Ref> {
        let a = self.components[c].clone();
        let mut f = FALSE;
        for t in a.transitions() {
            if t.event != e {
                continue;
            }
            let src = self.state_eq(c, t.src, false)?;
            let dst = self.state_eq(c, t.dst, true)?;
            let m = self.bdd.and(src, dst)?;
            f = self.bdd.or(f, m)?;
        }
        for q in a.states() {
            let Some(&si) = slot_of.get(&(c, q, e)) else {
                continue;
            };
            let src = self.state_eq(c, q, false)?;
            for d in a.states() {
                let val = self.param_eq(si, d.0)?;
                let dst = self.state_eq(c, d, true)?;
                let m = self.bdd.and_all(&[src, val, dst])?;
                f = self.bdd.or(f, m)?;
            }
        }
        Ok(f)
    }

    /// Component `c` has some `e`-transition at its current state.
    fn local_enabled(
        &mut self,
        slot_of: &HashMap<(usize, StateId, EventId), usize>,
        c: usize,
        e: EventId,
    ) -> R<Ref> {
        let a = self.components[c].clone();
        let mut f = FALSE;
        let mut fixed: BTreeSet<StateId> = BTreeSet::new();
        for t in a.transitions() {
            if t.event == e {
                fixed.insert(t.src);
            }
        }
        for q in fixed {
            let s = self.state_eq(c, q, false)?;
            f = self.bdd.or(f, s)?;
        }
        for q in a.states() {
            let Some(&si) = slot_of.get(&(c, q, e)) else {
                continue;
            };
            let src = self.state_eq(c, q, false)?;
            let bot = self.param_eq(si, self.slots[si].bot)?;
            let filled = self.bdd.not(bot)?;
            let m = self.bdd.and(src, filled)?;
            f = self.bdd.or(f, m)?;
        }
        Ok(f)
    }

    /// The multicast on `e` can fire: willing sender (if internal) and all
    /// listeners ready.
    fn sync_enabled(
        &mut self,
        product: &Product,
        slot_of: &HashMap<(usize, StateId, EventId), usize>,
        e: EventId,
    ) -> R<Ref> {
        let sender = product.sender_of(e);
        if sender.is_none() && product.listeners(e).is_empty() {
            return Ok(FALSE);
        }
        let mut f = TRUE;
        if let Some(s) = sender {
            let w = self.local_enabled(slot_of, s, e)?;
            f = self.bdd.and(f, w)?;
        }
        for &l in product.listeners(e) {
            if Some(l) == sender {
                continue;
            }
            let r = self.local_enabled(slot_of, l, e)?;
            f = self.bdd.and(f, r)?;
        }
        Ok(f)
    }

    /// Component `j`'s current state is not output-class: it has no output
    /// transition available, or also has an input one.
    fn non_output_class(
        &mut self,
        slot_of: &HashMap<(usize, StateId, EventId), usize>,
        j: usize,
    ) -> R<Ref> {
        let a = self.components[j].clone();
        let mut f = FALSE;
        for q in a.states() {
            let mut has_out = FALSE;
            let mut has_in = FALSE;
            for t in a.outgoing(q) {
                match a.direction(t.event) {
                    Some(Direction::Output) => has_out = TRUE,
                    Some(Direction::Input) => has_in = TRUE,
                    None => {}
                }
            }
            for &e in a.inputs().iter().chain(a.outputs().iter()) {
                let Some(&si) = slot_of.get(&(j, q, e)) else {
                    continue;
                };
                let bot = self.param_eq(si, self.slots[si].bot)?;
                let filled = self.bdd.not(bot)?;
                if self.slots[si].is_input {
                    has_in = self.bdd.or(has_in, filled)?;
                } else {
                    has_out = self.bdd.or(has_out, filled)?;
                }
            }
            let no_out = self.bdd.not(has_out)?;
            let non_output = self.bdd.or(no_out, has_in)?;
            let at_q = self.state_eq(j, q, false)?;
            let m = self.bdd.and(at_q, non_output)?;
            f = self.bdd.or(f, m)?;
        }
        Ok(f)
    }

    /// Registers an extra garbage-collection root; returns its slot index
    /// so fixpoints can update it in place across collections.
    fn keep_push(&mut self, r: Ref) -> usize {
        self.keep.push(r);
        self.keep.len() - 1
    }

    fn keep_pop(&mut self) -> Ref {
        self.keep.pop().expect("keep stack underflow")
    }

    /// Copy-collects the arena, retaining the encoding's persistent
    /// predicates and everything on the keep stack. The arena never frees
    /// nodes otherwise, and fixpoint iterations churn out garbage orders
    /// of magnitude larger than the live sets.
    fn force_gc(&mut self) {
        let mut roots = vec![
            self.init,
            self.constraint,
            self.error,
            self.accepting,
            self.deadlock,
            self.strong_nb,
        ];
        roots.extend(self.parts.iter().map(|p| p.rel));
        roots.extend(self.keep.iter().copied());
        let out = self.bdd.collect(&roots);
        self.init = out[0];
        self.constraint = out[1];
        self.error = out[2];
        self.accepting = out[3];
        self.deadlock = out[4];
        self.strong_nb = out[5];
        let np = self.parts.len();
        for (i, p) in self.parts.iter_mut().enumerate() {
            p.rel = out[6 + i];
        }
        self.keep.copy_from_slice(&out[6 + np..]);
        // Allow several times the live size in garbage before the next
        // collection, but keep headroom below the hard cap.
        let live = self.bdd.n_nodes();
        self.gc_threshold = (live.saturating_mul(5))
            .clamp(1 << 16, self.node_cap - self.node_cap / 8);
    }

    fn maybe_gc(&mut self) {
        if self.bdd.n_nodes() > self.gc_threshold {
            self.force_gc();
        }
    }

    /// States with a transition into `s`, per-event with early
    /// quantification: unmoved components' variables are never touched.
    fn pre(&mut self, s: Ref) -> R<Ref> {
        let si = self.keep_push(s);
        let ai = self.keep_push(FALSE);
        for i in 0..self.parts.len() {
            let (rel, c2n, mnext) = {
                let p = &self.parts[i];
                (p.rel, p.cur2next.clone(), p.mover_next.clone())
            };
            let shifted = self.bdd.rename(self.keep[si], &c2n)?;
            let pe = self.bdd.and_exists(rel, shifted, &mnext)?;
            self.keep[ai] = self.bdd.or(self.keep[ai], pe)?;
            self.maybe_gc();
        }
        let acc = self.keep_pop();
        self.keep_pop();
        Ok(acc)
    }

    /// Successors of `s` under one event's partition.
    fn post_part(&mut self, i: usize, s: Ref) -> R<Ref> {
        let (rel, n2c, mcur) = {
            let p = &self.parts[i];
            (p.rel, p.next2cur.clone(), p.mover_cur.clone())
        };
        let img = self.bdd.and_exists(rel, s, &mcur)?;
        self.bdd.rename(img, &n2c)
    }

    /// Reachable (state, parameters) pairs, restricted to in-domain
    /// deterministic parameter valuations. Chaotic iteration: each sweep
    /// applies every event's partition to the accumulated set in turn, so
    /// one sweep can propagate a whole protocol round and the fixpoint
    /// arrives in far fewer sweeps than breadth-first steps.
    fn reach(&mut self) -> R<Ref> {
        let seed = self.bdd.and(self.init, self.constraint)?;
        let ri = self.keep_push(seed);
        let mut sweep = 0usize;
        loop {
            let mut changed = false;
            for i in 0..self.parts.len() {
                let img = self.post_part(i, self.keep[ri])?;
                let r2 = self.bdd.or(self.keep[ri], img)?;
                if r2 != self.keep[ri] {
                    self.keep[ri] = r2;
                    changed = true;
                }
                self.maybe_gc();
            }
            sweep += 1;
            if std::env::var_os("SYMBOLIC_TRACE").is_some() {
                eprintln!("reach sweep {sweep}: {} nodes", self.bdd.n_nodes());
            }
            if !changed {
                break;
            }
        }
        Ok(self.keep_pop())
    }

    /// Reachable states admitting a path that visits accepting states
    /// infinitely often: nu Z. pre(mu Y. (Z and Acc) or (Z and pre Y)),
    /// confined to `reach` (paths from reachable states stay reachable,
    /// so the confinement is free).
    fn buchi_win(&mut self, reach: Ref) -> R<Ref> {
        let zi = self.keep_push(reach);
        let yi = self.keep_push(FALSE);
        let result = loop {
            self.keep[yi] = FALSE;
            loop {
                let py = self.pre(self.keep[yi])?;
                let z = self.keep[zi];
                let zacc = self.bdd.and(z, self.accepting)?;
                let zpy = self.bdd.and(z, py)?;
                let y2 = self.bdd.or(zacc, zpy)?;
                if y2 == self.keep[yi] {
                    break;
                }
                self.keep[yi] = y2;
                self.maybe_gc();
            }
            let pz = self.pre(self.keep[yi])?;
            let z = self.keep[zi];
            let z2 = self.bdd.and(z, pz)?;
            if z2 == z {
                break z;
            }
            self.keep[zi] = z2;
            self.maybe_gc();
        };
        self.keep_pop();
        self.keep_pop();
        Ok(result)
    }

    fn all_param_vars(&self) -> Vec<u32> {
        self.slots.iter().flat_map(|s| s.vars.iter().copied()).collect()
    }
}

/// Parameter valuations whose completion satisfies the profile's
/// deadlock, safety, and liveness checks; strong non-blockingness is
/// returned separately so weak mode can use it as a refinable first cut.
fn good_sets(enc: &mut Encoding) -> R<(Ref, Ref)> {
    let profile = enc.profile;
    let cur_vars = enc.cur_vars.clone();
    let reach = enc.reach()?;
    // Keep slots survive the collections run by the liveness fixpoint.
    let ri = enc.keep_push(reach);
    let gi = enc.keep_push(enc.constraint);
    if profile.deadlock {
        let bad = enc.bdd.and(enc.keep[ri], enc.deadlock)?;
        let f = enc.bdd.exists(bad, &cur_vars)?;
        let ok = enc.bdd.not(f)?;
        enc.keep[gi] = enc.bdd.and(enc.keep[gi], ok)?;
    }
    if profile.safety {
        let bad = enc.bdd.and(enc.keep[ri], enc.error)?;
        let f = enc.bdd.exists(bad, &cur_vars)?;
        let ok = enc.bdd.not(f)?;
        enc.keep[gi] = enc.bdd.and(enc.keep[gi], ok)?;
    }
    if profile.liveness {
        let reach = enc.keep[ri];
        let win = enc.buchi_win(reach)?;
        let bad = enc.bdd.and(enc.init, win)?;
        let f = enc.bdd.exists(bad, &cur_vars)?;
        let ok = enc.bdd.not(f)?;
        enc.keep[gi] = enc.bdd.and(enc.keep[gi], ok)?;
    }
    let strong_ok = if profile.nonblocking.is_some() {
        let bad = enc.bdd.and(enc.keep[ri], enc.strong_nb)?;
        let f = enc.bdd.exists(bad, &cur_vars)?;
        enc.bdd.not(f)?
    } else {
        TRUE
    };
    let good = enc.keep_pop();
    enc.keep_pop();
    Ok((good, strong_ok))
}

/// Decodes one parameter valuation from `set`, preferring empty slots so
/// solutions stay minimal, and returns the added transitions along with
/// the exact valuation as a BDD cube for later exclusion.
fn decode_one(enc: &mut Encoding, set: Ref) -> R<Option<(Vec<(usize, Transition)>, Ref)>> {
    if set == FALSE {
        return Ok(None);
    }
    let mut narrowed = set;
    let mut cube = TRUE;
    let mut added = Vec::new();
    for i in 0..enc.slots.len() {
        let bot = enc.slots[i].bot;
        let empty = enc.param_eq(i, bot)?;
        let try_empty = enc.bdd.and(narrowed, empty)?;
        let code = if try_empty != FALSE {
            narrowed = try_empty;
            bot
        } else {
            // Commit to the first feasible target state.
            let mut chosen = None;
            for v in 0..enc.slots[i].n_states {
                let eq = enc.param_eq(i, v)?;
                let t = enc.bdd.and(narrowed, eq)?;
                if t != FALSE {
                    narrowed = t;
                    chosen = Some(v);
                    break;
                }
            }
            chosen.expect("nonempty set must admit some in-domain value")
        };
        let eq = enc.param_eq(i, code)?;
        cube = enc.bdd.and(cube, eq)?;
        if code != bot {
            added.push((
                enc.slots[i].component,
                Transition::new(enc.slots[i].src, enc.slots[i].event, StateId(code)),
            ));
        }
    }
    Ok(Some((added, cube)))
}

/// Splits off the instance part worth encoding symbolically. Non-target
/// components that are receptive (every input available everywhere), emit
/// no outputs, and mark no error states — pure observers such as liveness
/// monitors — cannot influence reachability of the remaining components,
/// deadlocks, errors, or blocking, yet multiply the BDD state space.
/// They are dropped from the encoding; if any dropped observer carried
/// acceptance marks, the liveness check moves to the explicit
/// verification of decoded candidates and is cleared from the symbolic
/// profile.
fn symbolic_core(instance: &Instance) -> Instance {
    let mut kept: Vec<Automaton> = Vec::new();
    let mut new_index: HashMap<usize, usize> = HashMap::new();
    let mut dropped_accepting = false;
    for (i, a) in instance.components.iter().enumerate() {
        let receptive = a
            .states()
            .all(|q| a.inputs().iter().all(|&e| a.has_transition(q, e)));
        let has_error = a.states().any(|q| a.is_error(q));
        let passive = !instance.targets.contains(&i)
            && a.outputs().is_empty()
            && receptive
            && !has_error;
        if passive {
            dropped_accepting |= a.states().any(|q| a.is_accepting(q));
            continue;
        }
        new_index.insert(i, kept.len());
        kept.push(a.clone());
    }
    let mut profile = instance.profile;
    profile.liveness &= !dropped_accepting;
    Instance {
        components: kept,
        targets: instance.targets.iter().map(|t| new_index[t]).collect(),
        profile,
    }
}

pub fn solve_symbolic(instance: &Instance, config: &SymbolicConfig) -> SymbolicResult {
    let core = symbolic_core(instance);
    let product = match Product::new(core.components.clone()) {
        Ok(p) => p,
        Err(_) => return SymbolicResult::Unsat(SymbolicStats::default()),
    };
    let mut stats = SymbolicStats::default();
    match solve_inner(instance, &core, &product, config, &mut stats) {
        Ok(r) => r,
        Err(BddError::NodeLimit(_)) => SymbolicResult::ResourceExhausted(stats),
    }
}

fn solve_inner(
    instance: &Instance,
    core: &Instance,
    product: &Product,
    config: &SymbolicConfig,
    stats: &mut SymbolicStats,
) -> R<SymbolicResult> {
    let mut enc = Encoding::build(core, product, config.node_cap)?;
    stats.n_vars = 2 * enc.cur_vars.len() + enc.all_param_vars().len();
    let (good, strong_ok) = good_sets(&mut enc)?;
    // Phase 1 restricts to completions also passing the strong check —
    // for strong mode that is exact, for weak mode a usually-sufficient
    // overapproximation of intent; phase 2 lifts the restriction.
    let phases: Vec<Ref> = match enc.profile.nonblocking {
        None => vec![good],
        Some(NbMode::Strong) => vec![enc.bdd.and(good, strong_ok)?],
        Some(NbMode::Weak) => {
            let tight = enc.bdd.and(good, strong_ok)?;
            vec![tight, good]
        }
    };
    let mut excluded = FALSE;
    let mut tried = 0u64;
    for set in phases {
        loop {
            if tried >= config.max_retries {
                stats.n_nodes = enc.bdd.n_nodes();
                stats.candidates_tried = tried;
                return Ok(SymbolicResult::ResourceExhausted(*stats));
            }
            let nex = enc.bdd.not(excluded)?;
            let live = enc.bdd.and(set, nex)?;
            let Some((added, cube)) = decode_one(&mut enc, live)? else {
                break;
            };
            tried += 1;
            // Slot components are indices into the core; lift them back to
            // the full instance (targets keep their relative order).
            let added: Vec<(usize, Transition)> = added
                .into_iter()
                .map(|(c, t)| {
                    let k = core.targets.iter().position(|&x| x == c).unwrap();
                    (instance.targets[k], t)
                })
                .collect();
            let comps = instance.completed(&added);
            let ok = compose_all(&comps)
                .map(|p| verify_all(&p, &instance.profile).passed())
                .unwrap_or(false);
            if ok {
                stats.n_nodes = enc.bdd.n_nodes();
                stats.candidates_tried = tried;
                return Ok(SymbolicResult::Solution(added, *stats));
            }
            excluded = enc.bdd.or(excluded, cube)?;
        }
    }
    stats.n_nodes = enc.bdd.n_nodes();
    stats.candidates_tried = tried;
    Ok(SymbolicResult::Unsat(*stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::reduction::{random_cnf, solve_cnf_symbolic, Cnf, CnfOutcome};
    use crate::verify::Profile;

    fn abp_instance(
        sender: crate::automata::Automaton,
        receiver: crate::automata::Automaton,
        nb: NbMode,
    ) -> Instance {
        let mut components = vec![sender, receiver];
        components.extend(fixtures::abp_environment());
        Instance {
            components,
            targets: vec![0, 1],
            profile: Profile::full(nb),
        }
    }

    #[test]
    fn symbolic_reach_matches_explicit_exploration() {
        // Fix one concrete completion, restrict the reachable-set fixpoint
        // to its parameter cube, and compare against the explicit product
        // exploration of the completed components: same number of states
        // and every explored state must satisfy the fixpoint.
        let cnf = Cnf::parse_dimacs("p cnf 2 2\n1 -2 0\n-1 2 0\n").unwrap();
        let inst = crate::reduction::reduction_instance(&cnf);
        let product = Product::new(inst.components.clone()).unwrap();
        let mut enc = Encoding::build(&inst, &product, 1 << 22).unwrap();
        let reach = enc.reach().unwrap();

        let added = match crate::search::solve(&inst, &crate::search::SearchConfig::default()) {
            crate::search::SearchResult::Solution(a, _) => a,
            other => panic!("expected explicit solution, got {other:?}"),
        };
        let mut codes: Vec<u32> = enc.slots.iter().map(|s| s.bot).collect();
        for (c, t) in &added {
            let i = enc
                .slots
                .iter()
                .position(|s| s.component == *c && s.src == t.src && s.event == t.event)
                .unwrap();
            codes[i] = t.dst.0;
        }
        let mut cube = TRUE;
        for (i, &code) in codes.iter().enumerate() {
            let eq = enc.param_eq(i, code).unwrap();
            cube = enc.bdd.and(cube, eq).unwrap();
        }
        let fixed = enc.bdd.and(reach, cube).unwrap();

        let comps = inst.completed(&added);
        let ex = compose_all(&comps).unwrap().explore();
        let mut universe = enc.all_param_vars();
        universe.extend(enc.cur_vars.iter().copied());
        universe.sort_unstable();
        assert_eq!(enc.bdd.sat_count(fixed, &universe) as usize, ex.n_states());

        let mut assign: HashMap<u32, bool> = HashMap::new();
        for (i, s) in enc.slots.iter().enumerate() {
            for (b, &v) in s.vars.iter().enumerate() {
                assign.insert(v, codes[i] >> b & 1 == 1);
            }
        }
        for g in &ex.states {
            for (c, q) in g.iter().enumerate() {
                for (b, &k) in enc.comp_bits[c].iter().enumerate() {
                    assign.insert(enc.state_base + 2 * k, q.0 >> b & 1 == 1);
                }
            }
            assert!(
                enc.bdd.eval(fixed, |v| *assign.get(&v).unwrap_or(&false)),
                "explicitly reachable state {g:?} missing from fixpoint"
            );
        }
    }

    #[test]
    fn complete_instance_needs_no_additions() {
        let inst = abp_instance(
            fixtures::abp_sender_manual(),
            fixtures::abp_receiver_manual(),
            NbMode::Strong,
        );
        match solve_symbolic(&inst, &SymbolicConfig::default()) {
            SymbolicResult::Solution(added, _) => assert!(added.is_empty()),
            other => panic!("expected solution, got {other:?}"),
        }
    }

    #[test]
    fn first_scenario_completes_with_six_additions() {
        let inst = abp_instance(
            fixtures::abp_sender_scenario1_skeleton(),
            fixtures::abp_receiver_scenario1_skeleton(),
            NbMode::Weak,
        );
        match solve_symbolic(&inst, &SymbolicConfig::default()) {
            SymbolicResult::Solution(added, stats) => {
                assert_eq!(added.len(), 6);
                assert!(stats.n_vars >= 40);
                let comps = inst.completed(&added);
                let p = compose_all(&comps).unwrap();
                assert!(verify_all(&p, &inst.profile).passed());
            }
            other => panic!("expected solution, got {other:?}"),
        }
    }

    #[test]
    fn sat_reduction_agrees_with_brute_force() {
        let mut sat = 0;
        let mut unsat = 0;
        for i in 0..12u64 {
            let n = 1 + (i % 4) as usize;
            let m = 1 + (i % 7) as usize;
            let cnf = random_cnf(4242 + i, n, m);
            let brute = cnf.brute_force();
            match solve_cnf_symbolic(&cnf, &SymbolicConfig::default()) {
                CnfOutcome::Sat(a) => {
                    assert!(cnf.eval(&a), "decoded assignment must satisfy {cnf:?}");
                    assert!(brute.is_some());
                    sat += 1;
                }
                CnfOutcome::Unsat => {
                    assert!(brute.is_none(), "symbolic unsat but brute sat: {cnf:?}");
                    unsat += 1;
                }
                CnfOutcome::BudgetExhausted => panic!("node cap hit on tiny formula"),
            }
        }
        assert_eq!(sat + unsat, 12);
        assert!(sat > 0);
    }

    #[test]
    fn unsatisfiable_formula_is_symbolically_unsat() {
        let cnf = Cnf::parse_dimacs("p cnf 1 2\n1 0\n-1 0\n").unwrap();
        assert_eq!(
            solve_cnf_symbolic(&cnf, &SymbolicConfig::default()),
            CnfOutcome::Unsat
        );
    }

    #[test]
    fn node_cap_reports_resource_exhaustion() {
        let inst = abp_instance(
            fixtures::abp_sender_scenario1_skeleton(),
            fixtures::abp_receiver_scenario1_skeleton(),
            NbMode::Strong,
        );
        let cfg = SymbolicConfig {
            node_cap: 256,
            max_retries: 10,
        };
        assert!(matches!(
            solve_symbolic(&inst, &cfg),
            SymbolicResult::ResourceExhausted(_)
        ));
    }
}
