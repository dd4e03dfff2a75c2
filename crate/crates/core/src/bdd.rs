//! Reduced ordered binary decision diagrams with hash-consing.
//!
//! Nodes live in an arena owned by a [`Bdd`] manager; equal functions are
//! represented by equal node indices, so equivalence checks are pointer
//! comparisons. Variables are `u32` levels ordered ascending from the
//! root. All constructors go through [`Bdd::mk`], which enforces both
//! reduction rules and the configurable node cap.

use rustc_hash::FxHashMap;
use std::collections::HashMap;
use thiserror::Error;

/// Index into the manager's node arena. `0` and `1` are the terminals.
pub type Ref = u32;

pub const FALSE: Ref = 0;
pub const TRUE: Ref = 1;

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("node limit of {0} exceeded")]
    NodeLimit(usize),
}

type Result<T> = std::result::Result<T, BddError>;

#[derive(Clone, Copy)]
struct Node {
    var: u32,
    low: Ref,
    high: Ref,
}

pub struct Bdd {
    nodes: Vec<Node>,
    unique: FxHashMap<(u32, Ref, Ref), Ref>,
    ite_cache: FxHashMap<(Ref, Ref, Ref), Ref>,
    node_cap: usize,
}

impl Bdd {
    pub const DEFAULT_NODE_CAP: usize = 1 << 24;

    pub fn new(node_cap: usize) -> Bdd {
        let terminal = Node {
            var: TERMINAL_VAR,
            low: 0,
            high: 0,
        };
        Bdd {
            nodes: vec![terminal, terminal],
            unique: FxHashMap::default(),
            ite_cache: FxHashMap::default(),
            node_cap,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Drops the operation cache (the node arena is untouched). Useful
    /// between fixpoint iterations to bound memory.
    pub fn trim_cache(&mut self) {
        self.ite_cache.clear();
    }

    /// Copy-collects the arena, keeping only nodes reachable from `roots`,
    /// and returns the remapped roots in order. All other `Ref`s are
    /// invalidated; operation caches are dropped. Canonicity is preserved,
    /// so equal functions still compare equal afterwards.
    pub fn collect(&mut self, roots: &[Ref]) -> Vec<Ref> {
        let terminal = Node {
            var: TERMINAL_VAR,
            low: 0,
            high: 0,
        };
        let mut new_nodes = vec![terminal, terminal];
        let mut new_unique: FxHashMap<(u32, Ref, Ref), Ref> = FxHashMap::default();
        let mut remap: FxHashMap<Ref, Ref> = FxHashMap::default();
        remap.insert(FALSE, FALSE);
        remap.insert(TRUE, TRUE);
        let mut out = Vec::with_capacity(roots.len());
        for &root in roots {
            // Iterative postorder copy.
            let mut stack = vec![root];
            while let Some(&f) = stack.last() {
                if remap.contains_key(&f) {
                    stack.pop();
                    continue;
                }
                let n = self.nodes[f as usize];
                let (ml, mh) = (remap.get(&n.low), remap.get(&n.high));
                if let (Some(&l), Some(&h)) = (ml, mh) {
                    stack.pop();
                    debug_assert_ne!(l, h);
                    let r = *new_unique.entry((n.var, l, h)).or_insert_with(|| {
                        new_nodes.push(Node {
                            var: n.var,
                            low: l,
                            high: h,
                        });
                        (new_nodes.len() - 1) as Ref
                    });
                    remap.insert(f, r);
                } else {
                    if ml.is_none() {
                        stack.push(n.low);
                    }
                    if mh.is_none() {
                        stack.push(n.high);
                    }
                }
            }
            out.push(remap[&root]);
        }
        self.nodes = new_nodes;
        self.unique = new_unique;
        self.ite_cache.clear();
        out
    }

    fn var_of(&self, f: Ref) -> u32 {
        self.nodes[f as usize].var
    }

    /// Cofactors of `f` with respect to variable `v`, which must not be
    /// below `f`'s top variable.
    fn cofactors(&self, f: Ref, v: u32) -> (Ref, Ref) {
        let n = self.nodes[f as usize];
        if n.var == v {
            (n.low, n.high)
        } else {
            (f, f)
        }
    }

    fn mk(&mut self, var: u32, low: Ref, high: Ref) -> Result<Ref> {
        if low == high {
            return Ok(low);
        }
        if let Some(&r) = self.unique.get(&(var, low, high)) {
            return Ok(r);
        }
        if self.nodes.len() >= self.node_cap {
            return Err(BddError::NodeLimit(self.node_cap));
        }
        let r = self.nodes.len() as Ref;
        self.nodes.push(Node { var, low, high });
        self.unique.insert((var, low, high), r);
        Ok(r)
    }

    pub fn var(&mut self, v: u32) -> Result<Ref> {
        self.mk(v, FALSE, TRUE)
    }

    pub fn nvar(&mut self, v: u32) -> Result<Ref> {
        self.mk(v, TRUE, FALSE)
    }

    pub fn ite(&mut self, f: Ref, g: Ref, h: Ref) -> Result<Ref> {
        if f == TRUE {
            return Ok(g);
        }
        if f == FALSE {
            return Ok(h);
        }
        if g == h {
            return Ok(g);
        }
        if g == TRUE && h == FALSE {
            return Ok(f);
        }
        if let Some(&r) = self.ite_cache.get(&(f, g, h)) {
            return Ok(r);
        }
        let v = self
            .var_of(f)
            .min(self.var_of(g))
            .min(self.var_of(h));
        let (f0, f1) = self.cofactors(f, v);
        let (g0, g1) = self.cofactors(g, v);
        let (h0, h1) = self.cofactors(h, v);
        let low = self.ite(f0, g0, h0)?;
        let high = self.ite(f1, g1, h1)?;
        let r = self.mk(v, low, high)?;
        self.ite_cache.insert((f, g, h), r);
        Ok(r)
    }

    pub fn not(&mut self, f: Ref) -> Result<Ref> {
        self.ite(f, FALSE, TRUE)
    }

    pub fn and(&mut self, f: Ref, g: Ref) -> Result<Ref> {
        self.ite(f, g, FALSE)
    }

    pub fn or(&mut self, f: Ref, g: Ref) -> Result<Ref> {
        self.ite(f, TRUE, g)
    }

    pub fn xor(&mut self, f: Ref, g: Ref) -> Result<Ref> {
        let ng = self.not(g)?;
        self.ite(f, ng, g)
    }

    pub fn implies(&mut self, f: Ref, g: Ref) -> Result<Ref> {
        self.ite(f, g, TRUE)
    }

    pub fn and_all(&mut self, fs: &[Ref]) -> Result<Ref> {
        let mut acc = TRUE;
        for &f in fs {
            acc = self.and(acc, f)?;
        }
        Ok(acc)
    }

    pub fn or_all(&mut self, fs: &[Ref]) -> Result<Ref> {
        let mut acc = FALSE;
        for &f in fs {
            acc = self.or(acc, f)?;
        }
        Ok(acc)
    }

    /// Existential quantification over a sorted set of variables.
    pub fn exists(&mut self, f: Ref, vars: &[u32]) -> Result<Ref> {
        let mut memo = FxHashMap::default();
        self.quantify(f, vars, false, &mut memo)
    }

    /// Universal quantification over a sorted set of variables.
    pub fn forall(&mut self, f: Ref, vars: &[u32]) -> Result<Ref> {
        let mut memo = FxHashMap::default();
        self.quantify(f, vars, true, &mut memo)
    }

    fn quantify(
        &mut self,
        f: Ref,
        vars: &[u32],
        universal: bool,
        memo: &mut FxHashMap<Ref, Ref>,
    ) -> Result<Ref> {
        if f <= TRUE {
            return Ok(f);
        }
        let v = self.var_of(f);
        // Variables above f's support no longer matter.
        let vars = &vars[vars.partition_point(|&u| u < v)..];
        if vars.is_empty() {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let n = self.nodes[f as usize];
        let low = self.quantify(n.low, vars, universal, memo)?;
        let high = self.quantify(n.high, vars, universal, memo)?;
        let r = if vars.first() == Some(&v) {
            if universal {
                self.and(low, high)?
            } else {
                self.or(low, high)?
            }
        } else {
            self.mk(v, low, high)?
        };
        memo.insert(f, r);
        Ok(r)
    }

    /// Fused conjunction and existential quantification (the relational
    /// product): `exists vars. f AND g` without materializing the
    /// conjunction, whose intermediate size dominates image computation.
    /// `vars` must be sorted.
    pub fn and_exists(&mut self, f: Ref, g: Ref, vars: &[u32]) -> Result<Ref> {
        let mut memo = FxHashMap::default();
        self.and_exists_rec(f, g, vars, &mut memo)
    }

    fn and_exists_rec(
        &mut self,
        f: Ref,
        g: Ref,
        vars: &[u32],
        memo: &mut FxHashMap<(Ref, Ref), Ref>,
    ) -> Result<Ref> {
        if f == FALSE || g == FALSE {
            return Ok(FALSE);
        }
        if f == TRUE && g == TRUE {
            return Ok(TRUE);
        }
        let v = self.var_of(f).min(self.var_of(g));
        // The remaining quantified variables depend only on (f, g)'s top
        // variable, so memoizing on the pair alone is sound.
        let vars = &vars[vars.partition_point(|&u| u < v)..];
        if vars.is_empty() {
            return self.and(f, g);
        }
        if let Some(&r) = memo.get(&(f, g)) {
            return Ok(r);
        }
        let (f0, f1) = self.cofactors(f, v);
        let (g0, g1) = self.cofactors(g, v);
        let r = if vars.first() == Some(&v) {
            let low = self.and_exists_rec(f0, g0, vars, memo)?;
            if low == TRUE {
                TRUE
            } else {
                let high = self.and_exists_rec(f1, g1, vars, memo)?;
                self.or(low, high)?
            }
        } else {
            let low = self.and_exists_rec(f0, g0, vars, memo)?;
            let high = self.and_exists_rec(f1, g1, vars, memo)?;
            self.mk(v, low, high)?
        };
        memo.insert((f, g), r);
        Ok(r)
    }

    /// Variable renaming by an order-preserving map; variables not in the
    /// map stay put. The caller must ensure the map is monotone on the
    /// support of `f` relative to the unmapped variables, which holds for
    /// the current/next block shifts used here (2k <-> 2k+1).
    pub fn rename(&mut self, f: Ref, map: &HashMap<u32, u32>) -> Result<Ref> {
        let mut memo = FxHashMap::default();
        self.rename_rec(f, map, &mut memo)
    }

    fn rename_rec(
        &mut self,
        f: Ref,
        map: &HashMap<u32, u32>,
        memo: &mut FxHashMap<Ref, Ref>,
    ) -> Result<Ref> {
        if f <= TRUE {
            return Ok(f);
        }
        if let Some(&r) = memo.get(&f) {
            return Ok(r);
        }
        let n = self.nodes[f as usize];
        let low = self.rename_rec(n.low, map, memo)?;
        let high = self.rename_rec(n.high, map, memo)?;
        let v = *map.get(&n.var).unwrap_or(&n.var);
        debug_assert!(
            v < self.var_of(low) && v < self.var_of(high),
            "rename map must be order-preserving"
        );
        let r = self.mk(v, low, high)?;
        memo.insert(f, r);
        Ok(r)
    }

    /// Number of satisfying assignments over a sorted variable universe,
    /// which must contain the support of `f`.
    pub fn sat_count(&self, f: Ref, universe: &[u32]) -> u128 {
        let mut memo = FxHashMap::default();
        self.sat_count_rec(f, 0, universe, &mut memo)
    }

    fn sat_count_rec(
        &self,
        f: Ref,
        i: usize,
        universe: &[u32],
        memo: &mut FxHashMap<(Ref, usize), u128>,
    ) -> u128 {
        if f == FALSE {
            return 0;
        }
        if f == TRUE {
            return 1u128 << (universe.len() - i);
        }
        if let Some(&c) = memo.get(&(f, i)) {
            return c;
        }
        let n = self.nodes[f as usize];
        let j = i + universe[i..]
            .binary_search(&n.var)
            .expect("support variable missing from universe");
        let below = self.sat_count_rec(n.low, j + 1, universe, memo)
            + self.sat_count_rec(n.high, j + 1, universe, memo);
        let c = below << (j - i);
        memo.insert((f, i), c);
        c
    }

    /// One satisfying assignment as decisions along a path to `TRUE`;
    /// variables absent from the result are unconstrained. Prefers the
    /// low (false) branch.
    pub fn pick_one_sat(&self, f: Ref) -> Option<HashMap<u32, bool>> {
        if f == FALSE {
            return None;
        }
        let mut out = HashMap::new();
        let mut cur = f;
        while cur > TRUE {
            let n = self.nodes[cur as usize];
            if n.low != FALSE {
                out.insert(n.var, false);
                cur = n.low;
            } else {
                out.insert(n.var, true);
                cur = n.high;
            }
        }
        Some(out)
    }

    /// Evaluates `f` under a total assignment.
    pub fn eval(&self, f: Ref, assign: impl Fn(u32) -> bool) -> bool {
        let mut cur = f;
        while cur > TRUE {
            let n = self.nodes[cur as usize];
            cur = if assign(n.var) { n.high } else { n.low };
        }
        cur == TRUE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_identities() {
        let mut b = Bdd::new(1 << 16);
        let x = b.var(0).unwrap();
        let y = b.var(2).unwrap();
        let nx = b.not(x).unwrap();
        assert_eq!(b.and(x, nx).unwrap(), FALSE);
        assert_eq!(b.or(x, nx).unwrap(), TRUE);
        assert_eq!(b.not(nx).unwrap(), x);
        let a = b.and(x, y).unwrap();
        let o = b.or(x, y).unwrap();
        // De Morgan, by canonicity.
        let na = b.not(a).unwrap();
        let ny = b.not(y).unwrap();
        let demorgan = b.or(nx, ny).unwrap();
        assert_eq!(na, demorgan);
        assert_ne!(a, o);
        let xor = b.xor(x, y).unwrap();
        let alt = b.and(o, na).unwrap();
        assert_eq!(xor, alt);
    }

    #[test]
    fn quantifiers() {
        let mut b = Bdd::new(1 << 16);
        let x = b.var(0).unwrap();
        let y = b.var(1).unwrap();
        let a = b.and(x, y).unwrap();
        assert_eq!(b.exists(a, &[0]).unwrap(), y);
        assert_eq!(b.exists(a, &[0, 1]).unwrap(), TRUE);
        assert_eq!(b.forall(a, &[0]).unwrap(), FALSE);
        let o = b.or(x, y).unwrap();
        assert_eq!(b.forall(o, &[0]).unwrap(), y);
        // Quantifying a variable outside the support is a no-op.
        assert_eq!(b.exists(a, &[5]).unwrap(), a);
    }

    #[test]
    fn rename_shifts_between_blocks() {
        let mut b = Bdd::new(1 << 16);
        // Current-state vars are even, next-state odd.
        let x = b.var(0).unwrap();
        let y = b.var(2).unwrap();
        let f = b.and(x, y).unwrap();
        let map: HashMap<u32, u32> = [(0, 1), (2, 3)].into_iter().collect();
        let g = b.rename(f, &map).unwrap();
        let x1 = b.var(1).unwrap();
        let y1 = b.var(3).unwrap();
        let expect = b.and(x1, y1).unwrap();
        assert_eq!(g, expect);
        let back: HashMap<u32, u32> = [(1, 0), (3, 2)].into_iter().collect();
        assert_eq!(b.rename(g, &back).unwrap(), f);
    }

    #[test]
    fn counting_and_witnesses() {
        let mut b = Bdd::new(1 << 16);
        let x = b.var(0).unwrap();
        let y = b.var(1).unwrap();
        let z = b.var(2).unwrap();
        let xy = b.or(x, y).unwrap();
        assert_eq!(b.sat_count(xy, &[0, 1, 2]), 6);
        assert_eq!(b.sat_count(TRUE, &[0, 1, 2]), 8);
        assert_eq!(b.sat_count(FALSE, &[0, 1, 2]), 0);
        let all = b.and_all(&[x, y, z]).unwrap();
        assert_eq!(b.sat_count(all, &[0, 1, 2]), 1);
        let pick = b.pick_one_sat(all).unwrap();
        assert_eq!(pick.len(), 3);
        assert!(pick.values().all(|&v| v));
        assert!(b.pick_one_sat(FALSE).is_none());
        let w = b.pick_one_sat(xy).unwrap();
        assert!(b.eval(xy, |v| *w.get(&v).unwrap_or(&false)));
    }

    #[test]
    fn node_cap_is_enforced() {
        let mut b = Bdd::new(4);
        let x = b.var(0).unwrap();
        assert!(matches!(
            b.var(1).map(|y| b.xor(x, y)),
            Err(BddError::NodeLimit(4)) | Ok(Err(BddError::NodeLimit(4)))
        ));
    }

    #[test]
    fn exhaustive_agreement_with_truth_tables() {
        // Random-ish 3-variable functions built two ways must coincide.
        let mut b = Bdd::new(1 << 16);
        let vars = [0u32, 1, 2];
        for tt in 0u32..256 {
            // Build from minterms.
            let mut f = FALSE;
            for m in 0..8u32 {
                if tt >> m & 1 == 1 {
                    let mut term = TRUE;
                    for (i, &v) in vars.iter().enumerate() {
                        let lit = if m >> i & 1 == 1 {
                            b.var(v).unwrap()
                        } else {
                            b.nvar(v).unwrap()
                        };
                        term = b.and(term, lit).unwrap();
                    }
                    f = b.or(f, term).unwrap();
                }
            }
            assert_eq!(b.sat_count(f, &vars), tt.count_ones() as u128);
            for m in 0..8u32 {
                assert_eq!(b.eval(f, |v| m >> v & 1 == 1), tt >> m & 1 == 1);
            }
        }
    }
}
