//! Reduction from 3SAT to completion, usable both as a SAT solving path
//! and as a cross-validation oracle for the completion engines.
//!
//! For a formula with n variables and m clauses, the proposition process P
//! has a hub state plus one "true" and one "false" state per variable.
//! The environment E walks the clauses, querying one literal at a time:
//! it emits `xd<k>` and the completion decides whether P answers `xt<k>`
//! or `xf<k>` — the added hub transitions *are* the assignment. A
//! satisfying answer advances E to the next clause, a falsifying answer
//! to the clause's next literal, and a third falsifying answer into a
//! deadlock. After the last clause E cycles forever on `xs`, so the
//! composition is deadlock-free iff the encoded assignment satisfies
//! every clause.

use crate::automata::{Automaton, AutomatonBuilder};
use crate::event::EventId;
use crate::search::{solve, Instance, SearchConfig, SearchResult};
use crate::verify::Profile;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub n_vars: usize,
    /// Clauses of exactly three DIMACS literals (shorter input clauses are
    /// padded by repeating a literal).
    pub clauses: Vec<[i32; 3]>,
}

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("clause {index} has more than three literals")]
    TooWide { index: usize },
    #[error("literal {0} out of range")]
    OutOfRange(i32),
    #[error("missing 'p cnf' header")]
    NoHeader,
}

impl Cnf {
    pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
        let mut n_vars: Option<usize> = None;
        let mut lits: Vec<i32> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('p') {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 4 || toks[1] != "cnf" {
                    return Err(DimacsError::Parse {
                        line: idx + 1,
                        msg: "expected: p cnf <vars> <clauses>".into(),
                    });
                }
                n_vars = Some(toks[2].parse().map_err(|_| DimacsError::Parse {
                    line: idx + 1,
                    msg: "bad variable count".into(),
                })?);
                continue;
            }
            for tok in line.split_whitespace() {
                let lit: i32 = tok.parse().map_err(|_| DimacsError::Parse {
                    line: idx + 1,
                    msg: format!("bad literal '{tok}'"),
                })?;
                lits.push(lit);
            }
        }
        let n_vars = n_vars.ok_or(DimacsError::NoHeader)?;
        let mut clauses = Vec::new();
        let mut cur: Vec<i32> = Vec::new();
        for lit in lits {
            if lit == 0 {
                if cur.is_empty() {
                    continue;
                }
                if cur.len() > 3 {
                    return Err(DimacsError::TooWide {
                        index: clauses.len(),
                    });
                }
                while cur.len() < 3 {
                    cur.push(cur[0]);
                }
                clauses.push([cur[0], cur[1], cur[2]]);
                cur.clear();
            } else {
                if lit.unsigned_abs() as usize > n_vars {
                    return Err(DimacsError::OutOfRange(lit));
                }
                cur.push(lit);
            }
        }
        if !cur.is_empty() {
            if cur.len() > 3 {
                return Err(DimacsError::TooWide {
                    index: clauses.len(),
                });
            }
            while cur.len() < 3 {
                cur.push(cur[0]);
            }
            clauses.push([cur[0], cur[1], cur[2]]);
        }
        Ok(Cnf { n_vars, clauses })
    }

    pub fn emit_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.n_vars, self.clauses.len());
        for c in &self.clauses {
            s.push_str(&format!("{} {} {} 0\n", c[0], c[1], c[2]));
        }
        s
    }

    pub fn eval(&self, assign: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&lit| {
                let v = assign[lit.unsigned_abs() as usize - 1];
                if lit > 0 {
                    v
                } else {
                    !v
                }
            })
        })
    }

    /// Exhaustive satisfiability oracle; intended for small n.
    pub fn brute_force(&self) -> Option<Vec<bool>> {
        assert!(self.n_vars <= 24, "brute force only for small formulas");
        for bits in 0u32..(1u32 << self.n_vars) {
            let assign: Vec<bool> = (0..self.n_vars).map(|i| bits >> i & 1 == 1).collect();
            if self.eval(&assign) {
                return Some(assign);
            }
        }
        None
    }
}

fn xd(k: usize) -> EventId {
    EventId::new(&format!("xd{k}"))
}

/// The proposition process: hub `q0` with an `xs` self-loop, plus per
/// variable an answer state pair. The `xd<k>` inputs are deliberately
/// unhandled — completing them is choosing the assignment.
pub fn proposition_process(n_vars: usize) -> Automaton {
    let mut b = AutomatonBuilder::new("prop");
    b.input("xs");
    let q0 = b.state("q0");
    b.set_initial(q0);
    for k in 1..=n_vars {
        b.input(&format!("xd{k}"));
        b.output(&format!("xt{k}"));
        b.output(&format!("xf{k}"));
        b.trans(&format!("qt{k}"), &format!("xt{k}"), "q0");
        b.trans(&format!("qf{k}"), &format!("xf{k}"), "q0");
    }
    b.trans("q0", "xs", "q0");
    b.build()
}

/// The clause-walking environment for a formula.
pub fn clause_environment(cnf: &Cnf) -> Automaton {
    let mut b = AutomatonBuilder::new("clauses");
    b.output("xs");
    for k in 1..=cnf.n_vars {
        b.output(&format!("xd{k}"));
        b.input(&format!("xt{k}"));
        b.input(&format!("xf{k}"));
    }
    let m = cnf.clauses.len();
    let init = if m == 0 { "ok" } else { "d1_1" };
    let init = b.state(init);
    b.set_initial(init);
    for (cj, clause) in cnf.clauses.iter().enumerate() {
        let j = cj + 1;
        for (ci, &lit) in clause.iter().enumerate() {
            let i = ci + 1;
            let k = lit.unsigned_abs() as usize;
            let d = format!("d{i}_{j}");
            let v = format!("v{i}_{j}");
            b.trans(&d, &format!("xd{k}"), &v);
            let (sat_ev, unsat_ev) = if lit > 0 {
                (format!("xt{k}"), format!("xf{k}"))
            } else {
                (format!("xf{k}"), format!("xt{k}"))
            };
            let advance = if j == m { "ok".to_string() } else { format!("d1_{}", j + 1) };
            b.trans(&v, &sat_ev, &advance);
            let retry = if i == 3 { "fail".to_string() } else { format!("d{}_{j}", i + 1) };
            b.trans(&v, &unsat_ev, &retry);
        }
    }
    b.state("fail");
    b.trans("ok", "xs", "ok");
    b.build()
}

/// Completion instance whose solutions are satisfying assignments.
pub fn reduction_instance(cnf: &Cnf) -> Instance {
    Instance {
        components: vec![proposition_process(cnf.n_vars), clause_environment(cnf)],
        targets: vec![0],
        profile: Profile::deadlock_only(),
    }
}

/// Reads the assignment off a completed proposition process: variable k is
/// true iff the hub routes `xd<k>` to `qt<k>`. Variables the environment
/// never queries decode as false.
pub fn decode_assignment(p: &Automaton, n_vars: usize) -> Vec<bool> {
    let q0 = p.state_by_name("q0").expect("hub state");
    (1..=n_vars)
        .map(|k| {
            let qt = p.state_by_name(&format!("qt{k}"));
            p.successors(q0, xd(k)).next().map(Some) == Some(qt)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CnfOutcome {
    Sat(Vec<bool>),
    Unsat,
    BudgetExhausted,
}

/// SAT via the explicit completion search.
pub fn solve_cnf_explicit(cnf: &Cnf, config: &SearchConfig) -> CnfOutcome {
    let inst = reduction_instance(cnf);
    match solve(&inst, config) {
        SearchResult::Solution(added, _) => {
            let comps = inst.completed(&added);
            CnfOutcome::Sat(decode_assignment(&comps[0], cnf.n_vars))
        }
        SearchResult::Unsat(_) => CnfOutcome::Unsat,
        SearchResult::BudgetExhausted(_) => CnfOutcome::BudgetExhausted,
    }
}

/// SAT via the symbolic completion engine.
pub fn solve_cnf_symbolic(cnf: &Cnf, config: &crate::symbolic::SymbolicConfig) -> CnfOutcome {
    use crate::symbolic::{solve_symbolic, SymbolicResult};
    let inst = reduction_instance(cnf);
    match solve_symbolic(&inst, config) {
        SymbolicResult::Solution(added, _) => {
            let comps = inst.completed(&added);
            CnfOutcome::Sat(decode_assignment(&comps[0], cnf.n_vars))
        }
        SymbolicResult::Unsat(_) => CnfOutcome::Unsat,
        SymbolicResult::ResourceExhausted(_) => CnfOutcome::BudgetExhausted,
    }
}

/// Deterministic pseudo-random 3CNF generator (splitmix64 stream).
pub fn random_cnf(seed: u64, n_vars: usize, n_clauses: usize) -> Cnf {
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    let clauses = (0..n_clauses)
        .map(|_| {
            let mut c = [0i32; 3];
            for l in &mut c {
                let var = (next() % n_vars as u64) as i32 + 1;
                *l = if next() & 1 == 1 { var } else { -var };
            }
            c
        })
        .collect();
    Cnf {
        n_vars,
        clauses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::compose_all;
    use crate::verify::verify_all;

    #[test]
    fn component_sizes_match_the_construction() {
        for (n, m) in [(1usize, 1usize), (3, 4), (6, 10)] {
            let cnf = random_cnf(7 + n as u64, n, m);
            let p = proposition_process(n);
            let e = clause_environment(&cnf);
            assert_eq!(p.n_states(), 2 * n + 1);
            assert_eq!(p.transitions().len(), 2 * n + 1);
            assert_eq!(e.n_states(), 6 * m + 2);
            assert_eq!(e.transitions().len(), 9 * m + 1);
            assert!(p.validate().is_empty());
            assert!(e.validate().is_empty());
            assert!(p.is_deterministic());
            assert!(e.is_deterministic());
        }
    }

    #[test]
    fn dimacs_round_trip_and_padding() {
        let text = "c comment\np cnf 3 2\n1 -2 3 0\n2 0\n";
        let cnf = Cnf::parse_dimacs(text).unwrap();
        assert_eq!(cnf.clauses, vec![[1, -2, 3], [2, 2, 2]]);
        let again = Cnf::parse_dimacs(&cnf.emit_dimacs()).unwrap();
        assert_eq!(cnf, again);
    }

    #[test]
    fn dimacs_rejects_wide_and_out_of_range() {
        assert!(matches!(
            Cnf::parse_dimacs("p cnf 4 1\n1 2 3 4 0\n"),
            Err(DimacsError::TooWide { .. })
        ));
        assert!(matches!(
            Cnf::parse_dimacs("p cnf 2 1\n1 3 1 0\n"),
            Err(DimacsError::OutOfRange(3))
        ));
        assert!(matches!(
            Cnf::parse_dimacs("1 2 0\n"),
            Err(DimacsError::NoHeader)
        ));
    }

    #[test]
    fn trivially_unsatisfiable_formula() {
        let cnf = Cnf::parse_dimacs("p cnf 1 2\n1 0\n-1 0\n").unwrap();
        assert_eq!(cnf.brute_force(), None);
        assert_eq!(
            solve_cnf_explicit(&cnf, &SearchConfig::default()),
            CnfOutcome::Unsat
        );
    }

    #[test]
    fn simple_satisfiable_formula() {
        let cnf = Cnf::parse_dimacs("p cnf 2 2\n1 -2 0\n-1 -2 0\n").unwrap();
        let brute = cnf.brute_force().expect("satisfiable");
        assert!(cnf.eval(&brute));
        match solve_cnf_explicit(&cnf, &SearchConfig::default()) {
            CnfOutcome::Sat(a) => assert!(cnf.eval(&a)),
            other => panic!("expected sat, got {other:?}"),
        }
    }

    #[test]
    fn satisfying_completion_is_deadlock_free() {
        let cnf = Cnf::parse_dimacs("p cnf 3 3\n1 2 3 0\n-1 2 3 0\n1 -2 -3 0\n").unwrap();
        let inst = reduction_instance(&cnf);
        match solve(&inst, &SearchConfig::default()) {
            SearchResult::Solution(added, _) => {
                let comps = inst.completed(&added);
                let p = compose_all(&comps).unwrap();
                assert!(verify_all(&p, &Profile::deadlock_only()).passed());
                let a = decode_assignment(&comps[0], cnf.n_vars);
                assert!(cnf.eval(&a));
            }
            other => panic!("expected solution, got {other:?}"),
        }
    }

    #[test]
    fn explicit_agrees_with_brute_force_on_random_formulas() {
        let mut sat = 0;
        let mut unsat = 0;
        for i in 0..40u64 {
            let n = 1 + (i % 5) as usize;
            let m = 1 + (i % 9) as usize;
            let cnf = random_cnf(1000 + i, n, m);
            let brute = cnf.brute_force();
            match solve_cnf_explicit(&cnf, &SearchConfig::default()) {
                CnfOutcome::Sat(a) => {
                    assert!(brute.is_some(), "explicit sat but brute unsat: {cnf:?}");
                    assert!(cnf.eval(&a));
                    sat += 1;
                }
                CnfOutcome::Unsat => {
                    assert!(brute.is_none(), "explicit unsat but brute sat: {cnf:?}");
                    unsat += 1;
                }
                CnfOutcome::BudgetExhausted => panic!("budget exhausted on tiny formula"),
            }
        }
        assert!(sat > 0 && unsat > 0, "sampled both outcomes: {sat}/{unsat}");
    }
}
