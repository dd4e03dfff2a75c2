//! Acceptance suite: one test per criterion, each printing a verdict
//! line (visible with `--nocapture`) and asserting it.

use protosynth::automata::{Automaton, AutomatonBuilder, Transition};
use protosynth::compose::{canonical_shape, compose2, compose_all};
use protosynth::manifest::Manifest;
use protosynth::reduction::{
    clause_environment, proposition_process, random_cnf, solve_cnf_explicit, solve_cnf_symbolic,
    CnfOutcome,
};
use protosynth::search::{solve, Instance, SearchConfig, SearchResult};
use protosynth::symbolic::{solve_symbolic, SymbolicConfig, SymbolicResult};
use protosynth::verify::{
    accepting_cycle_ndfs, accepting_scc, quick_check, verify_all, NbMode, Profile,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::time::Instant;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/abp/{name}"))
}

#[test]
fn criterion_1_abp_from_one_scenario() {
    let started = Instant::now();
    let man = Manifest::load(&fixture("scenario1.toml")).unwrap();
    assert_eq!(man.components[0].automaton.n_states(), 6, "sender skeleton");
    assert_eq!(man.components[1].automaton.n_states(), 6, "receiver skeleton");
    let instance = man.instance().unwrap();
    assert_eq!(instance.profile, Profile::full(NbMode::Weak));
    let added = match solve_symbolic(&instance, &SymbolicConfig::default()) {
        SymbolicResult::Solution(added, _) => added,
        other => panic!("bdd engine failed: {other:?}"),
    };
    assert_eq!(added.len(), 6, "added transitions");
    let product = compose_all(&instance.completed(&added)).unwrap();
    assert!(verify_all(&product, &instance.profile).passed());
    let secs = started.elapsed().as_secs_f32();
    assert!(secs <= 300.0, "exceeded the five-minute budget: {secs:.0}s");
    println!(
        "criterion 1 (one-scenario ABP, bdd engine): pass — 6+6 skeleton states, \
         6 transitions added, verified in {secs:.1}s"
    );
}

#[test]
fn criterion_2_abp_all_scenarios() {
    let started = Instant::now();
    let man = Manifest::load(&fixture("all_scenarios.toml")).unwrap();
    assert_eq!(man.components[0].automaton.n_states(), 12, "sender skeleton");
    assert_eq!(man.components[1].automaton.n_states(), 8, "receiver skeleton");
    let instance = man.instance().unwrap();
    let added = match solve(&instance, &SearchConfig::default()) {
        SearchResult::Solution(added, _) => added,
        other => panic!("explicit engine failed: {other:?}"),
    };
    assert_eq!(added.len(), 8, "added transitions");
    let product = compose_all(&instance.completed(&added)).unwrap();
    assert!(verify_all(&product, &instance.profile).passed());
    let secs = started.elapsed().as_secs_f32();
    assert!(secs <= 600.0, "exceeded the ten-minute budget: {secs:.0}s");
    println!(
        "criterion 2 (all-scenario ABP, explicit engine): pass — 12+8 skeleton states, \
         8 transitions added, verified in {secs:.1}s"
    );
}

#[test]
fn criterion_3_manual_solution_verifies() {
    let man = Manifest::load(&fixture("manual.toml")).unwrap();
    let product = compose_all(&man.automata()).unwrap();
    assert!(product.is_closed(), "product must be closed");
    let report = verify_all(&product, &man.profile);
    assert!(report.passed(), "manual solution failed: {report:?}");
    println!(
        "criterion 3 (manual solution): pass — closed product, {} states, full profile",
        report.n_states
    );
}

#[test]
fn criterion_4_reduction_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let mut sat = 0u32;
    for i in 0..200u64 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=10);
        let cnf = random_cnf(rng.gen::<u64>() ^ i, n, m);

        let p = proposition_process(cnf.n_vars);
        let e = clause_environment(&cnf);
        assert_eq!(p.n_states(), 2 * n + 1, "|Q_P| formula");
        assert_eq!(e.n_states(), 6 * m + 2, "|Q_E| formula");
        assert_eq!(e.transitions().len(), 9 * m + 1, "|T_E| formula");

        let brute = cnf.brute_force();
        let explicit = solve_cnf_explicit(&cnf, &SearchConfig::default());
        let symbolic = solve_cnf_symbolic(&cnf, &SymbolicConfig::default());
        for (engine, outcome) in [("explicit", &explicit), ("bdd", &symbolic)] {
            match outcome {
                CnfOutcome::Sat(a) => {
                    assert!(brute.is_some(), "{engine} sat but brute unsat: {cnf:?}");
                    assert!(cnf.eval(a), "{engine} model falsifies a clause: {cnf:?}");
                }
                CnfOutcome::Unsat => {
                    assert!(brute.is_none(), "{engine} unsat but brute sat: {cnf:?}")
                }
                CnfOutcome::BudgetExhausted => panic!("{engine} exhausted on tiny formula"),
            }
        }
        if brute.is_some() {
            sat += 1;
        }
    }
    let secs = started.elapsed().as_secs_f32();
    assert!(secs <= 600.0, "exceeded the ten-minute budget: {secs:.0}s");
    println!(
        "criterion 4 (3SAT reduction equivalence): pass — 200 formulas \
         ({sat} sat), three engines agree, sizes exact, {secs:.1}s"
    );
}

/// Random two-party instance: an environment with error and accepting
/// marks, and a sparse process skeleton to complete.
fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let mut e = AutomatonBuilder::new("env");
    e.output("a");
    e.output("b");
    e.input("c");
    e.input("d");
    let en = rng.gen_range(3..=6);
    let estates: Vec<String> = (0..en).map(|i| format!("e{i}")).collect();
    for s in &estates {
        e.state(s);
    }
    for s in &estates {
        for ev in ["a", "b", "c", "d"] {
            if rng.gen_bool(0.4) {
                let dst = &estates[rng.gen_range(0..en)];
                e.trans(s, ev, dst);
            }
        }
    }
    let q0 = e.state(&estates[0]);
    e.set_initial(q0);
    let qerr = e.state(&estates[rng.gen_range(0..en)]);
    e.mark_error(qerr);
    let qacc = e.state(&estates[rng.gen_range(0..en)]);
    e.mark_accepting(qacc);

    let mut p = AutomatonBuilder::new("proc");
    p.input("a");
    p.input("b");
    p.output("c");
    p.output("d");
    let pn = rng.gen_range(3..=5);
    let pstates: Vec<String> = (0..pn).map(|i| format!("p{i}")).collect();
    for s in &pstates {
        p.state(s);
    }
    // A thin skeleton: roughly one fixed transition.
    for s in &pstates {
        if rng.gen_bool(0.3) {
            let ev = ["a", "b"][rng.gen_range(0..2)];
            let dst = &pstates[rng.gen_range(0..pn)];
            p.trans(s, ev, dst);
        }
    }
    let q0 = p.state(&pstates[0]);
    p.set_initial(q0);

    Instance {
        components: vec![p.build(), e.build()],
        targets: vec![0],
        profile: Profile::full(NbMode::Strong),
    }
}

#[test]
fn criterion_5_monotone_pruning() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbead_5eed);
    let mut checked = 0u32;
    let mut attempts = 0u64;
    while checked < 500 {
        attempts += 1;
        assert!(attempts < 200_000, "generator failed to produce violations");
        let instance = random_instance(&mut rng);
        let candidates = instance.candidates();
        if candidates.is_empty() {
            continue;
        }
        let base: Vec<(usize, Transition)> = candidates
            .iter()
            .filter(|_| rng.gen_bool(0.25))
            .map(|c| (c.component, c.transition))
            .collect();
        let Ok(product) = compose_all(&instance.completed(&base)) else {
            continue;
        };
        let verdict = quick_check(&product, &instance.profile);
        if verdict.safe && verdict.live {
            continue;
        }
        // Any superset must keep the violation.
        let mut superset = base.clone();
        for c in &candidates {
            if rng.gen_bool(0.25) {
                let t = (c.component, c.transition);
                if !superset.contains(&t) {
                    superset.push(t);
                }
            }
        }
        let sup_product = compose_all(&instance.completed(&superset)).unwrap();
        let sup = quick_check(&sup_product, &instance.profile);
        if !verdict.safe {
            assert!(!sup.safe, "safety violation vanished under a superset");
        }
        if !verdict.live {
            assert!(!sup.live, "liveness violation vanished under a superset");
        }
        checked += 1;
    }
    println!(
        "criterion 5 (monotone pruning): pass — 500 violating completions \
         stayed violated under supersets ({attempts} samples)"
    );
}

/// Random component set with pairwise-disjoint outputs.
fn random_components(rng: &mut ChaCha8Rng, k: usize) -> Vec<Automaton> {
    let outs = ["o0", "o1", "o2"];
    let mut comps = Vec::new();
    for c in 0..k {
        let mut b = AutomatonBuilder::new(&format!("c{c}"));
        b.output(outs[c]);
        for (o, &ev) in outs.iter().enumerate().take(k) {
            if o != c && rng.gen_bool(0.7) {
                b.input(ev);
            }
        }
        let n = rng.gen_range(2..=4);
        let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
        for s in &states {
            b.state(s);
        }
        let mut events: Vec<&str> = vec![outs[c]];
        for (o, &ev) in outs.iter().enumerate().take(k) {
            if o != c {
                events.push(ev);
            }
        }
        for s in &states {
            for &ev in &events {
                if rng.gen_bool(0.4) {
                    let dst = &states[rng.gen_range(0..n)];
                    b.trans(s, ev, dst);
                }
            }
        }
        let q0 = b.state(&states[0]);
        b.set_initial(q0);
        if rng.gen_bool(0.3) {
            let q = b.state(&states[rng.gen_range(0..n)]);
            b.mark_accepting(q);
        }
        comps.push(b.build());
    }
    // Inputs nobody sends would differ between groupings only in name;
    // drop components' unused inputs by keeping the set as-is (they are
    // all sent: every output above is some other component's potential
    // input, and external inputs are part of the composition semantics).
    comps
}

#[test]
fn criterion_6_composition_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa15e_cafe);
    for i in 0..200 {
        let k = if i % 2 == 0 { 2 } else { 3 };
        let comps = random_components(&mut rng, k);
        let flat = compose_all(&comps).unwrap().to_automaton("flat");
        let mut perm: Vec<Automaton> = comps.clone();
        perm.rotate_left(1);
        let rotated = compose_all(&perm).unwrap().to_automaton("rot");
        assert_eq!(
            canonical_shape(&flat),
            canonical_shape(&rotated),
            "permutation changed the product (iteration {i})"
        );
        if k == 3 {
            let inner = compose2(&comps[0], &comps[1]).unwrap().to_automaton("in");
            let nested = compose2(&inner, &comps[2]).unwrap().to_automaton("nest");
            assert_eq!(
                canonical_shape(&flat),
                canonical_shape(&nested),
                "reparenthesization changed the product (iteration {i})"
            );
        }
    }
    println!(
        "criterion 6 (composition algebra): pass — 200 permuted/regrouped \
         compositions isomorphic"
    );
}

#[test]
fn criterion_7_liveness_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ce_d1ce);
    let mut cyclic = 0u32;
    for _ in 0..300 {
        let n = rng.gen_range(2..=500);
        let mut b = AutomatonBuilder::new("g");
        for ev in ["x", "y", "z"] {
            b.output(ev);
        }
        let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        for s in &states {
            b.state(s);
        }
        for s in &states {
            for _ in 0..rng.gen_range(0..=2) {
                let ev = ["x", "y", "z"][rng.gen_range(0..3)];
                let dst = &states[rng.gen_range(0..n)];
                b.trans(s, ev, dst);
            }
        }
        let q0 = b.state(&states[0]);
        b.set_initial(q0);
        for s in &states {
            if rng.gen_bool(0.15) {
                let q = b.state(s);
                b.mark_accepting(q);
            }
        }
        let p = compose_all(&[b.build()]).unwrap();
        let ex = p.explore();
        let scc = accepting_scc(&p, &ex).is_some();
        let ndfs = accepting_cycle_ndfs(&p, &ex);
        assert_eq!(scc, ndfs, "NDFS and SCC disagree on a {n}-state graph");
        if scc {
            cyclic += 1;
        }
    }
    println!(
        "criterion 7 (liveness oracle): pass — 300 random marked graphs, \
         NDFS and SCC agree ({cyclic} with accepting cycles)"
    );
}

#[test]
fn criterion_8_no_scenario_smoke() {
    // Completion from blank automata at the manual solution's state
    // bounds. The outcome within 60 s is reported, not asserted: the
    // candidate space is the whole transition structure of both parties.
    let man = Manifest::load(&fixture("no_scenario.toml")).unwrap();
    let instance = man.instance().unwrap();
    let shown = instance.clone();
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let r = solve(&instance, &SearchConfig::default());
        let _ = tx.send(r);
    });
    match rx.recv_timeout(std::time::Duration::from_secs(60)) {
        Ok(SearchResult::Solution(added, _)) => {
            // With no scenario behavior to honor, a protocol that never
            // starts sending violates nothing the monitors can observe, so
            // degenerate completions are legitimate here.
            let lines: Vec<String> = added
                .iter()
                .map(|&(c, t)| {
                    let a = &shown.components[c];
                    format!(
                        "{}:{}-{}->{}",
                        a.name(),
                        a.state_name(t.src),
                        t.event,
                        a.state_name(t.dst)
                    )
                })
                .collect();
            println!(
                "criterion 8 (no-scenario smoke): reported — completed within 60s \
                 with a degenerate idle protocol ({})",
                lines.join(", ")
            );
        }
        Ok(other) => println!(
            "criterion 8 (no-scenario smoke): reported — terminated without \
             a solution within 60s ({other:?})"
        ),
        Err(_) => println!(
            "criterion 8 (no-scenario smoke): reported — no completion \
             within the 60s budget, as expected at this scale"
        ),
    }
}
