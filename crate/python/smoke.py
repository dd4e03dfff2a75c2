#!/usr/bin/env python3
"""Smoke test for the protosynth_py extension module.

Install first:  pip install -e crates/py --no-build-isolation
Run:            python3 python/smoke.py
"""

from pathlib import Path

import protosynth_py as ps

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures" / "abp"


def load(name):
    return ps.Automaton.parse((FIXTURES / name).read_text())


def main():
    # Parse, validate, and round-trip an automaton.
    sender = load("sender_manual.aut")
    assert sender.name == "sender" and sender.n_states == 6
    assert sender.validate() == [] and sender.is_deterministic()
    assert ps.Automaton.parse(sender.emit()).emit() == sender.emit()
    assert "digraph" in sender.to_dot()

    # Scenario compilation reproduces the skeleton sizes.
    skeletons = ps.compile_scenarios((FIXTURES / "abp.scn").read_text())
    assert skeletons["sender"].n_states == 12
    assert skeletons["receiver"].n_states == 8

    # The manual solution composes into a closed product passing all checks.
    components = [sender, load("receiver_manual.aut")] + [
        load(n)
        for n in (
            "fwd_channel.aut",
            "bwd_channel.aut",
            "timer.aut",
            "safety_monitor.aut",
            "live_send_deliver.aut",
            "live_deliver_send.aut",
        )
    ]
    assert ps.compose(components).is_closed()
    report = ps.verify(components, nonblocking="weak")
    assert report["passed"], report

    # Explicit synthesis: drop the sender and let the search rebuild its
    # missing timeout/stale-ack handling from the merged skeletons.
    incomplete = [skeletons["sender"].with_interface(["timeout"], [])] + components[1:]
    added = ps.synthesize(incomplete, [0], engine="explicit")
    assert added is not None and len(added) == 8, added

    # SAT through the completion reduction, both engines and brute force.
    sat = "p cnf 2 2\n1 -2 0\n-1 2 0\n"
    unsat = "p cnf 1 2\n1 0\n-1 0\n"
    for engine in ("brute", "explicit", "bdd"):
        assert ps.sat_solve(sat, engine=engine) is not None
        assert ps.sat_solve(unsat, engine=engine) is None

    print("python bindings smoke test: ok")


if __name__ == "__main__":
    main()
