//! Alternating-bit protocol components used across tests, examples, and
//! the bundled fixture files.
//!
//! Naming: the sender's outputs are `send` (accept a fresh message), `p0`/`p1`
//! (transmit with a parity bit); the receiver outputs `deliver` and the
//! acknowledgements `a0`/`a1`. Primed events are the channel-side copies:
//! the forward channel turns `p0` into `p0'`, the backward channel turns
//! `a0` into `a0'`. Channels are lossy and may duplicate each message at
//! most once, so every stored packet is emitted at most twice.

use crate::automata::{Automaton, AutomatonBuilder};

/// Fully completed sender: resends on timeout, ignores stale acks in place.
pub fn abp_sender_manual() -> Automaton {
    let mut b = AutomatonBuilder::new("sender");
    for e in ["a0'", "a1'", "timeout"] {
        b.input(e);
    }
    for e in ["send", "p0", "p1"] {
        b.output(e);
    }
    b.trans("s0", "send", "s1");
    b.trans("s1", "p0", "s2");
    b.trans("s2", "a0'", "s3");
    b.trans("s2", "timeout", "s1");
    b.trans("s2", "a1'", "s2");
    b.trans("s3", "send", "s4");
    b.trans("s4", "p1", "s5");
    b.trans("s5", "a1'", "s0");
    b.trans("s5", "timeout", "s4");
    b.trans("s5", "a0'", "s5");
    let init = b.state("s0");
    b.set_initial(init);
    b.build()
}

/// Completed sender variant where a stale ack triggers a retransmission
/// instead of being ignored.
pub fn abp_sender_computed() -> Automaton {
    let mut b = AutomatonBuilder::new("sender");
    for e in ["a0'", "a1'", "timeout"] {
        b.input(e);
    }
    for e in ["send", "p0", "p1"] {
        b.output(e);
    }
    b.trans("s0", "send", "s1");
    b.trans("s1", "p0", "s2");
    b.trans("s2", "a0'", "s3");
    b.trans("s2", "timeout", "s1");
    b.trans("s2", "a1'", "s1");
    b.trans("s3", "send", "s4");
    b.trans("s4", "p1", "s5");
    b.trans("s5", "a1'", "s0");
    b.trans("s5", "timeout", "s4");
    b.trans("s5", "a0'", "s4");
    let init = b.state("s0");
    b.set_initial(init);
    b.build()
}

/// Fully completed receiver: re-acknowledges duplicate packets without
/// delivering them again.
pub fn abp_receiver_manual() -> Automaton {
    let mut b = AutomatonBuilder::new("receiver");
    for e in ["p0'", "p1'"] {
        b.input(e);
    }
    for e in ["deliver", "a0", "a1"] {
        b.output(e);
    }
    b.trans("r0", "p0'", "r1");
    b.trans("r1", "deliver", "r2");
    b.trans("r2", "a0", "r3");
    b.trans("r3", "p1'", "r4");
    b.trans("r4", "deliver", "r5");
    b.trans("r5", "a1", "r0");
    b.trans("r0", "p1'", "r5");
    b.trans("r3", "p0'", "r2");
    let init = b.state("r0");
    b.set_initial(init);
    b.build()
}

/// Sender skeleton from the loss-free scenario and its bit-flipped mirror:
/// one six-state cycle, no timeout or stale-ack handling yet.
pub fn abp_sender_scenario1_skeleton() -> Automaton {
    let mut b = AutomatonBuilder::new("sender");
    for e in ["a0'", "a1'", "timeout"] {
        b.input(e);
    }
    for e in ["send", "p0", "p1"] {
        b.output(e);
    }
    b.trans("s0", "send", "s1");
    b.trans("s1", "p0", "s2");
    b.trans("s2", "a0'", "s3");
    b.trans("s3", "send", "s4");
    b.trans("s4", "p1", "s5");
    b.trans("s5", "a1'", "s0");
    let init = b.state("s0");
    b.set_initial(init);
    b.build()
}

/// Receiver skeleton from the loss-free scenario and its mirror.
pub fn abp_receiver_scenario1_skeleton() -> Automaton {
    let mut b = AutomatonBuilder::new("receiver");
    for e in ["p0'", "p1'"] {
        b.input(e);
    }
    for e in ["deliver", "a0", "a1"] {
        b.output(e);
    }
    b.trans("r0", "p0'", "r1");
    b.trans("r1", "deliver", "r2");
    b.trans("r2", "a0", "r3");
    b.trans("r3", "p1'", "r4");
    b.trans("r4", "deliver", "r5");
    b.trans("r5", "a1", "r0");
    let init = b.state("r0");
    b.set_initial(init);
    b.build()
}

/// Sender skeleton from all four scenarios plus mirrors: timeout-resend and
/// stale-ack branches are present for the first attempt, but the states
/// entered after a stale ack or a resend still miss their own timeout and
/// stale-ack transitions (eight open slots in total).
pub fn abp_sender_all_skeleton() -> Automaton {
    let mut b = AutomatonBuilder::new("sender");
    for e in ["a0'", "a1'", "timeout"] {
        b.input(e);
    }
    for e in ["send", "p0", "p1"] {
        b.output(e);
    }
    b.trans("a0", "send", "a1");
    b.trans("a1", "p0", "a2");
    b.trans("a2", "a0'", "b0");
    b.trans("a2", "timeout", "a4");
    b.trans("a2", "a1'", "a3");
    b.trans("a3", "a0'", "b0");
    b.trans("a4", "p0", "a5");
    b.trans("a5", "a0'", "b0");
    b.trans("b0", "send", "b1");
    b.trans("b1", "p1", "b2");
    b.trans("b2", "a1'", "a0");
    b.trans("b2", "timeout", "b4");
    b.trans("b2", "a0'", "b3");
    b.trans("b3", "a1'", "a0");
    b.trans("b4", "p1", "b5");
    b.trans("b5", "a1'", "a0");
    let init = b.state("a0");
    b.set_initial(init);
    b.build()
}

/// Receiver skeleton from all four scenarios plus mirrors: already complete,
/// with a separate re-acknowledgement branch for duplicate packets.
pub fn abp_receiver_all_skeleton() -> Automaton {
    let mut b = AutomatonBuilder::new("receiver");
    for e in ["p0'", "p1'"] {
        b.input(e);
    }
    for e in ["deliver", "a0", "a1"] {
        b.output(e);
    }
    b.trans("r0", "p0'", "c1");
    b.trans("c1", "deliver", "c2");
    b.trans("c2", "a0", "r3");
    b.trans("r0", "p1'", "e1");
    b.trans("e1", "a1", "r0");
    b.trans("r3", "p1'", "d1");
    b.trans("d1", "deliver", "d2");
    b.trans("d2", "a1", "r0");
    b.trans("r3", "p0'", "f1");
    b.trans("f1", "a0", "r3");
    let init = b.state("r0");
    b.set_initial(init);
    b.build()
}

fn channel(name: &str, in0: &str, in1: &str, out0: &str, out1: &str) -> Automaton {
    let mut b = AutomatonBuilder::new(name);
    b.input(in0);
    b.input(in1);
    b.output(out0);
    b.output(out1);
    // e: empty; h<k>: holding a fresh packet; d<k>: holding a duplicate
    // (emitted once already). A newly received packet overwrites whatever
    // is stored, so the channel is receptive and loss is always possible.
    b.trans("e", in0, "e");
    b.trans("e", in0, "h0");
    b.trans("e", in1, "e");
    b.trans("e", in1, "h1");
    b.trans("h0", out0, "e");
    b.trans("h0", out0, "d0");
    b.trans("h0", in0, "h0");
    b.trans("h0", in1, "h1");
    b.trans("h1", out1, "e");
    b.trans("h1", out1, "d1");
    b.trans("h1", in0, "h0");
    b.trans("h1", in1, "h1");
    b.trans("d0", out0, "e");
    b.trans("d0", in0, "h0");
    b.trans("d0", in1, "h1");
    b.trans("d1", out1, "e");
    b.trans("d1", in0, "h0");
    b.trans("d1", in1, "h1");
    let init = b.state("e");
    b.set_initial(init);
    b.build()
}

/// Lossy, duplicating packet channel from sender to receiver.
pub fn forward_channel() -> Automaton {
    channel("fwd_channel", "p0", "p1", "p0'", "p1'")
}

/// Lossy, duplicating ack channel from receiver to sender.
pub fn backward_channel() -> Automaton {
    channel("bwd_channel", "a0", "a1", "a0'", "a1'")
}

/// Free-running timeout source.
pub fn timer() -> Automaton {
    let mut b = AutomatonBuilder::new("timer");
    b.output("timeout");
    b.trans("t", "timeout", "t");
    let init = b.state("t");
    b.set_initial(init);
    b.build()
}

/// Safety monitor: `send` and `deliver` must strictly alternate, starting
/// with `send`.
pub fn safety_monitor() -> Automaton {
    let mut b = AutomatonBuilder::new("alternation");
    b.input("send");
    b.input("deliver");
    b.trans("idle", "send", "busy");
    b.trans("idle", "deliver", "err");
    b.trans("busy", "deliver", "idle");
    b.trans("busy", "send", "err");
    b.trans("err", "send", "err");
    b.trans("err", "deliver", "err");
    let init = b.state("idle");
    b.set_initial(init);
    let e = b.state("err");
    b.mark_error(e);
    b.build()
}

/// Liveness monitor for "every send is eventually followed by a deliver".
///
/// Accepting runs are the bad ones. The always-running copy tracks whether
/// a send is pending (no deliver since). While pending, every event also
/// nondeterministically commits a claim about the whole remaining suffix:
///
/// * `ma`: nothing but sends will ever be observed again — catches
///   completions that sit on a silent self-loop instead of retransmitting;
/// * `mb`/`mba`: packets keep arriving at the receiver (primed packet
///   events, visiting the accepting `mba`) yet it never delivers or
///   acknowledges.
///
/// Any refuting event kills the committed copy in the absorbing `dead`
/// state — never back to the tracking states, or the commit point itself
/// would close an accepting cycle. Channels may drop everything forever,
/// so suffixes without packet arrivals are deliberately not accepted, and
/// an acknowledgement counts as receiver progress.
pub fn live_monitor_send_deliver() -> Automaton {
    let mut b = AutomatonBuilder::new("live_send_deliver");
    let alphabet = ["send", "deliver", "p0", "p1", "p0'", "p1'", "a0", "a1"];
    for e in alphabet {
        b.input(e);
        b.trans("dead", e, "dead");
        let idle_dst = if e == "send" { "m_pend" } else { "m_idle" };
        b.trans("m_idle", e, idle_dst);
        let pend_dst = if e == "deliver" { "m_idle" } else { "m_pend" };
        b.trans("m_pend", e, pend_dst);
        b.trans("m_pend", e, "ma");
        b.trans("m_pend", e, "mb");
    }
    b.trans("ma", "send", "ma");
    for e in ["deliver", "p0", "p1", "p0'", "p1'", "a0", "a1"] {
        b.trans("ma", e, "dead");
    }
    for src in ["mb", "mba"] {
        b.trans(src, "p0'", "mba");
        b.trans(src, "p1'", "mba");
        for e in ["deliver", "a0", "a1"] {
            b.trans(src, e, "dead");
        }
        for e in ["send", "p0", "p1"] {
            b.trans(src, e, "mb");
        }
    }
    let init = b.state("m_idle");
    b.set_initial(init);
    let ma = b.state("ma");
    let mba = b.state("mba");
    b.mark_accepting(ma);
    b.mark_accepting(mba);
    b.build()
}

/// Liveness monitor for "every deliver is eventually followed by a send".
///
/// Mirror of [`live_monitor_send_deliver`]. While a deliver is pending
/// (no send since), every event can commit one of two suffix claims:
/// `na` — nothing but delivers will ever be observed again; `nb`/`nba` —
/// packets or acks keep moving through the channels (primed events,
/// visiting the accepting `nba`) yet the receiver never re-acknowledges
/// and the sender never starts the next message.
pub fn live_monitor_deliver_send() -> Automaton {
    let mut b = AutomatonBuilder::new("live_deliver_send");
    let alphabet = [
        "send", "deliver", "p0", "p1", "p0'", "p1'", "a0", "a1", "a0'", "a1'",
    ];
    for e in alphabet {
        b.input(e);
        b.trans("dead", e, "dead");
        let idle_dst = if e == "deliver" { "n_pend" } else { "n_idle" };
        b.trans("n_idle", e, idle_dst);
        let pend_dst = if e == "send" { "n_idle" } else { "n_pend" };
        b.trans("n_pend", e, pend_dst);
        b.trans("n_pend", e, "na");
        b.trans("n_pend", e, "nb");
    }
    b.trans("na", "deliver", "na");
    for e in ["send", "p0", "p1", "p0'", "p1'", "a0", "a1", "a0'", "a1'"] {
        b.trans("na", e, "dead");
    }
    for src in ["nb", "nba"] {
        for e in ["p0'", "p1'", "a0'", "a1'"] {
            b.trans(src, e, "nba");
        }
        for e in ["send", "a0", "a1"] {
            b.trans(src, e, "dead");
        }
        for e in ["deliver", "p0", "p1"] {
            b.trans(src, e, "nb");
        }
    }
    let init = b.state("n_idle");
    b.set_initial(init);
    let na = b.state("na");
    let nba = b.state("nba");
    b.mark_accepting(na);
    b.mark_accepting(nba);
    b.build()
}

/// The full closed environment for the protocol: channels, timer, and the
/// three requirement monitors.
pub fn abp_environment() -> Vec<Automaton> {
    vec![
        forward_channel(),
        backward_channel(),
        timer(),
        safety_monitor(),
        live_monitor_send_deliver(),
        live_monitor_deliver_send(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn environment_components_are_receptive() {
        for a in abp_environment() {
            assert!(a.validate().is_empty(), "{} has violations", a.name());
            assert!(a.is_receptive(), "{} is not receptive", a.name());
        }
    }

    #[test]
    fn skeleton_sizes() {
        assert_eq!(abp_sender_scenario1_skeleton().n_states(), 6);
        assert_eq!(abp_receiver_scenario1_skeleton().n_states(), 6);
        assert_eq!(abp_sender_all_skeleton().n_states(), 12);
        assert_eq!(abp_sender_all_skeleton().transitions().len(), 16);
        assert_eq!(abp_receiver_all_skeleton().n_states(), 8);
        assert_eq!(abp_receiver_all_skeleton().transitions().len(), 10);
    }

    #[test]
    fn manual_solutions_extend_skeletons() {
        let sk = abp_sender_scenario1_skeleton();
        let full = abp_sender_manual();
        for t in sk.transitions() {
            assert!(full.transitions().contains(t));
        }
        assert_eq!(full.transitions().len(), sk.transitions().len() + 4);

        let sk = abp_receiver_scenario1_skeleton();
        let full = abp_receiver_manual();
        for t in sk.transitions() {
            assert!(full.transitions().contains(t));
        }
        assert_eq!(full.transitions().len(), sk.transitions().len() + 2);
    }

    #[test]
    fn timer_is_minimal() {
        let t = timer();
        assert_eq!(t.n_states(), 1);
        assert!(t.is_closed());
    }
}
