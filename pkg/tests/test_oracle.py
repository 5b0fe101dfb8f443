from dataclasses import replace

import pytest

from conftest import P1, P2, P3, P4
from kcrb.crypto import KeyRing
from kcrb.protocol import Accuse, Deliver, MisbehaviorProof, sign_value
from kcrb.sim import OracleError, Scenario, check_trace, run
from kcrb.sim.engine import Trace, TraceEntry
from kcrb.sim.oracle import PROPERTIES


def honest_trace(a, source=P3, seed=0):
    sc = Scenario(a, source, frozenset(), "silent", {}, (b"m",), seed)
    return sc, run(sc)


def edited(trace: Trace, entries) -> Trace:
    return replace(trace, entries=list(entries))


def with_outputs(trace, process, fn):
    """Apply ``fn`` to the outputs of the first entry of ``process`` that has any."""
    out, done = [], False
    for e in trace.entries:
        if not done and e.process == process and e.outputs:
            e = replace(e, outputs=tuple(fn(e.outputs)))
            done = True
        out.append(e)
    assert done
    return edited(trace, out)


def failed(report):
    return report.failed()


def test_clean_honest_run(example1):
    sc, t = honest_trace(example1)
    rep = check_trace(t, sc, 1)
    assert rep.ok and set(rep.verdicts) == set(PROPERTIES)
    assert rep.distinct_values == 1
    assert rep.to_dict()["ok"] is True


def test_refuses_non_quiescent(example1):
    sc, t = honest_trace(example1)
    with pytest.raises(OracleError):
        check_trace(replace(t, quiescent=False), sc, 1)


def test_second_delivery_breaks_integrity(example1):
    sc, t = honest_trace(example1)
    bad = with_outputs(t, P1, lambda outs: list(outs) + [Deliver(b"m")])
    assert failed(check_trace(bad, sc, 1)) == ["integrity"]


def test_unbroadcast_value_breaks_integrity(example1):
    sc, t = honest_trace(example1)
    bad = with_outputs(t, P2, lambda outs: [Deliver(b"z")])
    rep = check_trace(bad, sc, 2)
    assert "integrity" in failed(rep) and "validity" in failed(rep)
    assert rep.verdicts["integrity"].index is not None


def test_removed_delivery_breaks_validity_and_totality(example1):
    sc, t = honest_trace(example1)
    bad = with_outputs(t, P4, lambda outs: [])
    assert failed(check_trace(bad, sc, 1)) == ["validity", "weak_totality"]


def _delivery(p, value, quorum):
    return TraceEntry(0, p, "receive", outputs=(Deliver(value, frozenset(quorum)),))


def _faulty_source_trace(entries):
    return Trace(4, P3, frozenset({P3}), list(entries), quiescent=True)


@pytest.fixture
def faulty_source(example1):
    return Scenario(example1, P3, {P3}, "silent", {}, (b"A", b"B"), 0)


def test_too_many_values_break_k_consistency(faulty_source):
    t = _faulty_source_trace([_delivery(P1, b"A", {P1, P2, P3}),
                              _delivery(P4, b"B", {P3, P4})])
    # p2 stays silent but is not live: both its quorums contain p3
    assert check_trace(t, faulty_source, 2).ok
    rep = check_trace(t, faulty_source, 1)
    assert "k_consistency" in failed(rep) and rep.distinct_values == 2


def test_pairwise_consistency_uses_correct_intersection(faulty_source):
    # {p1,p2,p3} and {p2,p3,p4} meet in correct p2
    bad = _faulty_source_trace([_delivery(P1, b"A", {P1, P2, P3}),
                                _delivery(P2, b"A", {P1, P2, P3}),
                                _delivery(P4, b"B", {P2, P3, P4})])
    assert "pairwise_consistency" in failed(check_trace(bad, faulty_source, 2))
    # {p1,p2,p3} and {p3,p4} meet only in faulty p3
    ok = _faulty_source_trace([_delivery(P1, b"A", {P1, P2, P3}),
                               _delivery(P2, b"A", {P1, P2, P3}),
                               _delivery(P4, b"B", {P3, P4})])
    assert check_trace(ok, faulty_source, 2).ok


def _proof(seed, source, v1=b"A", v2=b"B"):
    keys = KeyRing(seed, 4)
    s = keys.grant(source)
    return MisbehaviorProof(sign_value(s, b"instance-0", v1), sign_value(s, b"instance-0", v2))


def test_accusing_a_correct_source_breaks_accuracy(example1):
    sc, t = honest_trace(example1)
    bad = with_outputs(t, P1, lambda outs: list(outs) + [Accuse(_proof(0, P3))])
    rep = check_trace(bad, sc, 1)
    assert "accuracy" in failed(rep) and "certitude" in failed(rep)


def test_unverifiable_proof_breaks_accuracy(example1):
    forged = _proof(99, P3)  # signed under another run's keys
    for seed in range(40):
        sc = Scenario(example1, P3, {P3}, "equivocate_split", {}, (b"A", b"B"), seed)
        t = run(sc)
        if not t.accusations():
            continue
        assert check_trace(t, sc, 2).ok
        bad = edited(t, [replace(e, outputs=tuple(Accuse(forged) if isinstance(o, Accuse)
                                                  else o for o in e.outputs))
                         for e in t.entries])
        assert failed(check_trace(bad, sc, 2)) == ["accuracy"]
        return
    pytest.fail("no run with an accusation")


def test_partial_accusation_breaks_certitude(example1):
    for seed in range(40):
        sc = Scenario(example1, P3, {P3}, "equivocate_split", {}, (b"A", b"B"), seed)
        t = run(sc)
        acc = t.accusations()
        if len(acc) < 2:
            continue
        keep = min(acc)
        bad = edited(t, [replace(e, outputs=tuple(o for o in e.outputs
                                                  if not isinstance(o, Accuse)
                                                  or e.process == keep))
                         for e in t.entries])
        assert failed(check_trace(bad, sc, 2)) == ["certitude"]
        return
    pytest.fail("no run with several accusations")


def test_double_accusation_breaks_integrity(example1):
    for seed in range(40):
        sc = Scenario(example1, P3, {P3}, "equivocate_split", {}, (b"A", b"B"), seed)
        t = run(sc)
        acc = t.accusations()
        if not acc:
            continue
        p = min(acc)
        bad = with_outputs(t, p, lambda outs: list(outs) + [Accuse(acc[p][0])])
        rep = check_trace(bad, sc, 2)
        assert rep.verdicts["integrity"].passed is False
        return
    pytest.fail("no run with an accusation")


def test_local_progress_verdict(example1):
    sc, t = honest_trace(example1, source=P1)
    assert check_trace(t, sc, 1).verdicts["local_progress"].passed
    assert check_trace(t, sc, 1, local_progress=False).verdicts["local_progress"].detail \
        == "not checked"
