import pytest

from pebblehash.audit import (QueryTrace, TraceError, TracingOracle, audit, audit_trace, chi_for,
                              ex_post_facto, honest_levelwise, scripted_adversary)
from pebblehash.constructions import composite_binary_tree, cylinder, pyramid, time_optimal
from pebblehash.engine import PARALLEL, PebblingStrategy, validate
from pebblehash.shf import Oracle, OracleSpec, h1, h2

Z = bytes(8)


@pytest.mark.parametrize("d", [cylinder(2), cylinder(3), pyramid(4), time_optimal(3),
                               composite_binary_tree(3, 2)], ids=lambda d: d.name)
def test_honest_trace_is_legal_with_no_magic(spec64, d):
    o = TracingOracle(spec64)
    labels, state = honest_levelwise(d, o, Z)
    assert labels == list(h1(d, Oracle(spec64), Z).labels)
    epf = ex_post_facto(d, o, Z, o.trace)
    assert epf.unmatched == 0 and epf.matched == d.node_count and not epf.preload
    rep = audit(d, epf.strategy, chi=0)
    assert rep.legal and rep.goal_met and rep.magic_used == 0 and not rep.flagged
    # pebbles per step stay within the evaluator's memo set
    assert len(rep.timeline) == len(state)
    assert all(p <= s for p, s in zip(rep.timeline, state))


@pytest.mark.parametrize("h", [2, 3])
def test_injection_count_equals_magic(spec64, h):
    d = cylinder(h)
    level1 = list(range(h, 2 * h))
    for k in range(h + 1):
        o = TracingOracle(spec64, declared_input_bits=2 * 64)
        out = scripted_adversary(d, o, Z, level1[:k])
        assert out == list(h1(d, Oracle(spec64), Z).labels)
        rep = audit_trace(d, o, Z, o.trace)
        assert rep.legal and rep.goal_met
        assert rep.magic_used == k
        assert rep.chi == 2 and rep.flagged == (k > 2)


def test_pruning_keeps_required_pebbles(spec64):
    # re-simulate: every matched query's predecessors are pebbled one step earlier
    d = cylinder(3)
    o = TracingOracle(spec64)
    scripted_adversary(d, o, Z, [4, 8])
    epf = ex_post_facto(d, o, Z, o.trace)
    cfg = epf.strategy.configs
    shift = 1 if epf.preload else 0
    for i, batch in enumerate(o.trace.batches, 1):
        for q, _ in batch:
            v = int.from_bytes(q[1:9], "little")
            for u in d.preds[v]:
                assert u in cfg[i - 1 + shift].pebbled
    assert validate(d, epf.strategy, mode=PARALLEL) is None


def test_empty_trace(spec64):
    rep = audit_trace(cylinder(2), Oracle(spec64), Z, QueryTrace([], 0))
    assert rep.legal and not rep.goal_met and rep.magic_used == 0 and rep.timeline == []


def test_unmatched_queries_counted(spec64):
    d = cylinder(2)
    o = TracingOracle(spec64)
    honest_levelwise(d, o, Z)
    o.new_batch()
    table = h1(d, Oracle(spec64), Z)
    h2(table, o, bytes(7) + b"\x09")
    rep = audit_trace(d, o, Z, o.trace)
    assert rep.unmatched == 2 and rep.magic_used == 0 and rep.legal


def test_trace_roundtrip(spec64):
    o = TracingOracle(spec64, 192)
    honest_levelwise(cylinder(2), o, Z)
    text = o.trace.to_text()
    assert text.startswith("PTRACE1 192\n")
    back = QueryTrace.from_text(text)
    assert back == o.trace and back.queries == 8


@pytest.mark.parametrize("text", ["", "PTRACE2 0\n", "PTRACE1 x\n", "PTRACE1 0\nzz:00\n", "PTRACE1 0\n00\n"])
def test_trace_parse_errors(text):
    with pytest.raises(TraceError):
        QueryTrace.from_text(text)


def test_inconsistent_oracle(spec64):
    d = cylinder(2)
    o = TracingOracle(spec64)
    honest_levelwise(d, o, Z)
    q, a = o.trace.batches[0][0]
    forged = QueryTrace([[(q, a)], [(q, bytes(len(a)))]], 0)
    with pytest.raises(TraceError):
        ex_post_facto(d, Oracle(spec64), Z, forged)
    wrong = QueryTrace([[(q, bytes(len(a)))]], 0)
    with pytest.raises(TraceError):
        ex_post_facto(d, Oracle(spec64), Z, wrong)


def test_audit_flags_illegal_strategy():
    d = pyramid(2)
    s = PebblingStrategy.magic([({2}, set())])
    rep = audit(d, s, chi=1)
    assert not rep.legal and "illegal" in rep.violation


def test_chi():
    assert chi_for(1024, 512) == 2 and chi_for(511, 512) == 0


def test_first_batch_with_injected_inputs_preloads(spec64):
    # the only query computes the apex from two labels never derived in the trace
    from pebblehash.shf import all_labels, pre_label
    d = pyramid(2)
    truth = all_labels(d, Oracle(spec64), Z)
    o = TracingOracle(spec64)
    o.label_of(pre_label(d, 2, Z, truth))
    epf = ex_post_facto(d, o, Z, o.trace)
    assert epf.preload and epf.strategy.magic_used == 2
    assert epf.strategy.configs[1].magic == {0, 1}
    assert validate(d, epf.strategy, mode=PARALLEL) is None
