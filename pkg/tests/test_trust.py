import itertools
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import P1, P2, P3, P4
from oracles import all_faulty_sets, subsets
from kcrb.trust import (ConfigError, FaultModel, TrustAssumptions, TrustError,
                        enumerate_faulty_sets, from_dict, generate_clusters, generate_random,
                        generate_uniform, is_faulty_set, is_live, parse_config,
                        serialize_config, to_dict, validate)


def kinds(a):
    return [v.kind for v in validate(a)]


def test_example1_parses_and_validates(example1):
    assert example1.n == 4
    assert example1.labels == ("p1", "p2", "p3", "p4")
    assert validate(example1) == []
    assert example1.quorums[P4] == (frozenset({P1, P3, P4}), frozenset({P2, P4}),
                                    frozenset({P3, P4}))
    assert example1.fault_model.maximal_sets == (frozenset({P3}),)


def test_example1_faulty_sets(example1):
    assert list(enumerate_faulty_sets(example1.fault_model)) == [frozenset(), frozenset({P3})]
    assert is_faulty_set(example1.fault_model, {P3})
    assert not is_faulty_set(example1.fault_model, {P1, P2})


def test_liveness_examples(example1):
    assert is_live(example1, P4, {P3})          # {p2,p4} avoids p3
    assert not is_live(example1, P1, {P3})      # every quorum of p1 contains p3
    assert is_live(example1, P1, set())


@pytest.mark.parametrize("p,f", [(P3, {P3}), (P1, {P1, P2}), (7, set())])
def test_liveness_preconditions(example1, p, f):
    with pytest.raises(TrustError):
        is_live(example1, p, f)


def test_quorum_without_owner_is_rejected():
    # {p1,p2,p4} listed for p3 lacks p3
    a = TrustAssumptions.build([[{0, 1, 2}, {0, 2, 3}], [{0, 1, 2}, {1, 2, 3}],
                                [{0, 1, 3}, {1, 2, 3}], [{0, 2, 3}, {1, 3}, {2, 3}]], [[2]])
    (v,) = validate(a)
    assert (v.kind, v.process) == ("self-inclusion", 2)


def test_violation_kinds():
    assert kinds(TrustAssumptions.build([[{0}, {0}]])) == ["duplicate-quorum"]
    assert kinds(TrustAssumptions.build([[]])) == ["empty-quorum-list"]
    assert "unknown-process" in kinds(TrustAssumptions.build([[{0, 5}]]))
    assert kinds(TrustAssumptions(1, ((frozenset({0}),),), FaultModel((frozenset(),
                                                                       frozenset({0}))))) \
        == ["antichain"]
    assert kinds(TrustAssumptions(1, ((frozenset({0}),),), labels=("a", "b"))) == ["labels"]


def test_fault_model_canonical_drops_dominated_sets():
    fm = FaultModel.canonical([{1}, {1, 2}, {0}, {0}])
    assert fm.maximal_sets == (frozenset({0}), frozenset({1, 2}))
    assert FaultModel.of([]).maximal_sets == (frozenset(),)


def test_is_faulty_set_range_checks():
    fm = FaultModel.of([[0]])
    with pytest.raises(TrustError):
        is_faulty_set(fm, {9}, n=3)
    with pytest.raises(TrustError):
        is_faulty_set(fm, {-1})


def test_uniform_shape():
    a = generate_uniform(4, 1)
    assert all(len(qs) == 3 and all(len(q) == 3 for q in qs) for qs in a.quorums)
    assert len(a.fault_model.maximal_sets) == 4
    single = generate_uniform(1, 0)
    assert single.quorums == ((frozenset({0}),),)
    for n, f in [(2, 2), (3, -1), (0, 0)]:
        with pytest.raises(TrustError):
            generate_uniform(n, f)


def test_clusters_shape():
    a = generate_clusters(3, 2)
    assert validate(a) == []
    assert a.quorums[4] == (frozenset({4, 5}),)
    assert generate_clusters(2, 2, faulty_singletons=False).fault_model.maximal_sets == \
        (frozenset(),)
    with pytest.raises(TrustError):
        generate_clusters(0, 2)


def test_config_round_trip(example1):
    again = parse_config(serialize_config(example1))
    assert again == example1
    assert to_dict(again) == to_dict(example1)


@pytest.mark.parametrize("doc,loc", [
    ([], "$"),
    ({"processes": []}, "$.processes"),
    ({"processes": ["a", "a"]}, "$.processes"),
    ({"processes": ["a"], "quorums": []}, "$.quorums"),
    ({"processes": ["a"], "quorums": {"b": [["b"]]}}, "$.quorums"),
    ({"processes": ["a"], "quorums": {"a": [["a", "z"]]}}, "$.quorums.a[0]"),
    ({"processes": ["a"], "quorums": {"a": [["a"]]}, "fault_model": {}}, "$.fault_model"),
    ({"processes": ["a", "b"], "quorums": {"a": [["a"]], "b": [["a"]]}}, "$.quorums.b"),
])
def test_config_errors_carry_location(doc, loc):
    with pytest.raises(ConfigError) as e:
        from_dict(doc)
    assert e.value.location == loc


def test_invalid_json_reports_position():
    with pytest.raises(ConfigError) as e:
        parse_config(b'{"processes": [')
    assert e.value.location.startswith("line 1")


def test_unchecked_parse_keeps_violations():
    doc = {"processes": ["a", "b"], "quorums": {"a": [["a"]], "b": [["a"]]}}
    a = parse_config(json.dumps(doc), check=False)
    assert kinds(a) == ["self-inclusion"]


# --- properties ---------------------------------------------------------------

fault_models = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.frozensets(st.integers(0, n - 1)), min_size=1, max_size=4)))


@settings(max_examples=150, deadline=None)
@given(fault_models)
def test_enumeration_matches_brute_force(nm):
    n, sets = nm
    fm = FaultModel.canonical(sets)
    a = TrustAssumptions(n, tuple((frozenset({p}),) for p in range(n)), fm)
    got = list(enumerate_faulty_sets(fm))
    assert len(got) == len(set(got))
    assert set(got) == set(all_faulty_sets(a))
    assert set(got) == {frozenset(s) for s in subsets(range(n)) if is_faulty_set(fm, s, n)}
    assert got == sorted(got, key=lambda s: (len(s), sorted(s)))


@settings(max_examples=150, deadline=None)
@given(fault_models, st.data())
def test_membership_is_downward_closed(nm, data):
    n, sets = nm
    fm = FaultModel.canonical(sets)
    s = data.draw(st.sampled_from(list(enumerate_faulty_sets(fm))))
    for r in range(len(s) + 1):
        for sub in itertools.combinations(sorted(s), r):
            assert is_faulty_set(fm, sub, n)


@pytest.mark.parametrize("n,f", [(n, f) for n in range(1, 7) for f in range(n)])
def test_uniform_valid_and_live(n, f):
    a = generate_uniform(n, f)
    assert validate(a) == []
    for fs in enumerate_faulty_sets(a.fault_model):
        for p in a.processes:
            if p not in fs:
                assert is_live(a, p, fs)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 6))
def test_random_assumptions_are_valid_and_self_including(seed, n):
    a = generate_random(random.Random(seed), n)
    assert validate(a) == []
    assert all(p in q for p in a.processes for q in a.quorums[p])
    assert parse_config(serialize_config(a)) == a
