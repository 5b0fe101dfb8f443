"""Constructive lower bound (partition attack) and local progress probes."""

from __future__ import annotations

from ..graphs import (AnalysisError, InconsistencyWitness, QuorumSelection,
                      build_execution_graph, inconsistency_number)
from ..trust import TrustAssumptions
from .engine import GroupSchedule, Schedule, Trace, run
from .scenario import Scenario


class AttackError(AnalysisError):
    """``reachable`` is the best distinct-value count an attack can still reach, if known."""

    def __init__(self, message: str, reachable: int | None = None):
        super().__init__(message)
        self.reachable = reachable


def default_values(k: int) -> list[bytes]:
    return [b"m%d" % i for i in range(1, k + 1)]


def partition_attack(a: TrustAssumptions, f, s: QuorumSelection, independent_set,
                     values=None, source: int | None = None, seed: int = 0
                     ) -> tuple[Scenario, Schedule]:
    """Scenario and schedule in which member i of the independent set delivers value i.

    The faulty source feeds value i into ``s(p_i)``, faulty members of that
    quorum echo it, and traffic stays inside ``{source} | s(p_i)`` until the
    hold is lifted.  Independence means the correct parts of these groups are
    disjoint, so every ``p_i`` hears only its own value before delivering.
    """
    f = frozenset(f)
    members = sorted(independent_set)
    values = list(default_values(len(members)) if values is None else values)
    if source is None:
        if not f:
            raise AttackError("the attack needs a faulty source but the faulty set is empty")
        source = min(f)
    if source not in f:
        raise AttackError(f"source {a.label(source)} is not in the faulty set {a.fmt(f)}")
    if len(values) != len(members):
        raise AttackError(f"{len(values)} values for an independent set of {len(members)}")
    if len(set(values)) != len(values):
        raise AttackError("attack values must be pairwise distinct")
    g = build_execution_graph(a, f, s)
    if not g.is_independent(members):
        raise AttackError(f"{a.fmt(members)} is not independent in G_(F,S)")
    groups = [(p, sorted(s[p]), i) for i, p in enumerate(members)]
    sc = Scenario(a, source, f, "partition", {"groups": groups}, tuple(values), seed)
    return sc, GroupSchedule([frozenset(q) | {source} for _, q, _ in groups])


def attack_target(a: TrustAssumptions, w: InconsistencyWitness) -> InconsistencyWitness:
    """A k_max witness whose faulty set can host the equivocating source.

    A witness with an empty faulty set has nobody to equivocate; the search
    is then repeated over non-empty faulty sets and must reach the same
    k_max, otherwise the bound is not constructively attainable.
    """
    if w.faulty:
        return w
    try:
        alt = inconsistency_number(a, require_faulty=True)
    except AnalysisError:
        alt = None
    if alt is None or alt.k_max < w.k_max:
        reach = 1 if alt is None else max(1, alt.k_max)
        raise AttackError(
            f"k_max={w.k_max} needs an empty faulty set; with a faulty source at most "
            f"{reach} distinct value(s) can be delivered", reach)
    return alt


def attack_witness(a: TrustAssumptions, w: InconsistencyWitness, values=None, seed: int = 0
                   ) -> tuple[Scenario, Schedule]:
    """Scenario reaching ``w.k_max`` distinct deliveries.

    ``k_max = 1`` without a usable faulty set degenerates to an honest run.
    """
    try:
        t = attack_target(a, w)
    except AttackError:
        if w.k_max != 1:
            raise
        vals = tuple(default_values(1) if values is None else values)
        if len(vals) != 1:
            raise AttackError(f"{len(vals)} values for an independent set of 1") from None
        sc = Scenario(a, min(w.independent_set), frozenset(), "silent", {}, vals, seed)
        return sc, Schedule()
    return partition_attack(a, t.faulty, t.selection, t.independent_set, values,
                            min(t.faulty), seed)


def local_progress_probe(a: TrustAssumptions, p: int, q, source: int | None = None,
                         seed: int = 0, value: bytes = b"probe") -> Trace:
    """Honest run where only ``{source} | q`` ever take steps.

    Messages to anyone outside are withheld forever, so the returned trace
    is usually not quiescent.  ``source`` defaults to ``p``.
    """
    q = frozenset(q)
    if q not in a.quorums[p]:
        raise AttackError(f"{a.fmt(q)} is not a quorum of {a.label(p)}")
    source = p if source is None else source
    sc = Scenario(a, source, frozenset(), "silent", {}, (value,), seed)
    return run(sc, GroupSchedule([q | {source}], forever=True))
