"""Execution graphs G_{F,S} and the inconsistency number k_max of (Q, F).

Two exact search routes compute the per-faulty-set maximum:

``selections``
    Enumerate quorum selections S for the correct processes and solve
    maximum independent set on every G_{F,S}.
``conflict``
    Solve one maximum independent set per faulty set F on the graph whose
    vertices are (process, quorum) pairs, with an edge whenever the two
    quorums share a correct process.  Two quorums of one process always
    conflict (both hold their owner), so an independent set there is exactly
    a set of processes together with quorums that are pairwise disjoint
    outside F.  Independence in G_{F,S} only depends on the selections of the
    set's own members, so both routes yield the same maximum.

The witness is canonical and route independent: the first faulty set (in
enumeration order) achieving k_max, the lexicographically smallest process
set that is independent for some selection, the lexicographically first
quorum indices making it independent, and quorum 0 for everyone else.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import prod
from typing import Iterator

from .mis import bits, max_independent_set
from .trust import TrustAssumptions, TrustError, enumerate_faulty_sets, validate


class AnalysisError(TrustError):
    pass


def _mask(s) -> int:
    m = 0
    for x in s:
        m |= 1 << x
    return m


@dataclass(frozen=True)
class QuorumSelection:
    """One quorum per correct process, keyed by process id (sorted)."""

    choice: tuple[tuple[int, frozenset[int]], ...]

    @classmethod
    def of(cls, mapping) -> "QuorumSelection":
        return cls(tuple(sorted((p, frozenset(q)) for p, q in dict(mapping).items())))

    def __getitem__(self, p: int) -> frozenset[int]:
        for q, quorum in self.choice:
            if q == p:
                return quorum
        raise KeyError(p)

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(p for p, _ in self.choice)

    def as_dict(self) -> dict[int, frozenset[int]]:
        return dict(self.choice)

    def key(self, faulty: frozenset[int]) -> tuple:
        # Edges only see quorum members outside F.
        return tuple((p, q - faulty) for p, q in self.choice)


@dataclass(frozen=True)
class ExecutionGraph:
    faulty: frozenset[int]
    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]
    selection: QuorumSelection

    def adjacent(self, p: int, q: int) -> bool:
        return (min(p, q), max(p, q)) in self.edges

    def is_independent(self, s) -> bool:
        s = sorted(s)
        return set(s) <= self.nodes and not any(
            self.adjacent(p, q) for p, q in itertools.combinations(s, 2))


@dataclass
class SearchStats:
    method: str = "conflict"
    dedup: bool = True
    faulty_sets: int = 0
    graphs_examined: int = 0
    graphs_pruned: int = 0
    duration_s: float = 0.0


@dataclass(frozen=True)
class InconsistencyWitness:
    k_max: int
    faulty: frozenset[int]
    selection: QuorumSelection
    independent_set: frozenset[int]
    stats: SearchStats = field(default_factory=SearchStats, compare=False)


def _check_faulty(a: TrustAssumptions, f) -> frozenset[int]:
    f = frozenset(f)
    if not a.fault_model.contains(f):
        raise AnalysisError(f"{a.fmt(f)} is not a member of the fault model")
    return f


def build_execution_graph(a: TrustAssumptions, f, s: QuorumSelection) -> ExecutionGraph:
    f = _check_faulty(a, f)
    nodes = frozenset(a.processes) - f
    if s.domain != nodes:
        raise AnalysisError(
            f"selection covers {a.fmt(s.domain)} but the correct processes are {a.fmt(nodes)}")
    for p, q in s.choice:
        if q not in a.quorums[p]:
            raise AnalysisError(f"{a.fmt(q)} is not a quorum of {a.label(p)}")
    edges = frozenset(
        (p, q) for p, q in itertools.combinations(sorted(nodes), 2)
        if not (s[p] & s[q]) <= f)
    return ExecutionGraph(f, nodes, edges, s)


def _adjacency(graph: ExecutionGraph) -> tuple[list[int], list[int]]:
    order = sorted(graph.nodes)
    index = {p: i for i, p in enumerate(order)}
    adj = [0] * len(order)
    for p, q in graph.edges:
        adj[index[p]] |= 1 << index[q]
        adj[index[q]] |= 1 << index[p]
    return order, adj


def maximum_independent_set(graph: ExecutionGraph) -> frozenset[int]:
    """Maximum independent set; ties go to the lexicographically smallest."""
    order, adj = _adjacency(graph)
    return frozenset(order[i] for i in bits(max_independent_set(adj)))


def independence_number(graph: ExecutionGraph) -> int:
    return len(maximum_independent_set(graph))


def enumerate_selections(a: TrustAssumptions, f, dedup: bool = False
                         ) -> Iterator[QuorumSelection]:
    """Cartesian product of Q(p) over correct p, in id then list order.

    With ``dedup`` only the first selection of every class with equal
    ``S(p) - F`` for all p is yielded.
    """
    f = _check_faulty(a, f)
    correct = [p for p in a.processes if p not in f]
    seen: set[tuple] = set()
    for combo in itertools.product(*(a.quorums[p] for p in correct)):
        if dedup:
            key = tuple(q - f for q in combo)
            if key in seen:
                continue
            seen.add(key)
        yield QuorumSelection(tuple(zip(correct, combo)))


# --- per faulty set maxima ----------------------------------------------------

def _conflict_vertices(a: TrustAssumptions, fmask: int, reduce: bool
                       ) -> list[tuple[int, int, int]]:
    """(process, quorum index, quorum mask outside F) per correct process.

    ``reduce`` drops duplicate and dominated quorums: a quorum whose correct
    part contains another quorum's correct part conflicts with a superset of
    vertices, so it never helps an independent set.
    """
    out = []
    for p in a.processes:
        if fmask >> p & 1:
            continue
        vs = [(i, _mask(q) & ~fmask) for i, q in enumerate(a.quorums[p])]
        if reduce:
            kept: list[tuple[int, int]] = []
            for i, m in vs:
                if any(o & m == o for _, o in kept):
                    continue        # an earlier kept quorum is smaller or equal
                if any(o & m == o and o != m for _, o in vs):
                    continue        # a strictly smaller quorum exists
                kept.append((i, m))
            vs = kept
        out.extend((p, i, m) for i, m in vs)
    return out


def _vertex_adjacency(vs: list[tuple[int, int, int]]) -> list[int]:
    adj = [0] * len(vs)
    for u in range(len(vs)):
        mu = vs[u][2]
        for v in range(u + 1, len(vs)):
            if mu & vs[v][2]:
                adj[u] |= 1 << v
                adj[v] |= 1 << u
    return adj


def _conflict_max(a: TrustAssumptions, f: frozenset[int], dedup: bool) -> int:
    vs = _conflict_vertices(a, _mask(f), dedup)
    return max_independent_set(_vertex_adjacency(vs)).bit_count()


def _selections_max(a: TrustAssumptions, f: frozenset[int], dedup: bool,
                    stats: SearchStats) -> int:
    correct = [p for p in a.processes if p not in f]
    total = prod(len(a.quorums[p]) for p in correct)
    fmask = _mask(f)
    best = 0
    done = 0
    for s in enumerate_selections(a, f, dedup):
        done += 1
        masks = [_mask(s[p]) & ~fmask for p in correct]
        adj = [0] * len(correct)
        for i, j in itertools.combinations(range(len(correct)), 2):
            if masks[i] & masks[j]:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
        best = max(best, max_independent_set(adj).bit_count())
        if best == len(correct):
            break
    stats.graphs_examined += done
    stats.graphs_pruned += total - done
    return best


def _per_faulty_max(a: TrustAssumptions, f: frozenset[int], method: str, dedup: bool,
                    stats: SearchStats) -> int:
    if method == "conflict":
        stats.graphs_examined += 1
        return _conflict_max(a, f, dedup)
    if method == "selections":
        return _selections_max(a, f, dedup, stats)
    raise AnalysisError(f"unknown search method {method!r}")


def _chunk_worker(args) -> tuple[list[tuple[int, int]], SearchStats]:
    a, chunk, method, dedup = args
    stats = SearchStats(method, dedup)
    return [(i, _per_faulty_max(a, f, method, dedup, stats)) for i, f in chunk], stats


# --- canonical witness --------------------------------------------------------

def _canonical_witness(a: TrustAssumptions, f: frozenset[int], k: int, dedup: bool
                       ) -> tuple[frozenset[int], QuorumSelection]:
    fmask = _mask(f)
    correct = [p for p in a.processes if p not in f]
    vs = _conflict_vertices(a, fmask, dedup)
    adj = _vertex_adjacency(vs)
    by_proc: dict[int, list[int]] = {}
    for idx, (p, _, _) in enumerate(vs):
        by_proc.setdefault(p, []).append(idx)

    def feasible(required: list[int], later: int) -> bool:
        need = k - len(required)

        def assign(i: int, blocked: int) -> bool:
            if i == len(required):
                cand = later & ~blocked
                best = max_independent_set(adj, cand, target=need) if need > 0 else 0
                return best.bit_count() >= need
            for v in by_proc[required[i]]:
                if not blocked >> v & 1:
                    if assign(i + 1, blocked | adj[v] | (1 << v)):
                        return True
            return False

        return assign(0, 0)

    chosen: list[int] = []
    for pos, p in enumerate(correct):
        if len(chosen) == k:
            break
        later = 0
        for q in correct[pos + 1:]:
            for v in by_proc[q]:
                later |= 1 << v
        if feasible(chosen + [p], later):
            chosen.append(p)
    if len(chosen) != k:
        raise AssertionError("canonical witness search lost the optimum")

    masks = {p: [_mask(q) & ~fmask for q in a.quorums[p]] for p in chosen}
    picks: list[int] = []

    def pick(i: int) -> bool:
        if i == len(chosen):
            return True
        for j, m in enumerate(masks[chosen[i]]):
            if all(not (m & masks[chosen[t]][picks[t]]) for t in range(i)):
                picks.append(j)
                if pick(i + 1):
                    return True
                picks.pop()
        return False

    pick(0)
    idx = dict(zip(chosen, picks))
    sel = QuorumSelection(tuple((p, a.quorums[p][idx.get(p, 0)]) for p in correct))
    return frozenset(chosen), sel


def inconsistency_number(a: TrustAssumptions, dedup: bool = True, method: str = "conflict",
                         workers: int = 1, require_faulty: bool = False) -> InconsistencyWitness:
    """Maximum independence number over all G_{F,S}, with a canonical witness.

    ``require_faulty`` restricts the maximum to non-empty faulty sets, the
    only ones in which a faulty source can equivocate.
    """
    problems = validate(a)
    if problems:
        raise AnalysisError("invalid trust assumptions: " + "; ".join(map(str, problems)))
    t0 = time.perf_counter()
    stats = SearchStats(method, dedup)
    faulty_sets = [f for f in enumerate_faulty_sets(a.fault_model) if f or not require_faulty]
    if not faulty_sets:
        raise AnalysisError("the fault model has no non-empty member")
    stats.faulty_sets = len(faulty_sets)

    best, best_i = -1, -1
    if workers > 1 and len(faulty_sets) > 1:
        chunks = [list(enumerate(faulty_sets))[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_chunk_worker, [(a, c, method, dedup) for c in chunks]))
        for part, st in results:
            stats.graphs_examined += st.graphs_examined
            stats.graphs_pruned += st.graphs_pruned
            for i, k in part:
                if k > best or (k == best and i < best_i):
                    best, best_i = k, i
    else:
        for i, f in enumerate(faulty_sets):
            cap = a.n - len(f)
            if cap <= best:
                stats.graphs_pruned += (
                    1 if method == "conflict"
                    else prod(len(a.quorums[p]) for p in a.processes if p not in f))
                continue
            k = _per_faulty_max(a, f, method, dedup, stats)
            if k > best:
                best, best_i = k, i

    f = faulty_sets[best_i]
    if best == 0:
        sel = QuorumSelection(())
        ind: frozenset[int] = frozenset()
    else:
        ind, sel = _canonical_witness(a, f, best, dedup)
    stats.duration_s = time.perf_counter() - t0
    return InconsistencyWitness(best, f, sel, ind, stats)


def witness_report(a: TrustAssumptions, w: InconsistencyWitness) -> dict:
    lab = a.labels
    return {
        "k_max": w.k_max,
        "faulty": [lab[p] for p in sorted(w.faulty)],
        "selection": {lab[p]: [lab[x] for x in sorted(q)] for p, q in w.selection.choice},
        "independent_set": [lab[p] for p in sorted(w.independent_set)],
        "stats": {
            "method": w.stats.method,
            "dedup": w.stats.dedup,
            "faulty_sets": w.stats.faulty_sets,
            "graphs_examined": w.stats.graphs_examined,
            "graphs_pruned": w.stats.graphs_pruned,
        },
    }
