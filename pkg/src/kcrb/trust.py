"""Decentralized trust assumptions: quorum maps and inclusion-closed fault models.

Processes are dense integer ids ``0..n-1``. Labels exist only for
presentation and for the JSON config format.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

Quorum = frozenset  # frozenset[int]; always contains its owner


class TrustError(ValueError):
    """Raised on bad input to a trust-model operation."""


class ConfigError(TrustError):
    """Malformed or invalid JSON configuration.

    ``location`` is a JSON-path-like pointer to the offending element.
    """

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass(frozen=True)
class Violation:
    kind: str  # "self-inclusion" | "empty-quorum-list" | "duplicate-quorum" | ...
    process: int | None
    detail: str

    def __str__(self) -> str:
        who = "" if self.process is None else f" (process {self.process})"
        return f"{self.kind}{who}: {self.detail}"


@dataclass(frozen=True)
class FaultModel:
    """Inclusion-closed fault model stored as its antichain of maximal sets.

    A set is a member iff it is a subset of some maximal set, so the empty
    set is always a member (an empty ``maximal_sets`` behaves like ``[{}]``).
    """

    maximal_sets: tuple[frozenset[int], ...] = (frozenset(),)

    @classmethod
    def of(cls, sets: Iterable[Iterable[int]]) -> "FaultModel":
        return cls(tuple(frozenset(s) for s in sets) or (frozenset(),))

    @classmethod
    def canonical(cls, sets: Iterable[Iterable[int]]) -> "FaultModel":
        """Build a model from arbitrary sets, dropping non-maximal ones."""
        uniq = sorted({frozenset(s) for s in sets}, key=_set_key)
        maximal = [s for s in uniq if not any(s < t for t in uniq)]
        return cls(tuple(maximal) or (frozenset(),))

    def contains(self, s: Iterable[int]) -> bool:
        s = frozenset(s)
        return any(s <= m for m in self.maximal_sets)


@dataclass(frozen=True)
class TrustAssumptions:
    n: int
    quorums: tuple[tuple[Quorum, ...], ...]
    fault_model: FaultModel = field(default_factory=FaultModel)
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"p{i}" for i in range(self.n)))

    @classmethod
    def build(cls, quorums: Sequence[Iterable[Iterable[int]]],
              faulty: Iterable[Iterable[int]] = ((),),
              labels: Sequence[str] = ()) -> "TrustAssumptions":
        qs = tuple(tuple(frozenset(q) for q in per) for per in quorums)
        return cls(len(qs), qs, FaultModel.of(faulty), tuple(labels))

    @property
    def processes(self) -> range:
        return range(self.n)

    def label(self, p: int) -> str:
        return self.labels[p]

    def fmt(self, s: Iterable[int]) -> str:
        return "{" + ",".join(self.labels[p] for p in sorted(s)) + "}"


def _set_key(s: frozenset[int]) -> tuple:
    return (len(s), sorted(s))


def validate(a: TrustAssumptions) -> list[Violation]:
    """Return one violation per broken invariant; empty means valid."""
    out: list[Violation] = []
    if a.n < 1:
        out.append(Violation("empty-process-set", None, "at least one process is required"))
    if len(a.quorums) != a.n:
        out.append(Violation("quorum-map-size", None,
                             f"{len(a.quorums)} quorum lists for {a.n} processes"))
    if len(a.labels) != a.n or len(set(a.labels)) != len(a.labels):
        out.append(Violation("labels", None, "labels must be unique, one per process"))
    for p, qs in enumerate(a.quorums):
        if not qs:
            out.append(Violation("empty-quorum-list", p, "process has no quorum"))
        seen: set[frozenset[int]] = set()
        for q in qs:
            if not q:
                out.append(Violation("empty-quorum", p, "quorum is empty"))
            bad = sorted(x for x in q if not 0 <= x < a.n)
            if bad:
                out.append(Violation("unknown-process", p, f"quorum references {bad}"))
            if p not in q:
                out.append(Violation("self-inclusion", p,
                                     f"quorum {sorted(q)} does not contain its owner"))
            if q in seen:
                out.append(Violation("duplicate-quorum", p, f"quorum {sorted(q)} listed twice"))
            seen.add(q)
    ms = a.fault_model.maximal_sets
    for i, m in enumerate(ms):
        bad = sorted(x for x in m if not 0 <= x < a.n)
        if bad:
            out.append(Violation("unknown-process", None, f"faulty set {i} references {bad}"))
        for j, o in enumerate(ms):
            if i != j and (m < o or (m == o and i > j)):
                out.append(Violation("antichain", None,
                                     f"faulty set {sorted(m)} is contained in {sorted(o)}"))
                break
    return out


def _check_ids(a_n: int, s: Iterable[int]) -> frozenset[int]:
    s = frozenset(s)
    bad = sorted(x for x in s if not 0 <= x < a_n)
    if bad:
        raise TrustError(f"process ids out of range: {bad}")
    return s


def is_faulty_set(fm: FaultModel, s: Iterable[int], n: int | None = None) -> bool:
    if n is not None:
        s = _check_ids(n, s)
    elif any(x < 0 for x in s):
        raise TrustError("process ids must be non-negative")
    return fm.contains(s)


def is_live(a: TrustAssumptions, p: int, f: Iterable[int]) -> bool:
    """True iff ``p`` has a quorum disjoint from the faulty set ``f``."""
    f = _check_ids(a.n, f)
    if not 0 <= p < a.n:
        raise TrustError(f"process id out of range: {p}")
    if p in f:
        raise TrustError(f"process {p} is in the faulty set")
    if not a.fault_model.contains(f):
        raise TrustError(f"{sorted(f)} is not a member of the fault model")
    return any(not (q & f) for q in a.quorums[p])


def enumerate_faulty_sets(fm: FaultModel) -> Iterator[frozenset[int]]:
    """Yield every member of the fault model once, by size then lexicographically."""
    members: set[frozenset[int]] = set()
    for m in fm.maximal_sets:
        elems = sorted(m)
        for r in range(len(elems) + 1):
            members.update(frozenset(c) for c in itertools.combinations(elems, r))
    yield from sorted(members, key=_set_key)


def generate_uniform(n: int, f: int) -> TrustAssumptions:
    """Uniform f-resilient model: quorums are all (n-f)-subsets with the owner."""
    if not 0 <= f < n:
        raise TrustError(f"need 0 <= f < n, got n={n}, f={f}")
    every = [frozenset(c) for c in itertools.combinations(range(n), n - f)]
    quorums = tuple(tuple(q for q in every if p in q) for p in range(n))
    faulty = tuple(frozenset(c) for c in itertools.combinations(range(n), f))
    return TrustAssumptions(n, quorums, FaultModel(faulty))


def generate_clusters(c: int, size: int, faulty_singletons: bool = True) -> TrustAssumptions:
    """``c`` disjoint clusters whose members' only quorum is their own cluster.

    With ``faulty_singletons`` any single process may be faulty; otherwise the
    fault model is ``{{}}``.
    """
    if c < 1 or size < 1:
        raise TrustError("cluster count and size must be positive")
    n = c * size
    clusters = [frozenset(range(i * size, (i + 1) * size)) for i in range(c)]
    quorums = tuple((clusters[p // size],) for p in range(n))
    fm = FaultModel(tuple(frozenset([p]) for p in range(n))) if faulty_singletons else FaultModel()
    return TrustAssumptions(n, quorums, fm)


def generate_random(rng: random.Random, n: int, max_quorums: int = 3,
                    max_faulty_sets: int = 3) -> TrustAssumptions:
    """Random valid assumptions, used by fuzzing and property tests."""
    quorums = []
    for p in range(n):
        others = [x for x in range(n) if x != p]
        qs: list[frozenset[int]] = []
        for _ in range(rng.randint(1, max_quorums)):
            q = frozenset([p, *rng.sample(others, rng.randint(0, len(others)))])
            if q not in qs:
                qs.append(q)
        quorums.append(tuple(qs))
    sets = [rng.sample(range(n), rng.randint(0, max(1, n // 2)))
            for _ in range(rng.randint(1, max_faulty_sets))]
    return TrustAssumptions(n, tuple(quorums), FaultModel.canonical(sets))


# --- JSON configuration -------------------------------------------------------

def to_dict(a: TrustAssumptions) -> dict:
    lab = a.labels
    return {
        "processes": list(lab),
        "quorums": {lab[p]: [[lab[x] for x in sorted(q)] for q in qs]
                    for p, qs in enumerate(a.quorums)},
        "fault_model": {"maximal_sets": [[lab[x] for x in sorted(m)]
                                         for m in a.fault_model.maximal_sets]},
    }


def serialize_config(a: TrustAssumptions) -> bytes:
    return (json.dumps(to_dict(a), indent=2) + "\n").encode()


def from_dict(doc, check: bool = True) -> TrustAssumptions:
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    procs = doc.get("processes")
    if not isinstance(procs, list) or not procs:
        raise ConfigError("must be a non-empty list of labels", "$.processes")
    if not all(isinstance(x, str) for x in procs) or len(set(procs)) != len(procs):
        raise ConfigError("labels must be unique strings", "$.processes")
    index = {lab: i for i, lab in enumerate(procs)}

    def ids(items, loc):
        if not isinstance(items, list):
            raise ConfigError("must be a list of labels", loc)
        try:
            return frozenset(index[x] for x in items)
        except (KeyError, TypeError):
            unknown = [x for x in items if x not in index]
            raise ConfigError(f"unknown process label(s) {unknown}", loc) from None

    qdoc = doc.get("quorums")
    if not isinstance(qdoc, dict):
        raise ConfigError("must be an object keyed by label", "$.quorums")
    extra = sorted(set(qdoc) - set(index))
    if extra:
        raise ConfigError(f"unknown process label(s) {extra}", "$.quorums")
    quorums = []
    for lab in procs:
        lst = qdoc.get(lab, [])
        if not isinstance(lst, list):
            raise ConfigError("must be a list of quorums", f"$.quorums.{lab}")
        quorums.append(tuple(ids(q, f"$.quorums.{lab}[{i}]") for i, q in enumerate(lst)))

    fdoc = doc.get("fault_model", {"maximal_sets": [[]]})
    if not isinstance(fdoc, dict) or not isinstance(fdoc.get("maximal_sets"), list):
        raise ConfigError("must be an object with a maximal_sets list", "$.fault_model")
    maximal = tuple(ids(s, f"$.fault_model.maximal_sets[{i}]")
                    for i, s in enumerate(fdoc["maximal_sets"]))
    a = TrustAssumptions(len(procs), tuple(quorums), FaultModel(maximal or (frozenset(),)),
                         tuple(procs))
    problems = validate(a) if check else []
    if problems:
        p = problems[0]
        loc = "$" if p.process is None else f"$.quorums.{procs[p.process]}"
        raise ConfigError("; ".join(map(str, problems)), loc)
    return a


def parse_config(text: bytes | str, check: bool = True) -> TrustAssumptions:
    """Parse the JSON config; ``check=False`` skips invariant validation."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", f"line {e.lineno} column {e.colno}") from None
    return from_dict(doc, check)


def load_config(path, check: bool = True) -> TrustAssumptions:
    with open(path, "rb") as fh:
        return parse_config(fh.read(), check)
