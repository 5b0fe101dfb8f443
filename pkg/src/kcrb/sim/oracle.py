"""Property oracle for finished traces.

Eventual properties are judged at quiescence, so non-quiescent traces are
refused.  Every failed verdict points at a trace entry: the offending event
for safety properties, the last entry for unmet eventual obligations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from ..crypto import KeyRing
from ..protocol import Accuse, Deliver, verify_proof
from ..trust import TrustAssumptions, is_live
from .engine import Trace
from .scenario import Scenario

PROPERTIES = ("validity", "k_consistency", "pairwise_consistency", "integrity",
              "weak_totality", "accuracy", "certitude", "local_progress")


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class Verdict:
    passed: bool
    index: int | None = None
    detail: str = ""


@dataclass
class OracleReport:
    verdicts: dict[str, Verdict] = field(default_factory=dict)
    distinct_values: int = 0
    k_bound: int = 1

    @property
    def ok(self) -> bool:
        return all(v.passed for v in self.verdicts.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if not v.passed]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "distinct_values": self.distinct_values,
            "k_bound": self.k_bound,
            "verdicts": {k: {"passed": v.passed, "index": v.index, "detail": v.detail}
                         for k, v in self.verdicts.items()},
        }


@lru_cache(maxsize=256)
def local_progress_holds(a: TrustAssumptions, source: int) -> tuple[bool, str]:
    from .attack import local_progress_probe
    for p in a.processes:
        for q in a.quorums[p]:
            t = local_progress_probe(a, p, q, source=source)
            if not t.deliveries().get(p):
                return False, f"process {p} cannot deliver with quorum {sorted(q)}"
    return True, ""


def check_trace(trace: Trace, scenario: Scenario, k_bound: int,
                local_progress: bool = True) -> OracleReport:
    if not trace.quiescent:
        raise OracleError("trace is not quiescent; eventual properties are undecidable")
    a = scenario.assumptions
    faulty = scenario.faulty
    correct = [p for p in a.processes if p not in faulty]
    live = {p for p in correct if is_live(a, p, faulty)}
    keys = KeyRing(scenario.seed, a.n)
    last = len(trace.entries) - 1
    honest = scenario.values[0] if scenario.source_correct else None

    delivered: dict[int, list[tuple[int, bytes]]] = {}
    via: list[tuple[int, int, bytes, frozenset[int] | None]] = []
    accused: dict[int, list[tuple[int, object]]] = {}
    broadcast_at = None
    for i, e in enumerate(trace.entries):
        if e.event == "broadcast" and e.process == scenario.source:
            broadcast_at = i if broadcast_at is None else broadcast_at
        if e.process in faulty:
            continue
        for o in e.outputs:
            if isinstance(o, Deliver):
                delivered.setdefault(e.process, []).append((i, o.value))
                via.append((i, e.process, o.value, o.quorum))
            elif isinstance(o, Accuse):
                accused.setdefault(e.process, []).append((i, o.proof))

    v: dict[str, Verdict] = {}
    report = OracleReport(v, k_bound=k_bound)

    # Validity
    if honest is not None:
        miss = [p for p in sorted(live)
                if not any(val == honest for _, val in delivered.get(p, []))]
        v["validity"] = (Verdict(False, last, f"live correct {miss} did not deliver") if miss
                         else Verdict(True))
    else:
        v["validity"] = Verdict(True, detail="vacuous: faulty source")

    # k-Consistency
    firsts: dict[bytes, int] = {}
    for p, ds in delivered.items():
        for i, val in ds:
            if val not in firsts or i < firsts[val]:
                firsts[val] = i
    report.distinct_values = len(firsts)
    if len(firsts) > k_bound:
        idx = sorted(firsts.values())[k_bound]
        v["k_consistency"] = Verdict(False, idx,
                                     f"{len(firsts)} distinct values delivered, bound {k_bound}")
    else:
        v["k_consistency"] = Verdict(True, detail=f"{len(firsts)} <= {k_bound}")

    # Two deliveries justified by quorums meeting in a correct process agree.
    bad = None
    for x, (i, p, vp, qp) in enumerate(via):
        for j, q, vq, qq in via[:x]:
            if vp != vq and qp is not None and qq is not None and (qp & qq) - faulty:
                bad = Verdict(False, i, f"processes {q} and {p} delivered different values "
                              "through quorums sharing a correct process")
                break
        if bad:
            break
    v["pairwise_consistency"] = bad or Verdict(True)

    # Integrity
    bad = None
    for p, ds in sorted(delivered.items()):
        if len(ds) > 1:
            bad = Verdict(False, ds[1][0], f"process {p} delivered {len(ds)} times")
            break
        if honest is not None:
            i, val = ds[0]
            if val != honest or broadcast_at is None or broadcast_at > i:
                bad = Verdict(False, i, f"process {p} delivered a value never broadcast")
                break
    v["integrity"] = bad or Verdict(True)

    # Weak Totality
    if delivered:
        miss = [p for p in sorted(live) if p not in delivered and p not in accused]
        v["weak_totality"] = (Verdict(False, last, f"live correct {miss} neither delivered "
                                      "nor accused") if miss else Verdict(True))
    else:
        v["weak_totality"] = Verdict(True, detail="vacuous: no correct delivery")

    # Accuracy
    bad = None
    for p, acs in sorted(accused.items()):
        for i, proof in acs:
            if scenario.source not in faulty:
                bad = Verdict(False, i, f"process {p} accused a correct source")
            elif not verify_proof(proof, keys, scenario.source, scenario.instance):
                bad = Verdict(False, i, f"process {p} accused with an unverifiable proof")
            if bad:
                break
        if bad:
            break
    v["accuracy"] = bad or Verdict(True)

    # Certitude
    if accused:
        miss = [p for p in correct if p not in accused]
        v["certitude"] = (Verdict(False, last, f"correct {miss} never accused") if miss
                          else Verdict(True))
    else:
        v["certitude"] = Verdict(True, detail="vacuous: no accusation")
    # Accusation uniqueness rides on Integrity: a process accuses at most once.
    for p, acs in accused.items():
        if len(acs) > 1 and v["integrity"].passed:
            v["integrity"] = Verdict(False, acs[1][0], f"process {p} accused twice")

    if local_progress:
        held, why = local_progress_holds(a, scenario.source)
        v["local_progress"] = Verdict(held, None if held else last, why)
    else:
        v["local_progress"] = Verdict(True, detail="not checked")
    return report
