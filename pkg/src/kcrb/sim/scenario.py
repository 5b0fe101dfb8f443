from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from ..trust import TrustAssumptions, TrustError, load_config

ADVERSARIES = ("silent", "crash", "equivocate_split", "scripted", "scripted_random", "partition")


class ScenarioError(TrustError):
    pass


@dataclass(frozen=True)
class Scenario:
    """One broadcast instance: who is faulty, what they do, and the RNG seed.

    ``values[0]`` is what a correct source broadcasts; adversaries draw the
    values they inject from ``values`` in order.
    """

    assumptions: TrustAssumptions
    source: int
    faulty: frozenset[int] = frozenset()
    adversary: str = "silent"
    params: dict = field(default_factory=dict, hash=False, compare=False)
    values: tuple[bytes, ...] = (b"m",)
    seed: int = 0
    instance: bytes = b"instance-0"
    step_budget: int = 10**6

    def __post_init__(self):
        object.__setattr__(self, "faulty", frozenset(self.faulty))
        a = self.assumptions
        if not 0 <= self.source < a.n:
            raise ScenarioError(f"source {self.source} is not a process")
        if not a.fault_model.contains(self.faulty):
            raise ScenarioError(
                f"execution does not comply with the fault model: {a.fmt(self.faulty)}")
        if self.adversary not in ADVERSARIES:
            raise ScenarioError(f"unknown adversary {self.adversary!r}")
        if not self.values:
            raise ScenarioError("at least one value is required")
        if not 0 <= self.seed < 2**64:
            raise ScenarioError("seed must be a 64-bit unsigned integer")

    @property
    def correct(self) -> list[int]:
        return [p for p in self.assumptions.processes if p not in self.faulty]

    @property
    def source_correct(self) -> bool:
        return self.source not in self.faulty


def dump_scenario(s: Scenario, config_path: str) -> str:
    """Scenario file: JSON that references its trust config by path."""
    if s.adversary == "scripted":
        # Pre-signed envelopes are built in code, not stored.
        raise ScenarioError("scripted scenarios are not serializable")
    lab = s.assumptions.labels
    doc = {
        "config": config_path,
        "source": lab[s.source],
        "faulty": [lab[p] for p in sorted(s.faulty)],
        "adversary": {"name": s.adversary, "params": s.params},
        "values": [v.decode() for v in s.values],
        "seed": s.seed,
        "instance": s.instance.decode(),
        "step_budget": s.step_budget,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        doc = json.load(fh)
    cfg = doc["config"]
    if not os.path.isabs(cfg):
        cfg = os.path.join(os.path.dirname(os.path.abspath(path)), cfg)
    a = load_config(cfg)
    index = {lab: i for i, lab in enumerate(a.labels)}
    try:
        source = index[doc["source"]]
        faulty = frozenset(index[x] for x in doc.get("faulty", []))
    except KeyError as e:
        raise ScenarioError(f"unknown process label {e.args[0]!r}") from None
    adv = doc.get("adversary", {"name": "silent"})
    return Scenario(a, source, faulty, adv["name"], dict(adv.get("params", {})),
                    tuple(v.encode() for v in doc.get("values", ["m"])),
                    int(doc.get("seed", 0)), doc.get("instance", "instance-0").encode(),
                    int(doc.get("step_budget", 10**6)))
