"""Deterministic discrete-event simulation of one broadcast instance.

Each scheduler step first lets the adversary emit, then delivers one pending
message chosen by a seeded RNG among those the schedule currently allows.
The run ends at quiescence: nothing deliverable, the adversary idle and the
schedule unable to release anything more.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .. import protocol as pc
from ..crypto import KeyRing
from ..protocol import Accuse, Deliver, Envelope, Output
from .adversary import Adversary, Coalition, make_adversary
from .scenario import Scenario


class SimulationError(RuntimeError):
    pass


class StepBudgetExceeded(SimulationError):
    pass


class ForgeryError(SimulationError):
    """An adversary injected something it cannot have produced: a harness bug."""


@dataclass
class Message:
    id: int
    src: int
    dst: int
    env: Envelope


@dataclass(frozen=True)
class Sent:
    msg: int
    to: int
    kind: str
    value: Optional[bytes]


@dataclass(frozen=True)
class TraceEntry:
    step: int
    process: int
    event: str                   # broadcast | receive | inject
    msg: Optional[int] = None
    sender: Optional[int] = None
    kind: Optional[str] = None
    value: Optional[bytes] = None
    sent: tuple[Sent, ...] = ()
    outputs: tuple[Output, ...] = ()
    dropped: Optional[str] = None

    def to_json(self) -> dict:
        d = {"step": self.step, "process": self.process, "event": self.event}
        if self.msg is not None:
            d.update(msg=self.msg, sender=self.sender, kind=self.kind,
                     value=None if self.value is None else self.value.hex())
        if self.sent:
            d["sent"] = [[s.msg, s.to, s.kind, None if s.value is None else s.value.hex()]
                         for s in self.sent]
        if self.outputs:
            d["outputs"] = [output_json(o) for o in self.outputs]
        if self.dropped:
            d["dropped"] = self.dropped
        return d


def _sv_json(sv: pc.SignedValue) -> dict:
    return {"value": sv.value.hex(), "signer": sv.sig.signer, "tag": sv.sig.tag.hex()}


def output_json(o: Output) -> dict:
    if isinstance(o, Deliver):
        d = {"deliver": o.value.hex()}
        if o.quorum is not None:
            d["quorum"] = sorted(o.quorum)
        return d
    return {"accuse": {"first": _sv_json(o.proof.first), "second": _sv_json(o.proof.second)}}


@dataclass
class Trace:
    n: int
    source: int
    faulty: frozenset[int]
    entries: list[TraceEntry] = field(default_factory=list)
    quiescent: bool = False
    withheld: int = 0
    dropped: int = 0

    def deliveries(self) -> dict[int, list[bytes]]:
        out: dict[int, list[bytes]] = {}
        for e in self.entries:
            for o in e.outputs:
                if isinstance(o, Deliver):
                    out.setdefault(e.process, []).append(o.value)
        return out

    def accusations(self) -> dict[int, list[pc.MisbehaviorProof]]:
        out: dict[int, list[pc.MisbehaviorProof]] = {}
        for e in self.entries:
            for o in e.outputs:
                if isinstance(o, Accuse):
                    out.setdefault(e.process, []).append(o.proof)
        return out

    def delivered_values(self) -> set[bytes]:
        return {v for vs in self.deliveries().values() for v in vs}

    def summary(self) -> dict:
        dl, ac = self.deliveries(), self.accusations()
        return {
            "summary": {
                "n": self.n, "source": self.source, "faulty": sorted(self.faulty),
                "quiescent": self.quiescent, "withheld": self.withheld,
                "dropped": self.dropped, "steps": len(self.entries),
                "processes": [
                    {"process": p, "correct": p not in self.faulty,
                     "delivered": [v.hex() for v in dl.get(p, [])],
                     "accused": bool(ac.get(p))}
                    for p in range(self.n)],
            }
        }

    def to_jsonl(self) -> bytes:
        lines = [json.dumps(e.to_json(), sort_keys=True, separators=(",", ":"))
                 for e in self.entries]
        lines.append(json.dumps(self.summary(), sort_keys=True, separators=(",", ":")))
        return ("\n".join(lines) + "\n").encode()


class Schedule:
    """Default schedule: every pending message is deliverable."""

    def allows(self, msg: Message) -> bool:
        return True

    def release(self, sim: "Simulation") -> bool:
        """Called when nothing is deliverable; True if more became deliverable."""
        return False


class Simulation:
    def __init__(self, scenario: Scenario, schedule: Schedule | None = None,
                 adversary: Adversary | None = None):
        self.scenario = sc = scenario
        a = sc.assumptions
        self.keys = KeyRing(sc.seed, a.n)
        self.rng = random.Random(sc.seed)
        self.schedule = schedule or schedule_for(sc)
        self.states = {p: pc.init(p, sc.source, a.quorums[p], a.n, self.keys,
                                  self.keys.grant(p), sc.instance)
                       for p in sc.correct}
        co = Coalition(sc, self.keys, {p: self.keys.grant(p) for p in sorted(sc.faulty)},
                       random.Random(f"adversary-{sc.seed}"))
        self.adversary = adversary or make_adversary(co)
        self.pending: list[Message] = []
        self.next_id = 0
        self.trace = Trace(a.n, sc.source, sc.faulty)
        # Signatures correct processes have published: the coalition may replay these.
        self.seen: set[tuple[int, bytes]] = set()

    @property
    def delivered(self) -> set[int]:
        return {p for p, st in self.states.items() if st.delivered}

    def _enqueue(self, src: int, out) -> tuple[Sent, ...]:
        sent = []
        for dests, env in out:
            for d in sorted(dests):
                self.pending.append(Message(self.next_id, src, d, env))
                sent.append(Sent(self.next_id, d, env.kind.value, env.value))
                self.next_id += 1
        return tuple(sent)

    def _publish(self, env: Envelope) -> None:
        for sig in _signatures(env):
            self.seen.add((sig.signer, sig.tag))

    def _inject(self, step: int, emissions) -> None:
        faulty = self.scenario.faulty
        by_sender: dict[int, list] = {}
        for dests, env in emissions:
            if env.sender not in faulty:
                raise ForgeryError(f"adversary emitted an envelope as correct process {env.sender}")
            for sig in _signatures(env):
                if (sig.signer not in faulty and (sig.signer, sig.tag) not in self.seen
                        and _verifies(self.keys, sig, env, self.scenario)):
                    raise ForgeryError(f"valid signature of correct process {sig.signer} "
                                       "never published by it")
            by_sender.setdefault(env.sender, []).append((dests, env))
        for sender in sorted(by_sender):
            sent = self._enqueue(sender, by_sender[sender])
            self.trace.entries.append(TraceEntry(step, sender, "inject", sent=sent))

    def run(self) -> Trace:
        sc = self.scenario
        step, ticked = 0, -1
        if sc.source_correct:
            st, res = pc.on_broadcast(self.states[sc.source], sc.values[0])
            self.states[sc.source] = st
            for _, env in res.outgoing:
                self._publish(env)
            self.trace.entries.append(TraceEntry(0, sc.source, "broadcast", value=sc.values[0],
                                                 sent=self._enqueue(sc.source, res.outgoing)))
        while True:
            if step >= sc.step_budget:
                raise StepBudgetExceeded(f"no quiescence within {sc.step_budget} steps")
            if step > ticked:
                ticked = step
                emitted = self.adversary.on_tick(step)
                if emitted:
                    self._inject(step, emitted)
            ready = [i for i, m in enumerate(self.pending) if self.schedule.allows(m)]
            if not ready:
                if self.schedule.release(self):
                    continue
                if self.adversary.idle(step):
                    break
                step += 1
                continue
            msg = self.pending.pop(ready[self.rng.randrange(len(ready))])
            self._deliver(step, msg)
            step += 1
        self.trace.withheld = len(self.pending)
        self.trace.quiescent = not self.pending
        return self.trace

    def _deliver(self, step: int, msg: Message) -> None:
        env = msg.env
        if msg.dst in self.states:
            st, res = pc.step(self.states[msg.dst], env)
            self.states[msg.dst] = st
            for _, out in res.outgoing:
                self._publish(out)
            if res.dropped:
                self.trace.dropped += 1
            sent = self._enqueue(msg.dst, res.outgoing)
            self.trace.entries.append(TraceEntry(
                step, msg.dst, "receive", msg.id, msg.src, env.kind.value, env.value,
                sent, res.outputs, res.dropped))
        else:
            emitted = self.adversary.on_receive(msg.dst, env, step)
            if emitted:
                self._inject(step, emitted)


def _signatures(env: Envelope):
    if env.sig is not None:
        yield env.sig
    if env.signed is not None:
        yield env.signed.sig
    if env.proof is not None:
        yield env.proof.first.sig
        yield env.proof.second.sig


def _verifies(keys: KeyRing, sig, env: Envelope, sc: Scenario) -> bool:
    candidates = [env.body()]
    for sv in [env.signed] + ([env.proof.first, env.proof.second] if env.proof else []):
        if sv is not None:
            candidates.append(pc.value_subject(sc.instance, sv.value))
    return any(keys.verify(sig, sig.signer, c) for c in candidates)


class GroupSchedule(Schedule):
    """Keep traffic inside ``groups`` (sets of processes) until released.

    A message is allowed while held iff some group contains both endpoints.
    With ``forever`` the hold is never lifted.
    """

    def __init__(self, groups, forever: bool = False):
        self.groups = [frozenset(g) for g in groups]
        self.forever = forever
        self.held = True

    def allows(self, msg: Message) -> bool:
        if not self.held:
            return True
        return any(msg.src in g and msg.dst in g for g in self.groups)

    def release(self, sim: Simulation) -> bool:
        if self.held and not self.forever:
            self.held = False
            self.released_after = set(sim.delivered)
            return True
        return False


def schedule_for(sc: Scenario) -> Schedule:
    if sc.adversary == "partition":
        groups = [frozenset(q) | {sc.source} for _, q, _ in sc.params.get("groups", ())]
        return GroupSchedule(groups)
    return Schedule()


def run(scenario: Scenario, schedule: Schedule | None = None,
        adversary: Adversary | None = None) -> Trace:
    return Simulation(scenario, schedule, adversary).run()
