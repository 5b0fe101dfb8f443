"""Adversary strategies driving the faulty coalition.

A strategy only ever receives :class:`~kcrb.crypto.Signer` objects for the
faulty processes, so it cannot produce a valid signature for a correct one;
the engine double-checks every injected envelope anyway.

An emission is a ``(destinations, envelope)`` pair whose envelope sender is a
coalition member.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .. import protocol as pc
from ..crypto import KeyRing, Signature, Signer
from ..protocol import Envelope, Kind, MisbehaviorProof, SignedValue
from .scenario import Scenario

Emission = tuple[frozenset[int], Envelope]


@dataclass
class Coalition:
    scenario: Scenario
    keys: KeyRing
    signers: dict[int, Signer]
    rng: random.Random

    @property
    def n(self) -> int:
        return self.scenario.assumptions.n

    @property
    def source(self) -> int:
        return self.scenario.source

    @property
    def owns_source(self) -> bool:
        return self.scenario.source in self.signers

    @property
    def instance(self) -> bytes:
        return self.scenario.instance

    def sign_value(self, value: bytes) -> SignedValue:
        return pc.sign_value(self.signers[self.source], self.instance, value)

    def envelope(self, sender: int, kind: Kind, signed=None, proof=None) -> Envelope:
        return pc.make_envelope(self.signers[sender], kind, self.instance, signed, proof)


class Adversary:
    """Silent by default: faulty processes never take a step."""

    def __init__(self, co: Coalition, **params):
        self.co = co

    def on_tick(self, step: int) -> list[Emission]:
        return []

    def on_receive(self, me: int, env: Envelope, step: int) -> list[Emission]:
        return []

    def idle(self, step: int) -> bool:
        return True


class Silent(Adversary):
    pass


class Crash(Adversary):
    """Faulty processes follow the protocol until global step ``at``, then stop."""

    def __init__(self, co: Coalition, at: int = 0):
        super().__init__(co)
        self.at = at
        a = co.scenario.assumptions
        self.states = {p: pc.init(p, co.source, a.quorums[p], a.n, co.keys, s, co.instance)
                       for p, s in co.signers.items()}
        self.emitted: dict[int, list[Emission]] = {}

    def _log(self, step: int, out: list[Emission]) -> list[Emission]:
        if out:
            self.emitted.setdefault(step, []).extend(out)
        return out

    def on_tick(self, step: int) -> list[Emission]:
        if step == 0 and self.at > 0 and self.co.owns_source:
            st, res = pc.on_broadcast(self.states[self.co.source], self.co.scenario.values[0])
            self.states[self.co.source] = st
            return self._log(step, list(res.outgoing))
        return []

    def on_receive(self, me: int, env: Envelope, step: int) -> list[Emission]:
        if step >= self.at:
            return []
        st, res = pc.step(self.states[me], env)
        self.states[me] = st
        return self._log(step, list(res.outgoing))


class EquivocateSplit(Adversary):
    """Faulty source sends a different value to each part of the correct processes.

    Other coalition members echo each part's value into that part.  With a
    correct source the coalition echoes the genuine value, but only to a
    random half of the system.
    """

    def __init__(self, co: Coalition, parts: int | None = None):
        super().__init__(co)
        sc = co.scenario
        vals = list(sc.values)
        k = parts or len(vals)
        while len(vals) < k:
            vals.append(b"split-%d" % len(vals))
        correct = sc.correct
        co.rng.shuffle(correct)
        self.groups = [(vals[i], frozenset(correct[i::k])) for i in range(k)]
        self.echoed: set[int] = set()

    def on_tick(self, step: int) -> list[Emission]:
        if step != 0 or not self.co.owns_source:
            return []
        out = []
        for value, group in self.groups:
            if not group:
                continue
            sv = self.co.sign_value(value)
            out.append((group, self.co.envelope(self.co.source, Kind.SEND, sv)))
            for x in sorted(self.co.signers):
                out.append((group, self.co.envelope(x, Kind.ECHO, sv)))
        return out

    def on_receive(self, me: int, env: Envelope, step: int) -> list[Emission]:
        if self.co.owns_source or env.kind is not Kind.SEND or me in self.echoed:
            return []
        if not env.signed.verify(self.co.keys, self.co.source, self.co.instance):
            return []
        self.echoed.add(me)
        half = frozenset(p for p in range(self.co.n) if self.co.rng.random() < 0.5)
        return [(half, self.co.envelope(me, Kind.ECHO, env.signed))] if half else []


class Scripted(Adversary):
    """Emit ``steps[i]`` (a list of emissions) at scheduler step ``i``."""

    def __init__(self, co: Coalition, steps=()):
        super().__init__(co)
        self.steps = [list(s) for s in steps]

    def on_tick(self, step: int) -> list[Emission]:
        return self.steps[step] if step < len(self.steps) else []

    def idle(self, step: int) -> bool:
        return step >= len(self.steps)


def random_script(co: Coalition, count: int = 12, span: int = 30) -> list[list[Emission]]:
    """Random coalition traffic: SEND/ECHO/ACC with a mix of valid and junk signatures.

    Source-signed values are genuine only when the coalition owns the source;
    otherwise their tags are random bytes and correct processes drop them.
    """
    rng = co.rng
    pool = list(co.scenario.values) + [b"x", b"y"]
    members = sorted(co.signers)
    steps: list[list[Emission]] = [[] for _ in range(span)]
    if not members:
        return []

    def signed(v: bytes) -> SignedValue:
        if co.owns_source and rng.random() < 0.9:
            return co.sign_value(v)
        return SignedValue(v, Signature(co.source, rng.randbytes(32)))

    for _ in range(count):
        sender = rng.choice(members)
        kind = rng.choice([Kind.SEND, Kind.ECHO, Kind.ECHO, Kind.ACC])
        if kind is Kind.ACC:
            v1, v2 = rng.sample(pool, 2) if rng.random() < 0.8 else (pool[0], pool[0])
            env = co.envelope(sender, kind, proof=MisbehaviorProof(signed(v1), signed(v2)))
        else:
            if kind is Kind.SEND and co.owns_source and rng.random() < 0.7:
                sender = co.source
            env = co.envelope(sender, kind, signed(rng.choice(pool)))
        dests = frozenset(p for p in range(co.n) if rng.random() < 0.6)
        if dests:
            steps[rng.randrange(span)].append((dests, env))
    return steps


class ScriptedRandom(Scripted):
    def __init__(self, co: Coalition, count: int = 12, span: int = 30):
        super().__init__(co, random_script(co, count, span))


class Partition(Adversary):
    """The faulty side of the partition attack.

    ``groups`` lists ``(target, quorum, value_index)``: the source sends the
    value to every correct member of ``quorum`` and every faulty member of
    ``quorum`` echoes it to them.  The matching schedule keeps each group's
    traffic inside the group until every target has delivered.
    """

    def __init__(self, co: Coalition, groups=()):
        super().__init__(co)
        self.groups = [(int(t), frozenset(q), int(i)) for t, q, i in groups]

    def on_tick(self, step: int) -> list[Emission]:
        if step != 0:
            return []
        sc = self.co.scenario
        out = []
        for _, quorum, i in self.groups:
            inside = frozenset(quorum - sc.faulty)
            sv = self.co.sign_value(sc.values[i])
            out.append((inside, self.co.envelope(sc.source, Kind.SEND, sv)))
            for x in sorted(quorum & sc.faulty):
                out.append((inside, self.co.envelope(x, Kind.ECHO, sv)))
        return out


STRATEGIES = {
    "silent": Silent,
    "crash": Crash,
    "equivocate_split": EquivocateSplit,
    "scripted": Scripted,
    "scripted_random": ScriptedRandom,
    "partition": Partition,
}


def make_adversary(co: Coalition) -> Adversary:
    sc = co.scenario
    return STRATEGIES[sc.adversary](co, **sc.params)
