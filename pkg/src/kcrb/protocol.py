"""Accountable k-consistent reliable broadcast as a pure per-process state machine.

Handlers take a frozen :class:`ProcessState` and one input event and return
the next state plus a :class:`StepResult`.  Nothing here does I/O.

Departures from the bare pseudocode, all of them guards:

* ``echoes[j]`` keeps the first ECHO from ``j``; a later conflicting ECHO is
  still compared against the record and triggers an accusation.
* The ECHO handler's accusation branch checks and sets ``accused``.
* Once accused a process no longer delivers; delivering and then accusing
  is allowed.
* Envelopes with bad signatures and ACC messages that are not genuine
  equivocation proofs are dropped; ``StepResult.dropped`` says why.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .crypto import KeyRing, Signature, Signer, encode


class ProtocolError(RuntimeError):
    """A handler was called against its contract (not a network fault)."""


class Kind(str, enum.Enum):
    SEND = "SEND"
    ECHO = "ECHO"
    ACC = "ACC"


def value_subject(instance: bytes, value: bytes) -> bytes:
    """What the source signs: the instance and the value it broadcasts."""
    return encode(b"SEND", instance, value)


@dataclass(frozen=True)
class SignedValue:
    value: bytes
    sig: Signature

    def encoded(self) -> bytes:
        return encode(self.value, self.sig.encoded())

    def verify(self, keys: KeyRing, source: int, instance: bytes) -> bool:
        return keys.verify(self.sig, source, value_subject(instance, self.value))


@dataclass(frozen=True)
class MisbehaviorProof:
    first: SignedValue
    second: SignedValue

    def encoded(self) -> bytes:
        return encode(self.first.encoded(), self.second.encoded())


def verify_proof(proof: MisbehaviorProof, keys: KeyRing, source: int, instance: bytes) -> bool:
    """Third-party check: two distinct values, both signed by the source."""
    return (proof.first.value != proof.second.value
            and proof.first.verify(keys, source, instance)
            and proof.second.verify(keys, source, instance))


@dataclass(frozen=True)
class Envelope:
    kind: Kind
    sender: int
    instance: bytes
    signed: Optional[SignedValue] = None
    proof: Optional[MisbehaviorProof] = None
    sig: Optional[Signature] = None

    def body(self) -> bytes:
        return encode(self.kind.value, self.sender, self.instance,
                      self.signed.encoded() if self.signed else b"",
                      self.proof.encoded() if self.proof else b"")

    def encoded(self) -> bytes:
        return encode(self.body(), self.sig.encoded() if self.sig else b"")

    @property
    def value(self) -> Optional[bytes]:
        return self.signed.value if self.signed else None

    def sender_ok(self, keys: KeyRing) -> bool:
        return self.sig is not None and keys.verify(self.sig, self.sender, self.body())


def make_envelope(signer: Signer, kind: Kind, instance: bytes,
                  signed: SignedValue | None = None,
                  proof: MisbehaviorProof | None = None) -> Envelope:
    env = Envelope(kind, signer.pid, instance, signed, proof)
    return replace(env, sig=signer.sign(env.body()))


def sign_value(signer: Signer, instance: bytes, value: bytes) -> SignedValue:
    return SignedValue(value, signer.sign(value_subject(instance, value)))


@dataclass(frozen=True)
class Deliver:
    value: bytes
    quorum: Optional[frozenset[int]] = None   # the quorum whose echoes justified delivery


@dataclass(frozen=True)
class Accuse:
    proof: MisbehaviorProof


Output = Union[Deliver, Accuse]


@dataclass(frozen=True)
class StepResult:
    outgoing: tuple[tuple[frozenset[int], Envelope], ...] = ()
    outputs: tuple[Output, ...] = ()
    dropped: Optional[str] = None


NOTHING = StepResult()


@dataclass(frozen=True)
class ProcessState:
    me: int
    source: int
    n: int
    quorums: tuple[frozenset[int], ...]
    instance: bytes = b"instance-0"
    broadcast_done: bool = False
    sentecho: bool = False
    delivered: bool = False
    accused: bool = False
    echoes: tuple[Optional[SignedValue], ...] = ()
    keys: KeyRing = field(default=None, compare=False, repr=False)
    signer: Signer = field(default=None, compare=False, repr=False)

    @property
    def everyone(self) -> frozenset[int]:
        return frozenset(range(self.n))


def init(me: int, source: int, quorums, n: int, keys: KeyRing, signer: Signer,
         instance: bytes = b"instance-0") -> ProcessState:
    quorums = tuple(frozenset(q) for q in quorums)
    if not quorums:
        raise ProtocolError(f"process {me} has no quorum")
    for q in quorums:
        if me not in q:
            raise ProtocolError(f"quorum {sorted(q)} of process {me} does not contain it")
        if not all(0 <= x < n for x in q):
            raise ProtocolError(f"quorum {sorted(q)} references unknown processes")
    if signer.pid != me:
        raise ProtocolError(f"process {me} was given the signer of {signer.pid}")
    return ProcessState(me, source, n, quorums, instance, echoes=(None,) * n,
                        keys=keys, signer=signer)


def on_broadcast(state: ProcessState, value: bytes) -> tuple[ProcessState, StepResult]:
    if state.me != state.source:
        raise ProtocolError(f"process {state.me} is not the source")
    if state.broadcast_done:
        raise ProtocolError("broadcast already invoked for this instance")
    sv = sign_value(state.signer, state.instance, value)
    env = make_envelope(state.signer, Kind.SEND, state.instance, signed=sv)
    return replace(state, broadcast_done=True), StepResult(((state.everyone, env),))


def _echo(state: ProcessState, sv: SignedValue) -> tuple[frozenset[int], Envelope]:
    return state.everyone, make_envelope(state.signer, Kind.ECHO, state.instance, signed=sv)


def _acc(state: ProcessState, proof: MisbehaviorProof) -> tuple[frozenset[int], Envelope]:
    return state.everyone, make_envelope(state.signer, Kind.ACC, state.instance, proof=proof)


def _signed_ok(state: ProcessState, env: Envelope) -> Optional[str]:
    if env.instance != state.instance:
        return "wrong instance"
    if not env.sender_ok(state.keys):
        return "bad sender signature"
    if env.signed is None or not env.signed.verify(state.keys, state.source, state.instance):
        return "bad source signature"
    return None


def on_send(state: ProcessState, env: Envelope) -> tuple[ProcessState, StepResult]:
    if env.kind is not Kind.SEND:
        raise ProtocolError(f"on_send got {env.kind.value}")
    why = _signed_ok(state, env) or (None if env.sender == state.source else "SEND not from source")
    if why:
        return state, StepResult(dropped=why)
    if state.sentecho:
        return state, NOTHING
    return replace(state, sentecho=True), StepResult((_echo(state, env.signed),))


def check_delivery(state: ProcessState) -> Optional[bytes]:
    """Value m if some quorum (in list order) has echoed m from every member."""
    hit = delivery_quorum(state)
    return None if hit is None else hit[0]


def delivery_quorum(state: ProcessState) -> Optional[tuple[bytes, frozenset[int]]]:
    for q in state.quorums:
        vals = set()
        for member in q:
            rec = state.echoes[member]
            if rec is None:
                break
            vals.add(rec.value)
        else:
            if len(vals) == 1:
                return vals.pop(), q
    return None


def on_echo(state: ProcessState, env: Envelope) -> tuple[ProcessState, StepResult]:
    if env.kind is not Kind.ECHO:
        raise ProtocolError(f"on_echo got {env.kind.value}")
    why = _signed_ok(state, env)
    if why:
        return state, StepResult(dropped=why)
    sv = env.signed
    j = env.sender
    out: list[tuple[frozenset[int], Envelope]] = []
    outputs: list[Output] = []
    if state.echoes[j] is None:
        echoes = list(state.echoes)
        echoes[j] = sv
        state = replace(state, echoes=tuple(echoes))
    if not state.accused:
        other = next((r for r in state.echoes if r is not None and r.value != sv.value), None)
        if other is not None:
            proof = MisbehaviorProof(sv, other)
            state = replace(state, accused=True)
            out.append(_acc(state, proof))
            outputs.append(Accuse(proof))
    if not state.sentecho:
        state = replace(state, sentecho=True)
        out.append(_echo(state, sv))
    if not state.delivered and not state.accused:
        hit = delivery_quorum(state)
        if hit is not None:
            state = replace(state, delivered=True)
            outputs.append(Deliver(*hit))
    return state, StepResult(tuple(out), tuple(outputs))


def on_acc(state: ProcessState, env: Envelope) -> tuple[ProcessState, StepResult]:
    if env.kind is not Kind.ACC:
        raise ProtocolError(f"on_acc got {env.kind.value}")
    if env.instance != state.instance or not env.sender_ok(state.keys):
        return state, StepResult(dropped="bad sender signature")
    if env.proof is None or not verify_proof(env.proof, state.keys, state.source, state.instance):
        return state, StepResult(dropped="invalid misbehavior proof")
    if state.accused:
        return state, NOTHING
    state = replace(state, accused=True)
    return state, StepResult((_acc(state, env.proof),), (Accuse(env.proof),))


_HANDLERS = {Kind.SEND: on_send, Kind.ECHO: on_echo, Kind.ACC: on_acc}


def step(state: ProcessState, env: Envelope) -> tuple[ProcessState, StepResult]:
    """Dispatch one received envelope to its handler."""
    return _HANDLERS[env.kind](state, env)
