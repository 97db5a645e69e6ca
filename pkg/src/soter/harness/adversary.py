"""Attackers the harness can place in a run.

Each adversary may rewrite the scenario before it is built (``prepare``),
alter or copy datagrams in flight (``on_transmit``) and fabricate datagrams of
its own (``inject``). It never holds a legitimate party's keys.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Mapping, Optional

from soter.codec.envelope import seal
from soter.codec.wire import encode_message
from soter.harness.scenario import AdversarySpec, CredentialSpec, Scenario
from soter.harness.topology import CLIENT, RS
from soter.harness.transport import Datagram
from soter.keys import KeyPair, pairwise_key
from soter.negotiation.types import (
    SUCCEEDED,
    AccessRequest,
    CredentialState,
    Grant,
    NegotiationMessage,
    Status,
    Success,
)
from soter.policy import atom

if TYPE_CHECKING:
    from soter.harness.runner import RunContext

CATEGORIES = ("Spoofing", "Tampering", "Information Disclosure", "Elevation of Privilege")


class AdversaryConfigError(ValueError):
    pass


def _adv_seed(tag: str) -> bytes:
    return hashlib.sha256(b"soter-adversary\x00" + tag.encode()).digest()


@dataclass
class Adversary:
    kind: str = "none"
    activation: int = 1
    category: str = ""
    captured: list[bytes] = field(default_factory=list)

    def prepare(self, scenario: Scenario) -> Scenario:
        return scenario

    def on_transmit(self, tick: int, d: Datagram, ctx: "RunContext") -> list[Datagram]:
        return [d]

    def inject(self, tick: int, ctx: "RunContext") -> list[Datagram]:
        return []

    def pending(self, tick: int) -> bool:
        """True while the adversary still has something scheduled at or after ``tick``."""
        return False

    def grant_held(self, result) -> bool:
        """Did this adversary end up with access it should not have?"""
        return False


def _fabricate(
    ctx: "RunContext", claimed: str, dst: str, msg: NegotiationMessage, keys: KeyPair, channel_key: bytes
) -> Datagram:
    nonce = hashlib.sha256(b"adv-nonce" + claimed.encode() + dst.encode() + bytes([msg.round % 256])).digest()[:12]
    env = seal(encode_message(msg), keys.signing, channel_key, nonce, sender=claimed, recipient=dst)
    return Datagram(claimed, dst, env.to_bytes(), ctx.next_seq(), origin="adversary")


def _bait(ctx: "RunContext", claimed: str, dst: str) -> NegotiationMessage:
    """The most damaging message ``claimed`` could send to ``dst``."""
    big_round = 1_000_000
    if claimed == RS:
        facts = frozenset({atom("credential", CLIENT, "role", "physician")})
        return NegotiationMessage(
            ctx.session_id, claimed, dst, big_round, process_state=SUCCEEDED, grant=Grant(ctx.session_id, facts, ctx.now)
        )
    if claimed == CLIENT and dst == RS:
        return NegotiationMessage(ctx.session_id, claimed, dst, big_round, access_request=AccessRequest(CLIENT, "write", "rec1"))
    if claimed == CLIENT:
        # Ask a CSP for everything it holds about the client.
        return NegotiationMessage(
            ctx.session_id, claimed, dst, big_round, requests=(atom("credential", CLIENT, "role", "physician"),)
        )
    # A CSP "disclosing" a credential it never issued.
    forged = ctx.forged_credential(claimed)
    return NegotiationMessage(
        ctx.session_id, claimed, dst, big_round,
        credential_states=(CredentialState(forged.id, Status.DISCLOSED, forged.id.owner, forged),),
    )


@dataclass
class Spoof(Adversary):
    """Sends messages under a legitimate party's id using keys of its own.

    With ``channel_key_known`` the attacker also holds the victim's pairwise
    channel key (as if the link key leaked), so only the signature stands in
    the way.
    """

    target: str = RS
    channel_key_known: bool = False
    _done: bool = False

    def inject(self, tick: int, ctx: "RunContext") -> list[Datagram]:
        if tick != self.activation or self._done:
            return []
        self._done = True
        keys = KeyPair.derive(self.target, _adv_seed("spoof:" + self.target))
        out = []
        for dst in ctx.neighbours(self.target):
            if self.channel_key_known:
                channel = pairwise_key(ctx.seed, self.target, dst)
            else:
                channel = pairwise_key(_adv_seed("guess"), self.target, dst)
            out.append(_fabricate(ctx, self.target, dst, _bait(ctx, self.target, dst), keys, channel))
        return out

    def pending(self, tick: int) -> bool:
        return not self._done and tick <= self.activation


@dataclass
class Rogue(Adversary):
    """A node nobody registered tries to join and ask for things."""

    node: str = "mallory"
    _done: bool = False

    def inject(self, tick: int, ctx: "RunContext") -> list[Datagram]:
        if tick != self.activation or self._done:
            return []
        self._done = True
        keys = KeyPair.derive(self.node, _adv_seed("rogue:" + self.node))
        out = []
        for dst in ctx.party_ids:
            msg = NegotiationMessage(
                ctx.session_id, self.node, dst, 0,
                requests=(atom("credential", CLIENT, "role", "physician"),),
                access_request=AccessRequest(self.node, "read", "rec1") if dst == RS else None,
            )
            channel = pairwise_key(_adv_seed("rogue-channel"), self.node, dst)
            out.append(_fabricate(ctx, self.node, dst, msg, keys, channel))
        return out

    def pending(self, tick: int) -> bool:
        return not self._done and tick <= self.activation

    def grant_held(self, result) -> bool:
        st = result.states.get(RS)
        return st is not None and st.access_request is not None and st.access_request.requester == self.node


@dataclass
class Tamper(Adversary):
    """XOR one byte of every datagram on a directed link."""

    src: str = CLIENT
    dst: str = RS
    offset: int = 12
    xor: int = 0x01

    def on_transmit(self, tick: int, d: Datagram, ctx: "RunContext") -> list[Datagram]:
        if tick < self.activation or (d.src, d.dst) != (self.src, self.dst) or not d.legit:
            return [d]
        data = bytearray(d.data)
        i = min(self.offset, len(data) - 1)
        data[i] ^= self.xor & 0xFF or 0x01
        return [replace(d, data=bytes(data), tampered=True)]


@dataclass
class Replay(Adversary):
    """Re-delivers a copy of every datagram seen on a directed link right after the original."""

    src: str = CLIENT
    dst: str = RS
    _held: list[Datagram] = field(default_factory=list)

    def on_transmit(self, tick: int, d: Datagram, ctx: "RunContext") -> list[Datagram]:
        if tick >= self.activation and (d.src, d.dst) == (self.src, self.dst) and d.legit:
            self._held.append(d)
        return [d]

    def inject(self, tick: int, ctx: "RunContext") -> list[Datagram]:
        ready = [d for d in self._held]
        self._held = []
        return [replace(d, seq=ctx.next_seq(), origin="adversary") for d in ready]

    def pending(self, tick: int) -> bool:
        return bool(self._held)


@dataclass
class Eavesdrop(Adversary):
    """Keeps a copy of every datagram crossing a link, in either direction."""

    a: str = CLIENT
    b: str = "csp1"

    def on_transmit(self, tick: int, d: Datagram, ctx: "RunContext") -> list[Datagram]:
        if {d.src, d.dst} == {self.a, self.b}:
            self.captured.append(d.data)
        return [d]


@dataclass
class Forge(Adversary):
    """The holder presents a credential it signed itself under someone else's name.

    Every genuine credential carrying the forged attribute is removed first, so
    a successful negotiation can only mean the forgery was believed.
    """

    holder: str = CLIENT
    issuer: str = "csp1"
    attribute: tuple = ("affiliation", "kent_medical")
    index: int = 90

    def prepare(self, scenario: Scenario) -> Scenario:
        attr = tuple(self.attribute)
        parties = {
            pid: replace(p, credentials=tuple(c for c in p.credentials if attr not in c.attributes))
            for pid, p in scenario.parties.items()
        }
        spec = parties.get(self.holder, scenario.party(self.holder))
        fake = CredentialSpec(self.index, CLIENT, (tuple(self.attribute),), issuer=self.issuer, forged=True)
        text = spec.policy_text + f"\nrelease({self.index}, R).\n"
        parties[self.holder] = replace(spec, credentials=spec.credentials + (fake,), policy_text=text)
        return replace(scenario, parties=parties)

    def grant_held(self, result) -> bool:
        return isinstance(result.outcome, Success)


_KINDS = {
    "spoof": (Spoof, "Spoofing"),
    "rogue": (Rogue, "Elevation of Privilege"),
    "forge": (Forge, "Elevation of Privilege"),
    "tamper": (Tamper, "Tampering"),
    "replay": (Replay, "Tampering"),
    "eavesdrop": (Eavesdrop, "Information Disclosure"),
}

KINDS = tuple(_KINDS)


def category_of(kind: str) -> str:
    return _KINDS[kind][1]


def make_adversary(spec: Optional[AdversarySpec | Mapping[str, Any] | Adversary]) -> Optional[Adversary]:
    if spec is None or isinstance(spec, Adversary):
        return spec
    if isinstance(spec, Mapping):
        spec = AdversarySpec(spec["kind"], {k: v for k, v in spec.items() if k not in ("kind", "activation")},
                             int(spec.get("activation", 1)))
    if spec.kind not in _KINDS:
        raise AdversaryConfigError(f"unknown adversary kind {spec.kind!r}; choose from {KINDS}")
    cls, category = _KINDS[spec.kind]
    params = dict(spec.params)
    if "link" in params:
        link = params.pop("link")
        if not (isinstance(link, (list, tuple)) and len(link) == 2):
            raise AdversaryConfigError("link must be [from, to]")
        names = ("a", "b") if spec.kind == "eavesdrop" else ("src", "dst")
        params.update(dict(zip(names, link)))
    if "attribute" in params:
        params["attribute"] = tuple(params["attribute"])
    try:
        return cls(kind=spec.kind, activation=spec.activation, category=category, **params)
    except TypeError as exc:
        raise AdversaryConfigError(f"{spec.kind}: {exc}") from exc
