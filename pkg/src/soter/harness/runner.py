"""Drive every party of a scenario to a terminal outcome over a datagram transport.

Time advances in ticks. Everything sent during tick ``t`` is delivered during
tick ``t + 1``: receivers in party-id order, and for each receiver the
senders in id order with every link kept FIFO. Keys, nonces and the session
id all derive from the seed, so a run is a pure function of its inputs.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Optional, Union

from soter.codec.cbor import CodecError
from soter.codec.envelope import EnvelopeError, NonceTracker, SealedEnvelope, open_envelope, seal
from soter.codec.wire import decode_message, encode_message
from soter.credential import Credential, CredentialId, issue
from soter.harness.adversary import Adversary, make_adversary
from soter.harness.metrics import ScenarioMetrics
from soter.harness.scenario import (
    AdversarySpec,
    Materialized,
    Scenario,
    all_credentials,
    credential_total,
    materialize,
)
from soter.harness.topology import CLIENT, RS
from soter.harness.transport import Datagram, InMemoryTransport, Transport
from soter.keys import KeyPair, pairwise_key
from soter.negotiation.trust import TrustLevelTable
from soter.negotiation.session import PartyContext, SessionState, new_session, round_cap_for, start_negotiation, step
from soter.negotiation.types import (
    Failure,
    FailureReason,
    NegotiationError,
    NegotiationMessage,
    Outcome,
    Status,
    Success,
)

# One coordinator round spans at most four hops (RS, client, CSP, client, RS).
TICKS_PER_ROUND = 4


@dataclass(frozen=True)
class TranscriptEntry:
    tick: int
    src: str
    dst: str
    disposition: str
    data: bytes

    def line(self) -> str:
        return f"{self.tick}\t{self.src}->{self.dst}\t{self.disposition}\t{self.data.hex()}"


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def add(self, tick: int, d: Datagram, disposition: str) -> None:
        src = d.src if d.legit else f"~{d.src}"
        self.entries.append(TranscriptEntry(tick, src, d.dst, disposition, d.data))

    def to_text(self) -> str:
        return "".join(e.line() + "\n" for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class ScenarioResult:
    scenario: Scenario
    transcript: Transcript
    metrics: ScenarioMetrics
    outcome: Outcome
    states: dict[str, SessionState]
    messages: list[tuple[int, NegotiationMessage]]
    adversary: Optional[Adversary] = None
    # "protocol" when the coordinator reached the outcome itself, "harness"
    # when the run went quiet or hit the tick guard first.
    outcome_source: str = "protocol"

    @property
    def adversary_grant(self) -> bool:
        return self.adversary is not None and self.adversary.grant_held(self)


class RunContext:
    """What an adversary can observe about a run (ids and topology, never keys)."""

    def __init__(self, scenario: Scenario, mat: Materialized, seed: int, session_id: int) -> None:
        self.scenario = scenario
        self.topology = mat.topology
        self.seed = seed
        self.session_id = session_id
        self.now = scenario.now
        self._seq = 0

    @property
    def party_ids(self) -> tuple[str, ...]:
        return self.topology.party_ids

    def neighbours(self, party: str) -> list[str]:
        return sorted(p for p in self.party_ids if p != party and self.topology.linked(p, party))

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def forged_credential(self, claimed_issuer: str) -> Credential:
        fake = KeyPair.derive(claimed_issuer, b"not-the-real-key")
        return issue(fake, CredentialId(claimed_issuer, 77), CLIENT, {"role": "physician"}, (0, 1000))


def _nonce(seed: int, sender: str, counter: int) -> bytes:
    return hashlib.sha256(f"soter-nonce\x00{seed}\x00{sender}\x00{counter}".encode()).digest()[:12]


def _secret_strings(creds: list[Credential]) -> set[str]:
    out = set()
    for c in creds:
        for name, value in c.attributes:
            for s in (name, value):
                if isinstance(s, str) and len(s) >= 4:
                    out.add(s)
    return out


def run_scenario(
    scenario: Scenario,
    *,
    adversary: Union[None, AdversarySpec, Adversary, dict] = None,
    seed: Optional[int] = None,
    transport: Optional[Transport] = None,
    max_ticks: Optional[int] = None,
    detect_deadlock: bool = True,
) -> ScenarioResult:
    """Run ``scenario`` to completion; ``adversary`` overrides the scenario's own."""
    seed = scenario.seed if seed is None else seed
    adv = make_adversary(adversary if adversary is not None else scenario.adversary)
    if adv is not None:
        scenario = adv.prepare(scenario)
    mat = materialize(scenario, seed)
    topo = mat.topology
    session_id = random.Random(seed).getrandbits(64)
    cap = round_cap_for(credential_total(mat))
    if max_ticks is None:
        max_ticks = TICKS_PER_ROUND * (cap + 2) + 4

    states: dict[str, SessionState] = {}
    for pid in topo.party_ids:
        role = topo.role_of(pid)
        ctx = PartyContext(
            party=pid,
            vault=mat.vaults[pid],
            disclosure=mat.disclosure[pid],
            directory=mat.directory,
            authz=mat.authz if pid == RS else None,
            trust_table=mat.trust_table if pid == RS else TrustLevelTable(),
            peer_history=mat.history if pid == RS else frozenset(),
        )
        states[pid] = new_session(
            ctx, role, topo.mode,
            parent=topo.parent_of(pid), children=topo.children_of(pid),
            session_id=session_id, now=scenario.now, round_cap=cap,
        )
        states[pid].detect_deadlock = detect_deadlock

    run = RunContext(scenario, mat, seed, session_id)
    metrics = ScenarioMetrics.empty(topo.display_order())
    transcript = Transcript()
    messages: list[tuple[int, NegotiationMessage]] = []
    trackers = {pid: NonceTracker() for pid in topo.party_ids}
    counters = {pid: 0 for pid in topo.party_ids}
    net = transport or InMemoryTransport()
    legit_rejected = False

    def seal_out(tick: int, msg: NegotiationMessage) -> Datagram:
        counters[msg.sender] += 1
        nonce = _nonce(seed, msg.sender, counters[msg.sender])
        env = seal(
            encode_message(msg),
            mat.keys[msg.sender].signing,
            pairwise_key(seed, msg.sender, msg.recipient),
            nonce,
            sender=msg.sender,
            recipient=msg.recipient,
            tracker=trackers[msg.sender],
        )
        messages.append((tick, msg))
        return Datagram(msg.sender, msg.recipient, env.to_bytes(), run.next_seq())

    def deliver(d: Datagram) -> tuple[str, list[NegotiationMessage]]:
        # Keys are chosen by the link the datagram arrived on, never by what
        # its (not yet authenticated) header claims.
        sender = d.src
        if sender not in mat.directory:
            return "rejected:UnknownIssuer", []
        if sender not in topo.party_ids or not topo.linked(sender, d.dst):
            return "rejected:UnexpectedPeer", []
        try:
            env = SealedEnvelope.from_bytes(d.data)
            plain = open_envelope(
                env,
                pairwise_key(seed, sender, d.dst),
                mat.directory[sender],
                expected_sender=sender,
                expected_recipient=d.dst,
            )
            msg = decode_message(plain)
        except EnvelopeError as exc:
            return f"rejected:{exc.reason}", []
        except CodecError:
            return "rejected:Malformed", []
        if msg.sender != sender or msg.recipient != d.dst:
            return "rejected:HeaderMismatch", []
        try:
            new_state, outs = step(states[d.dst], msg)
        except NegotiationError as exc:
            return f"rejected:{exc.reason}", []
        except ValueError:
            return "rejected:Malformed", []
        states[d.dst] = new_state
        if d.legit:
            metrics.disclosed += sum(1 for cs in msg.credential_states if cs.status is Status.DISCLOSED)
        return "delivered", outs

    client, first = start_negotiation(states[CLIENT], scenario.request)
    states[CLIENT] = client
    outbound = [seal_out(0, first)]
    tick = 0
    while tick < max_ticks:
        pending = bool(outbound) or (adv is not None and adv.pending(tick + 1))
        if not pending:
            break
        tick += 1
        wire: list[Datagram] = []
        for d in outbound:
            wire.extend(adv.on_transmit(tick, d, run) if adv else [d])
        if adv is not None:
            wire.extend(adv.inject(tick, run))
        net.send(wire)
        outbound = []
        for d in net.collect():
            disposition, outs = deliver(d)
            transcript.add(tick, d, disposition)
            if d.legit:
                metrics.record(d.src, d.dst, len(d.data))
                if disposition == "delivered":
                    metrics.delivered += 1
                else:
                    metrics.rejected += 1
                    legit_rejected = True
                if d.tampered:
                    metrics.tampered_sent += 1
                    if disposition == "delivered":
                        metrics.tampered_accepted += 1
            else:
                metrics.adversary_sent += 1
                if disposition == "delivered":
                    metrics.adversary_accepted += 1
            outbound.extend(seal_out(tick, m) for m in outs)
    for d in outbound:
        transcript.add(tick + 1, d, "dropped")
        metrics.dropped += 1
    if transport is None:
        net.close()

    rs = states[RS]
    source = "protocol"
    if rs.outcome.terminal:
        outcome: Outcome = rs.outcome
    else:
        source = "harness"
        if outbound:
            outcome = Failure(FailureReason.ROUND_CAP)
        elif legit_rejected:
            outcome = Failure(FailureReason.VERIFICATION)
        else:
            outcome = Failure(FailureReason.DEADLOCK)
    metrics.rounds = rs.round
    metrics.outcome = str(outcome)
    if adv is not None and adv.captured:
        secrets_ = _secret_strings(all_credentials(mat))
        for blob in adv.captured:
            for s in sorted(secrets_):
                if s.encode() in blob:
                    metrics.leaks.append(s)
    return ScenarioResult(scenario, transcript, metrics, outcome, states, messages, adv, source)


def client_granted(result: ScenarioResult) -> bool:
    return isinstance(result.outcome, Success) and isinstance(result.states[CLIENT].outcome, Success)
