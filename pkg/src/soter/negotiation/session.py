"""Per-party negotiation sessions and the eager resolution strategy.

The resource server coordinates: each of its rounds evaluates the access
goal, then sends every child a message and waits for all replies. Children
answer their parent; a collecting client (Inactive mode) first relays what it
cannot serve itself to the CSPs and replies once they have all answered.

Every session counts credential-state events (a new decision on one of its
own credentials, a newly verified credential) and reports the count upward.
A coordinator round whose replies carry no events is a deadlock.
"""

from __future__ import annotations

import secrets
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from soter.credential import (
    Credential,
    CredentialError,
    CredentialId,
    CredentialVault,
    DisclosurePolicyVault,
    Release,
    RequireFirst,
    disclosure_decision,
    verify,
)
from soter.keys import PublicKeyDirectory
from soter.negotiation.trust import TrustLevelTable, trust_level_evaluate, vouched_facts
from soter.negotiation.types import (
    OPEN,
    SUCCEEDED,
    AccessRequest,
    CredentialState,
    Failure,
    FailureReason,
    Grant,
    InProgress,
    Mode,
    NegotiationMessage,
    Outcome,
    Role,
    SessionMismatch,
    StaleRound,
    Status,
    Success,
    UnexpectedPeer,
    failed,
)
from soter.policy import Atom, PolicyProgram, atom, query, sorted_atoms, unify, unsatisfied_requirements


@dataclass(frozen=True)
class PartyContext:
    """Static configuration of one party, shared read-only by all its sessions."""

    party: str
    vault: CredentialVault
    disclosure: DisclosurePolicyVault
    directory: PublicKeyDirectory
    authz: Optional[PolicyProgram] = None
    trust_table: TrustLevelTable = TrustLevelTable()
    # attributes of the client this party has verified in earlier sessions
    peer_history: frozenset = frozenset()


def round_cap_for(total_credentials: int) -> int:
    return 2 * total_credentials + 2


def new_session_id() -> int:
    return secrets.randbits(64)


@dataclass
class SessionState:
    ctx: PartyContext
    role: Role
    mode: Mode
    session_id: int
    parent: Optional[str]
    children: tuple[str, ...] = ()
    now: int = 0
    round_cap: int = 2
    strategy: "EagerStrategy" = None  # type: ignore[assignment]
    access_request: Optional[AccessRequest] = None
    round: int = 0
    last_seen: dict[str, int] = field(default_factory=dict)
    facts: frozenset[Atom] = frozenset()
    received: dict[CredentialId, Credential] = field(default_factory=dict)
    received_from: dict[CredentialId, str] = field(default_factory=dict)
    disclosed_to: set[tuple[str, CredentialId]] = field(default_factory=set)
    peer_requests: dict[str, frozenset[Atom]] = field(default_factory=dict)
    decisions: dict[tuple[str, CredentialId], Status] = field(default_factory=dict)
    observed: set[tuple[str, CredentialId, Status]] = field(default_factory=set)
    requests_sent: dict[str, frozenset[Atom]] = field(default_factory=dict)
    goal_requirements: frozenset[Atom] = frozenset()
    awaiting: frozenset[str] = frozenset()
    progress: int = 0
    trust_level: int = 0
    vouched: frozenset[Atom] = frozenset()
    outcome: Outcome = field(default_factory=InProgress)
    # Off only to check that a declared deadlock really was one.
    detect_deadlock: bool = True

    def __post_init__(self) -> None:
        if self.strategy is None:
            self.strategy = EAGER

    @property
    def party(self) -> str:
        return self.ctx.party

    @property
    def peers(self) -> tuple[str, ...]:
        head = (self.parent,) if self.parent is not None else ()
        return head + tuple(self.children)

    def copy(self) -> "SessionState":
        return replace(
            self,
            last_seen=dict(self.last_seen),
            received=dict(self.received),
            received_from=dict(self.received_from),
            disclosed_to=set(self.disclosed_to),
            peer_requests=dict(self.peer_requests),
            decisions=dict(self.decisions),
            observed=set(self.observed),
            requests_sent=dict(self.requests_sent),
        )

    def known_facts(self) -> frozenset[Atom]:
        return self.facts | self.vouched | {atom("now", self.now)}

    def disclosed_count(self) -> int:
        return sum(1 for st in self.decisions.values() if st is Status.DISCLOSED)


def new_session(
    ctx: PartyContext,
    role: Role,
    mode: Mode,
    *,
    parent: Optional[str],
    children: Iterable[str] = (),
    session_id: Optional[int] = None,
    now: int = 0,
    round_cap: Optional[int] = None,
) -> SessionState:
    if round_cap is None:
        round_cap = round_cap_for(len(ctx.vault))
    return SessionState(
        ctx=ctx,
        role=role,
        mode=mode,
        session_id=new_session_id() if session_id is None else session_id,
        parent=parent,
        children=tuple(children),
        now=now,
        round_cap=round_cap,
    )


class EagerStrategy:
    """Disclose everything releasable now; request everything still missing."""

    name = "eager"

    def respond(self, s: SessionState, peer: str) -> tuple[list[CredentialState], list[Atom]]:
        """Decide on every credential matching ``peer``'s open requests.

        Updates the session's decision bookkeeping in place and returns the
        credential states to report plus the patterns ``peer`` must prove first.
        """
        states: list[CredentialState] = []
        require: set[Atom] = set()
        handled: set[CredentialId] = set()
        facts = s.known_facts()
        for pattern in sorted_atoms(s.peer_requests.get(peer, ())):
            for cred in s.ctx.vault.matching(pattern):
                if cred.id in handled or (peer, cred.id) in s.disclosed_to:
                    continue
                handled.add(cred.id)
                prev = s.decisions.get((peer, cred.id), Status.REQUESTED)
                if prev is Status.DENIED:
                    continue
                decision = disclosure_decision(s.ctx.vault, s.ctx.disclosure, cred.id, peer, facts)
                if isinstance(decision, Release):
                    new = Status.DISCLOSED
                elif isinstance(decision, RequireFirst):
                    new = Status.PENDING
                    require.update(decision.requirements)
                else:
                    new = Status.DENIED
                if new == prev:
                    continue
                s.decisions[(peer, cred.id)] = new
                s.progress += 1
                if new is Status.DISCLOSED:
                    s.disclosed_to.add((peer, cred.id))
                    states.append(CredentialState(cred.id, new, cred.id.owner, cred))
                else:
                    states.append(CredentialState(cred.id, new, cred.id.owner))
            # Credentials collected from elsewhere in this session are relayed as-is.
            for cid in sorted(s.received):
                cred = s.received[cid]
                if cid in handled or (peer, cid) in s.disclosed_to or s.received_from[cid] == peer:
                    continue
                if cred.matches(pattern):
                    handled.add(cid)
                    s.disclosed_to.add((peer, cid))
                    states.append(CredentialState(cid, Status.DISCLOSED, cid.owner, cred))
        return states, sorted_atoms(require)

    def wanted(self, s: SessionState) -> dict[Atom, set[str]]:
        """Patterns to ask children for, with the parties that need each one."""
        out: dict[Atom, set[str]] = defaultdict(set)
        for p in s.goal_requirements:
            out[p].add(s.party)
        for peer, patterns in s.peer_requests.items():
            for p in patterns:
                if s.ctx.vault.matching(p):
                    continue
                if any(c.matches(p) for c in s.received.values()):
                    continue
                out[p].add(peer)
        return out

    def requests_for_child(self, s: SessionState, child: str) -> list[Atom]:
        return sorted_atoms(p for p, who in self.wanted(s).items() if who - {child} and not _vouched(s, p))


EAGER = EagerStrategy()


def _vouched(s: SessionState, pattern: Atom) -> bool:
    return any(unify(pattern, v) is not None for v in s.vouched)


def _compose(s: SessionState, peer: str, *, round_: int) -> NegotiationMessage:
    states, require = s.strategy.respond(s, peer)
    requests = set(require)
    if peer in s.children:
        requests.update(s.strategy.requests_for_child(s, peer))
    progress = 0
    if peer == s.parent:
        progress, s.progress = s.progress, 0
    reqs = tuple(sorted_atoms(requests))
    s.requests_sent[peer] = frozenset(reqs)
    return NegotiationMessage(
        session_id=s.session_id,
        sender=s.party,
        recipient=peer,
        round=round_,
        credential_states=tuple(states),
        requests=reqs,
        progress=progress,
    )


def _notify_targets(s: SessionState, source: Optional[str]) -> list[str]:
    if s.parent is not None:
        return [s.parent] if s.parent != source else []
    # The coordinator tells the client, which owns the access request.
    client = s.access_request.requester if s.access_request else None
    return [client] if client in s.children and client != source else []


def _terminate(
    s: SessionState, outcome: Outcome, source: Optional[str] = None
) -> tuple[SessionState, list[NegotiationMessage]]:
    s.outcome = outcome
    s.awaiting = frozenset()
    targets = _notify_targets(s, source)
    if not targets:
        return s, []
    s.round += 1
    if isinstance(outcome, Success):
        ps, grant = SUCCEEDED, outcome.grant
    else:
        ps, grant = failed(outcome.reason), None
    msgs = [
        NegotiationMessage(s.session_id, s.party, t, s.round, process_state=ps, grant=grant, progress=0)
        for t in targets
    ]
    return s, msgs


def start_negotiation(
    client: SessionState, request: AccessRequest
) -> tuple[SessionState, NegotiationMessage]:
    """Open a negotiation: round-0 message from the client to the resource server."""
    if client.role is not Role.CLIENT:
        raise ValueError("only a client session can start a negotiation")
    if not isinstance(request, AccessRequest):
        request = AccessRequest(*request)
    if client.access_request is not None:
        raise ValueError("a session carries exactly one access request")
    if client.parent is None:
        raise ValueError("client session has no resource server")
    s = client.copy()
    s.access_request = request
    msg = NegotiationMessage(
        session_id=s.session_id,
        sender=s.party,
        recipient=s.parent,
        round=0,
        process_state=OPEN,
        access_request=request,
    )
    return s, msg


def _coordinator_round(s: SessionState) -> tuple[SessionState, list[NegotiationMessage]]:
    assert s.access_request is not None and s.ctx.authz is not None
    s.round += 1
    goal = s.access_request.goal()
    facts = s.known_facts()
    if query(s.ctx.authz, facts, goal):
        grant = Grant(s.session_id, frozenset(s.facts | s.vouched), s.now)
        s.round -= 1  # _terminate advances the round for the grant message
        return _terminate(s, Success(grant))
    if s.round > s.round_cap:
        s.round -= 1
        return _terminate(s, Failure(FailureReason.ROUND_CAP))
    if s.detect_deadlock and s.round >= 2 and s.progress == 0:
        s.round -= 1
        return _terminate(s, Failure(FailureReason.DEADLOCK))
    missing = unsatisfied_requirements(s.ctx.authz, facts, goal)
    s.goal_requirements = frozenset(p for p in missing if not _vouched(s, p))
    if not s.goal_requirements:
        s.round -= 1
        return _terminate(s, Failure(FailureReason.DENIED))
    msgs = [_compose(s, c, round_=s.round) for c in s.children]
    # Only what the children do with this round's messages counts as progress:
    # a decision of ours that nobody can act on changes nothing.
    s.progress = 0
    s.awaiting = frozenset(s.children)
    return s, msgs


def step(
    state: SessionState, incoming: NegotiationMessage
) -> tuple[SessionState, list[NegotiationMessage]]:
    """Apply one incoming message; returns the new state and the messages to send.

    ``state`` itself is never modified. Errors leave no trace: a mismatched
    session, an unknown peer or a replayed round raises before any change.
    """
    if incoming.session_id != state.session_id:
        raise SessionMismatch(f"message for session {incoming.session_id:#x}, state is {state.session_id:#x}")
    sender = incoming.sender
    if incoming.recipient != state.party or sender not in state.peers:
        raise UnexpectedPeer(f"{sender} -> {incoming.recipient} is not part of this session at {state.party}")
    if incoming.round <= state.last_seen.get(sender, -1):
        raise StaleRound(f"round {incoming.round} from {sender} already seen")

    s = state.copy()
    s.last_seen[sender] = incoming.round
    if s.outcome.terminal:
        return s, []

    fresh: list[Credential] = []
    for cs in incoming.credential_states:
        if cs.status is Status.DISCLOSED:
            try:
                verify(cs.value, s.ctx.directory, s.now)
            except CredentialError:
                return _terminate(s, Failure(FailureReason.VERIFICATION))
            if cs.id not in s.received and all(c.id != cs.id for c in fresh):
                fresh.append(cs.value)
        else:
            # The owner already counted this decision; recording it is enough.
            s.observed.add((sender, cs.id, cs.status))
    new_facts = set(s.facts)
    for cred in fresh:
        s.received[cred.id] = cred
        s.received_from[cred.id] = sender
        new_facts.update(cred.facts())
        s.progress += 1
    s.facts = frozenset(new_facts)
    s.progress += incoming.progress
    s.peer_requests[sender] = frozenset(incoming.requests)

    ps = incoming.process_state
    if ps.terminal:
        if ps.kind == "succeeded":
            if incoming.grant is None:
                raise ValueError("succeeded message without a grant")
            return _terminate(s, Success(incoming.grant), source=sender)
        return _terminate(s, Failure(ps.reason), source=sender)

    started = False
    if incoming.access_request is not None and s.role is Role.RESOURCE_SERVER and s.access_request is None:
        if incoming.access_request.requester != sender:
            raise UnexpectedPeer(f"{sender} cannot request access on behalf of {incoming.access_request.requester}")
        s.access_request = incoming.access_request
        s.trust_level = trust_level_evaluate(s.ctx.trust_table, s.ctx.peer_history)
        s.vouched = vouched_facts(s.ctx.trust_table, s.trust_level, sender)
        started = True

    was_awaited = sender in s.awaiting
    s.awaiting = s.awaiting - {sender}
    if s.awaiting:
        return s, []

    if s.role is Role.RESOURCE_SERVER:
        if started or was_awaited:
            return _coordinator_round(s)
        return s, []

    if sender == s.parent:
        if s.children:
            s.round += 1
            batch = []
            for child in s.children:
                msg = _compose_if_news(s, child)
                if msg is not None:
                    batch.append(msg)
            if batch:
                s.awaiting = frozenset(m.recipient for m in batch)
                return s, batch
            s.round -= 1
        s.round += 1
        return s, [_compose(s, s.parent, round_=s.round)]
    if was_awaited:
        s.round += 1
        return s, [_compose(s, s.parent, round_=s.round)]
    return s, []


def _compose_if_news(s: SessionState, child: str) -> Optional[NegotiationMessage]:
    trial = s.copy()
    msg = _compose(trial, child, round_=s.round)
    if not msg.credential_states and frozenset(msg.requests) == s.requests_sent.get(child, frozenset()):
        return None
    # Commit the bookkeeping the trial composition made.
    msg = _compose(s, child, round_=s.round)
    return msg


def outcome(state: SessionState) -> Outcome:
    """Terminal outcome if reached, otherwise what the coordinator's rules say now."""
    if state.outcome.terminal:
        return state.outcome
    if state.role is not Role.RESOURCE_SERVER or state.access_request is None or state.ctx.authz is None:
        return InProgress()
    facts = state.known_facts()
    if query(state.ctx.authz, facts, state.access_request.goal()):
        return Success(Grant(state.session_id, frozenset(state.facts | state.vouched), state.now))
    if state.round > state.round_cap:
        return Failure(FailureReason.ROUND_CAP)
    if state.detect_deadlock and state.round >= 2 and not state.awaiting and state.progress == 0:
        return Failure(FailureReason.DEADLOCK)
    return InProgress()


def resolution_strategy(state: SessionState) -> tuple[list[Credential], list[Atom]]:
    """What the eager strategy would disclose and request from ``state`` right now.

    Pure: works on a copy. Requests cover the coordinator's access goal, the
    patterns peers asked for that this party cannot serve, and the
    prerequisites its own disclosure policy demands, minus vouched patterns.
    """
    s = state.copy()
    if s.role is Role.RESOURCE_SERVER and s.access_request is not None and s.ctx.authz is not None:
        goal = s.access_request.goal()
        facts = s.known_facts()
        if not query(s.ctx.authz, facts, goal):
            s.goal_requirements = frozenset(unsatisfied_requirements(s.ctx.authz, facts, goal))
    disclosures: dict[CredentialId, Credential] = {}
    requests: set[Atom] = set()
    for peer in sorted(s.peer_requests):
        states, require = s.strategy.respond(s, peer)
        for cs in states:
            if cs.status is Status.DISCLOSED:
                disclosures.setdefault(cs.id, cs.value)
        requests.update(require)
    requests.update(s.strategy.wanted(s))
    requests = {p for p in requests if not _vouched(s, p)}
    return [disclosures[k] for k in sorted(disclosures)], sorted_atoms(requests)
