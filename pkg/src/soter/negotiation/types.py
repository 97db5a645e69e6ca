"""Value types shared by the negotiation engine, the wire codec and the harness."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from soter.credential import Credential, CredentialId
from soter.policy import Atom, atom

_PARTY_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")


class NegotiationError(Exception):
    reason = "NegotiationError"


class SessionMismatch(NegotiationError):
    reason = "SessionMismatch"


class StaleRound(NegotiationError):
    reason = "StaleRound"


class UnexpectedPeer(NegotiationError):
    reason = "UnexpectedPeer"


class MalformedRequest(NegotiationError, ValueError):
    reason = "MalformedRequest"


class Activity(enum.Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"


@dataclass(frozen=True)
class Mode:
    """Who collects credentials (Active: the RS, Inactive: the client) and how many CSPs take part."""

    activity: Activity
    csp_count: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.csp_count <= 3:
            raise ValueError(f"csp_count must be 1..3, got {self.csp_count}")

    @property
    def active(self) -> bool:
        return self.activity is Activity.ACTIVE

    @property
    def label(self) -> str:
        return f"{'A' if self.active else 'I'}_C1I{self.csp_count}R1"

    @classmethod
    def parse(cls, text: str) -> "Mode":
        """Parse ``A_C1I2R1`` / ``I_C1I3R1`` style labels."""
        m = re.fullmatch(r"([AI])_C1I([123])R1", text.strip())
        if not m:
            raise ValueError(f"not a mode label: {text!r}")
        return cls(Activity.ACTIVE if m.group(1) == "A" else Activity.INACTIVE, int(m.group(2)))


ALL_MODES = tuple(Mode(a, n) for a in Activity for n in (1, 2, 3))


class Role(enum.Enum):
    CLIENT = "client"
    RESOURCE_SERVER = "rs"
    CSP = "csp"


class Status(enum.IntEnum):
    REQUESTED = 0
    PENDING = 1
    DISCLOSED = 2
    DENIED = 3


_TRANSITIONS = {
    Status.REQUESTED: {Status.PENDING, Status.DISCLOSED, Status.DENIED},
    Status.PENDING: {Status.DISCLOSED, Status.DENIED},
    Status.DISCLOSED: set(),
    Status.DENIED: set(),
}


def can_advance(old: Status, new: Status) -> bool:
    return new == old or new in _TRANSITIONS[old]


@dataclass(frozen=True)
class CredentialState:
    id: CredentialId
    status: Status
    owner: str
    value: Optional[Credential] = None

    def __post_init__(self) -> None:
        if (self.status is Status.DISCLOSED) != (self.value is not None):
            raise ValueError("a credential state carries a value exactly when it is Disclosed")
        if self.value is not None and self.value.id != self.id:
            raise ValueError(f"state for {self.id} carries credential {self.value.id}")


@dataclass(frozen=True)
class AccessRequest:
    requester: str
    action: str
    resource: str

    def __post_init__(self) -> None:
        for name in ("requester", "action", "resource"):
            value = getattr(self, name)
            if not isinstance(value, str) or not _PARTY_RE.match(value):
                raise MalformedRequest(f"access request {name} must be a lower-case identifier, got {value!r}")

    def goal(self) -> Atom:
        return atom("permit", self.requester, self.action, self.resource)


@dataclass(frozen=True)
class Grant:
    """What a successful negotiation hands to the authorization phase."""

    session_id: int
    facts: frozenset[Atom]
    issued_at: int


class FailureReason(str, enum.Enum):
    DEADLOCK = "Deadlock"
    DENIED = "Denied"
    ROUND_CAP = "RoundCapExceeded"
    VERIFICATION = "VerificationFailed"


@dataclass(frozen=True)
class InProgress:
    terminal = False

    def __str__(self) -> str:
        return "InProgress"


@dataclass(frozen=True)
class Success:
    grant: Grant
    terminal = True

    def __str__(self) -> str:
        return "Success"


@dataclass(frozen=True)
class Failure:
    reason: FailureReason
    terminal = True

    def __str__(self) -> str:
        return f"Failure({self.reason.value})"


Outcome = Union[InProgress, Success, Failure]


@dataclass(frozen=True)
class ProcessState:
    kind: str = "open"
    reason: Optional[FailureReason] = None

    def __post_init__(self) -> None:
        if self.kind not in ("open", "succeeded", "failed"):
            raise ValueError(f"unknown process state {self.kind!r}")
        if (self.kind == "failed") != (self.reason is not None):
            raise ValueError("only failed process states carry a reason")

    @property
    def terminal(self) -> bool:
        return self.kind != "open"


OPEN = ProcessState()
SUCCEEDED = ProcessState("succeeded")


def failed(reason: FailureReason) -> ProcessState:
    return ProcessState("failed", reason)


@dataclass(frozen=True)
class NegotiationMessage:
    session_id: int
    sender: str
    recipient: str
    round: int
    credential_states: tuple[CredentialState, ...] = ()
    requests: tuple[Atom, ...] = ()
    process_state: ProcessState = OPEN
    access_request: Optional[AccessRequest] = None
    grant: Optional[Grant] = None
    # credential-state events in the sender's part of the exchange since its last report
    progress: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.session_id < 2**64:
            raise ValueError("session_id must be an unsigned 64-bit value")
        if self.round < 0 or self.progress < 0:
            raise ValueError("round and progress are non-negative")
        object.__setattr__(self, "credential_states", tuple(self.credential_states))
        object.__setattr__(self, "requests", tuple(self.requests))

    def disclosed(self) -> list[Credential]:
        return [cs.value for cs in self.credential_states if cs.status is Status.DISCLOSED]


def party_id_ok(party: str) -> bool:
    return bool(_PARTY_RE.match(party))


__all__ = [
    "ALL_MODES",
    "AccessRequest",
    "Activity",
    "CredentialState",
    "Failure",
    "FailureReason",
    "Grant",
    "InProgress",
    "MalformedRequest",
    "Mode",
    "NegotiationError",
    "NegotiationMessage",
    "OPEN",
    "Outcome",
    "ProcessState",
    "Role",
    "SUCCEEDED",
    "SessionMismatch",
    "StaleRound",
    "Status",
    "Success",
    "UnexpectedPeer",
    "can_advance",
    "failed",
    "party_id_ok",
]
