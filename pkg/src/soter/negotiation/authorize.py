"""Phase II: authorize an action against the facts a successful negotiation granted."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from soter.negotiation.types import AccessRequest, Grant
from soter.policy import PolicyProgram, atom, query


@dataclass(frozen=True)
class Permit:
    def __str__(self) -> str:
        return "Permit"


@dataclass(frozen=True)
class DenyAccess:
    def __str__(self) -> str:
        return "Deny"


Decision = Union[Permit, DenyAccess]


def authorize(
    authz: PolicyProgram,
    grant: Grant,
    request: AccessRequest,
    now: Optional[int] = None,
) -> Decision:
    """Permit iff ``permit(requester, action, resource)`` follows from the grant.

    Logical time defaults to the moment the grant was issued.
    """
    t = grant.issued_at if now is None else now
    facts = set(grant.facts) | {atom("now", t)}
    return Permit() if query(authz, facts, request.goal()) else DenyAccess()
