"""Trust negotiation: session state machines, eager strategy, trust levels, authorization."""

from soter.negotiation.authorize import DenyAccess, Permit, authorize
from soter.negotiation.session import (
    EAGER,
    EagerStrategy,
    PartyContext,
    SessionState,
    new_session,
    new_session_id,
    outcome,
    resolution_strategy,
    round_cap_for,
    start_negotiation,
    step,
)
from soter.negotiation.trust import TrustLevelTable, trust_level_evaluate, vouched_facts
from soter.negotiation.types import *  # noqa: F401,F403
from soter.negotiation.types import __all__ as _types_all

__all__ = [
    "DenyAccess",
    "EAGER",
    "EagerStrategy",
    "PartyContext",
    "Permit",
    "SessionState",
    "TrustLevelTable",
    "authorize",
    "new_session",
    "new_session_id",
    "outcome",
    "resolution_strategy",
    "round_cap_for",
    "start_negotiation",
    "step",
    "trust_level_evaluate",
    "vouched_facts",
    *_types_all,
]
