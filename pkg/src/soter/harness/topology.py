"""Node and link layout for the six communication modes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from soter.negotiation.types import Activity, Mode, Role

CLIENT = "client"
RS = "rs"


class InvalidCspCount(ValueError):
    pass


def csp_id(i: int) -> str:
    return f"csp{i}"


@dataclass(frozen=True)
class Topology:
    mode: Mode
    nodes: tuple[tuple[str, Role], ...]
    links: frozenset[frozenset[str]]

    @property
    def party_ids(self) -> tuple[str, ...]:
        return tuple(sorted(p for p, _ in self.nodes))

    @property
    def csps(self) -> tuple[str, ...]:
        return tuple(p for p, r in self.nodes if r is Role.CSP)

    def role_of(self, party: str) -> Role:
        for p, r in self.nodes:
            if p == party:
                return r
        raise KeyError(party)

    def linked(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.links

    def parent_of(self, party: str) -> Optional[str]:
        role = self.role_of(party)
        if role is Role.RESOURCE_SERVER:
            return None
        if role is Role.CLIENT:
            return RS
        return RS if self.mode.active else CLIENT

    def children_of(self, party: str) -> tuple[str, ...]:
        role = self.role_of(party)
        if role is Role.RESOURCE_SERVER:
            return (CLIENT,) + (self.csps if self.mode.active else ())
        if role is Role.CLIENT and not self.mode.active:
            return self.csps
        return ()

    def display_order(self) -> tuple[str, ...]:
        """Client, RS, then the CSPs in index order."""
        return (CLIENT, RS) + self.csps


def build_topology(mode: Union[Mode, Activity, str], csp_count: Optional[int] = None) -> Topology:
    """Topology for ``mode``; ``mode`` may also be an activity plus ``csp_count``."""
    if isinstance(mode, Mode):
        activity, count = mode.activity, mode.csp_count if csp_count is None else csp_count
    else:
        activity = mode if isinstance(mode, Activity) else Activity(str(mode).lower())
        count = 1 if csp_count is None else csp_count
    if isinstance(count, bool) or not isinstance(count, int) or not 1 <= count <= 3:
        raise InvalidCspCount(f"csp_count must be 1, 2 or 3, got {count!r}")
    m = Mode(activity, count)
    csps = tuple(csp_id(i) for i in range(1, count + 1))
    nodes = ((CLIENT, Role.CLIENT), (RS, Role.RESOURCE_SERVER)) + tuple((c, Role.CSP) for c in csps)
    hub = RS if m.active else CLIENT
    links = {frozenset((CLIENT, RS))} | {frozenset((hub, c)) for c in csps}
    return Topology(m, nodes, frozenset(links))
