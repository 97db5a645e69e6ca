"""Trust levels: declarative tiers that vouch for attributes a peer has proven before."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from soter.credential import AttrValue
from soter.policy import Atom, atom, const

AttrPair = tuple[str, AttrValue]


@dataclass(frozen=True)
class TrustLevelTable:
    levels: tuple[tuple[int, frozenset[AttrPair]], ...] = ()

    def __post_init__(self) -> None:
        levels = tuple((int(lvl), frozenset(v)) for lvl, v in self.levels)
        object.__setattr__(self, "levels", levels)
        for (a, va), (b, vb) in zip(levels, levels[1:]):
            if b <= a:
                raise ValueError(f"trust levels must be strictly increasing ({a} then {b})")
            if not va <= vb:
                raise ValueError(f"level {b} must vouch for everything level {a} does")
        if levels and levels[0][0] < 0:
            raise ValueError("trust levels are non-negative")

    @classmethod
    def from_spec(cls, spec: Iterable[tuple[int, Iterable[AttrPair]]]) -> "TrustLevelTable":
        return cls(tuple((lvl, frozenset((n, v) for n, v in attrs)) for lvl, attrs in spec))

    def vouched(self, level: int) -> frozenset[AttrPair]:
        out: frozenset[AttrPair] = frozenset()
        for lvl, attrs in self.levels:
            if lvl <= level:
                out = attrs
        return out


def trust_level_evaluate(table: TrustLevelTable, peer_history: Iterable[AttrPair]) -> int:
    """Highest level whose vouched attributes all appear in the peer's history (0 if none)."""
    history = set(peer_history)
    best = 0
    for lvl, attrs in table.levels:
        if attrs <= history:
            best = max(best, lvl)
    return best


def vouched_facts(table: TrustLevelTable, level: int, peer: str) -> frozenset[Atom]:
    return frozenset(atom("credential", const(peer), const(n), const(v)) for n, v in table.vouched(level))
