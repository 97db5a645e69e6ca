"""Threat catalog: STRIDE categories mapped onto the harness adversaries that exercise them."""

from __future__ import annotations

from dataclasses import dataclass

from soter.harness.topology import CLIENT, RS, csp_id
from soter.negotiation.types import Mode


@dataclass(frozen=True)
class Threat:
    category: str
    attack: str
    # which compromised element the attack tree starts from: client, csp, rs or network
    tree: str
    adversary: str
    mitigation: str


CATALOG: tuple[Threat, ...] = (
    Threat("Spoofing", "pose as the client towards a CSP to pull its credentials", "client", "spoof",
           "per-link channel keys: the impostor cannot produce a ciphertext the CSP accepts"),
    Threat("Spoofing", "pose as the client towards the resource server", "client", "spoof",
           "per-link channel keys and sender signatures inside the envelope"),
    Threat("Spoofing", "pose as the resource server and hand the client a fake grant", "rs", "spoof",
           "per-link channel keys and sender signatures inside the envelope"),
    Threat("Spoofing", "pose as a CSP with a leaked channel key", "csp", "spoof",
           "sender signature checked against the key directory"),
    Threat("Tampering", "alter a message in flight", "network", "tamper",
           "authenticated encryption with the header bound as associated data"),
    Threat("Tampering", "re-send an earlier message", "network", "replay",
           "per-sender round numbers; stale rounds are refused"),
    Threat("Information Disclosure", "sniff the flows between client, CSPs and resource server", "network",
           "eavesdrop", "every datagram is encrypted end to end on its link"),
    Threat("Elevation of Privilege", "an unregistered node joins the negotiation", "network", "rogue",
           "only parties in the key directory can open or be opened"),
    Threat("Elevation of Privilege", "present a self-signed credential under a CSP's name", "client", "forge",
           "credential signatures verified before any attribute becomes a fact"),
)

CATEGORIES = tuple(dict.fromkeys(t.category for t in CATALOG))


def flows(mode: Mode) -> list[tuple[str, str]]:
    """Directed data flows an attacker on the network could touch in ``mode``."""
    hub = RS if mode.active else CLIENT
    pairs = [(CLIENT, RS)] + [(hub, csp_id(i)) for i in range(1, mode.csp_count + 1)]
    return [d for a, b in pairs for d in ((a, b), (b, a))]


def threats_for(category: str) -> list[Threat]:
    return [t for t in CATALOG if t.category == category]
