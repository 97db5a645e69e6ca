"""Random scenario generation for termination and soundness sweeps."""

from __future__ import annotations

import random
from typing import Optional

from soter.harness.scenario import CredentialSpec, PartySpec, Scenario
from soter.harness.topology import CLIENT, RS, csp_id
from soter.negotiation.types import ALL_MODES, AccessRequest, Mode

ATTR_NAMES = ("role", "affiliation", "device", "clearance")
ATTR_VALUES = ("v0", "v1", "v2")
AUTHORITY = "registry"


def _attr(rng: random.Random) -> tuple[str, str]:
    return rng.choice(ATTR_NAMES), rng.choice(ATTR_VALUES)


def random_scenario(
    rng: random.Random,
    *,
    max_credentials: int = 8,
    mode: Optional[Mode] = None,
    favourable: bool = False,
) -> Scenario:
    """A scenario with up to ``max_credentials`` credentials and random disclosure rules.

    Disclosure rules are unconditional, conditioned on one credential of the
    requester (which may form cycles), or absent. With ``favourable`` the RS
    only asks for attributes some credential about the client carries and
    most rules are unconditional, so many runs succeed.
    """
    mode = mode or rng.choice(ALL_MODES)
    holders = [CLIENT, RS] + [csp_id(i) for i in range(1, mode.csp_count + 1)]
    n = rng.randint(1, max_credentials)
    creds: dict[str, list[CredentialSpec]] = {h: [] for h in holders}
    rules: dict[str, list[str]] = {h: [] for h in holders}
    about_client: list[tuple[str, str]] = []
    for _ in range(n):
        holder = rng.choice(holders)
        index = len(creds[holder]) + 1
        subject = RS if holder == RS else CLIENT
        attr = _attr(rng)
        issuer = holder if holder.startswith("csp") else AUTHORITY
        expired = rng.random() < (0.03 if favourable else 0.08)
        creds[holder].append(CredentialSpec(index, subject, (attr,), issuer, 0, 10 if expired else 1000))
        if subject == CLIENT:
            about_client.append(attr)
        roll = rng.random()
        if roll < (0.75 if favourable else 0.45):
            rules[holder].append(f"release({index}, R).")
        elif roll < 0.9:
            name, value = _attr(rng)
            rules[holder].append(f"release({index}, R) :- credential(R, {name}, {value}).")
        # otherwise no rule: default deny

    def body() -> str:
        k = rng.randint(1, 2)
        pool = about_client if (favourable and about_client) else None
        atoms = []
        for _ in range(k):
            name, value = rng.choice(pool) if pool else _attr(rng)
            atoms.append(f"credential(R, {name}, {value})")
        if rng.random() < 0.5:
            atoms.append("now(T), T <= 1000")
        return ", ".join(atoms)

    rs_rules = [f"permit(R, read, rec1) :- {body()}." for _ in range(rng.choice((1, 1, 2)))]
    parties = {
        h: PartySpec(credentials=tuple(creds[h]), policy_text="\n".join(rules[h]) + "\n") for h in holders
    }
    return Scenario(
        mode=mode,
        request=AccessRequest(CLIENT, "read", "rec1"),
        rs_policy_text="\n".join(rs_rules) + "\n",
        parties=parties,
        seed=rng.getrandbits(32),
        now=50,
        authorities=(AUTHORITY,),
        name="random",
    )
