"""Scenario descriptions: what every party holds, how it discloses, what the RS demands.

A :class:`Scenario` is plain data. :func:`load_scenario` reads one from a JSON
document; :func:`reference_scenario` builds the shipped reference case for any
mode; :func:`materialize` turns one into keys, vaults and policies for a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from soter.credential import (
    Credential,
    CredentialError,
    CredentialId,
    CredentialVault,
    DisclosurePolicyVault,
    issue,
    parse_disclosure_policy,
)
from soter.harness.topology import CLIENT, RS, InvalidCspCount, Topology, build_topology, csp_id
from soter.keys import ALG_EDDSA, KeyPair, PublicKeyDirectory
from soter.negotiation.trust import TrustLevelTable
from soter.negotiation.types import AccessRequest, Activity, MalformedRequest, Mode
from soter.policy import PRELUDES, PolicyError, PolicyProgram, load_policy


class ConfigurationError(Exception):
    """A scenario that cannot be run: bad document, missing file, bad policy."""


@dataclass(frozen=True)
class CredentialSpec:
    index: int
    subject: str
    attributes: tuple[tuple[str, Union[int, str]], ...]
    issuer: Optional[str] = None  # defaults to the holder
    not_before: int = 0
    not_after: int = 1000
    # Signed with the holder's own key while naming ``issuer``: a forgery.
    forged: bool = False


@dataclass(frozen=True)
class PartySpec:
    credentials: tuple[CredentialSpec, ...] = ()
    policy_text: str = ""
    preludes: tuple[str, ...] = ()
    # Only meaningful on the RS: trust tiers and what the client proved before.
    trust_table: tuple[tuple[int, tuple[tuple[str, Union[int, str]], ...]], ...] = ()
    history: tuple[tuple[str, Union[int, str]], ...] = ()


@dataclass(frozen=True)
class AdversarySpec:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    activation: int = 1


@dataclass(frozen=True)
class Scenario:
    mode: Mode
    request: AccessRequest
    rs_policy_text: str
    rs_preludes: tuple[str, ...] = ()
    parties: Mapping[str, PartySpec] = field(default_factory=dict)
    seed: int = 0
    now: int = 50
    authorities: tuple[str, ...] = ()
    adversary: Optional[AdversarySpec] = None
    name: str = "scenario"

    @property
    def topology(self) -> Topology:
        return build_topology(self.mode)

    def party(self, pid: str) -> PartySpec:
        return self.parties.get(pid, PartySpec())

    def with_trust(self, table, history) -> "Scenario":
        parties = dict(self.parties)
        parties[RS] = replace(self.party(RS), trust_table=tuple(table), history=tuple(history))
        return replace(self, parties=parties)

    def total_credentials(self) -> int:
        return sum(len(p.credentials) for p in self.parties.values())


@dataclass
class Materialized:
    """Everything the runner needs, derived deterministically from a scenario and seed."""

    topology: Topology
    keys: dict[str, KeyPair]
    directory: PublicKeyDirectory
    vaults: dict[str, CredentialVault]
    disclosure: dict[str, DisclosurePolicyVault]
    authz: PolicyProgram
    trust_table: TrustLevelTable
    history: frozenset


def _policy(text: str, preludes: tuple[str, ...], where: str, disclosure: bool = False) -> PolicyProgram:
    for p in preludes:
        if p not in PRELUDES:
            raise ConfigurationError(f"{where}: unknown prelude {p!r}")
    try:
        if disclosure:
            return parse_disclosure_policy(text, preludes)
        return load_policy(text, preludes)
    except PolicyError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def materialize(scenario: Scenario, seed: Optional[int] = None) -> Materialized:
    seed = scenario.seed if seed is None else seed
    topo = scenario.topology
    ids = set(topo.party_ids)
    unknown = set(scenario.parties) - ids
    if unknown:
        raise ConfigurationError(f"parties not in the {topo.mode.label} topology: {sorted(unknown)}")
    signers = sorted(ids | set(scenario.authorities))
    keys = {p: KeyPair.derive(p, seed, ALG_EDDSA) for p in signers}
    directory = PublicKeyDirectory({p: keys[p].verify for p in signers})

    vaults: dict[str, CredentialVault] = {}
    disclosure: dict[str, DisclosurePolicyVault] = {}
    for pid in topo.party_ids:
        spec = scenario.party(pid)
        vault = CredentialVault(pid)
        for cs in spec.credentials:
            issuer = cs.issuer or pid
            if issuer not in keys and not cs.forged:
                raise ConfigurationError(f"{pid}: credential {cs.index} issuer {issuer!r} has no key")
            signer = keys[pid] if cs.forged else keys[issuer]
            try:
                cred = issue(signer, CredentialId(pid, cs.index), cs.subject, cs.attributes, (cs.not_before, cs.not_after))
                if cs.forged:
                    cred = replace(cred, issuer=issuer)
                vault.add(cred)
            except (CredentialError, ValueError) as exc:
                raise ConfigurationError(f"{pid}: credential {cs.index}: {exc}") from exc
        vaults[pid] = vault
        try:
            disclosure[pid] = DisclosurePolicyVault(pid, _policy(spec.policy_text, spec.preludes, f"{pid} policy", True))
        except ValueError as exc:
            raise ConfigurationError(f"{pid} policy: {exc}") from exc

    rs = scenario.party(RS)
    try:
        table = TrustLevelTable.from_spec(rs.trust_table)
    except ValueError as exc:
        raise ConfigurationError(f"rs trust table: {exc}") from exc
    return Materialized(
        topology=topo,
        keys=keys,
        directory=directory,
        vaults=vaults,
        disclosure=disclosure,
        authz=_policy(scenario.rs_policy_text, scenario.rs_preludes, "rs_policy"),
        trust_table=table,
        history=frozenset(rs.history),
    )


# --- JSON scenario documents ------------------------------------------------


def _read_text(base: Path, rel: str, what: str) -> str:
    path = (base / rel) if not Path(rel).is_absolute() else Path(rel)
    try:
        return path.read_text("utf-8")
    except OSError as exc:
        raise ConfigurationError(f"{what}: cannot read {path}: {exc.strerror or exc}") from exc


def _attr_pairs(obj: Any, where: str) -> tuple:
    if isinstance(obj, Mapping):
        items = list(obj.items())
    elif isinstance(obj, list):
        items = [tuple(x) for x in obj]
    else:
        raise ConfigurationError(f"{where}: attributes must be an object or a list of pairs")
    for item in items:
        if len(item) != 2:
            raise ConfigurationError(f"{where}: attribute entries are [name, value] pairs")
    return tuple((str(n), v) for n, v in items)


def _credential(obj: Any, where: str) -> CredentialSpec:
    if not isinstance(obj, Mapping):
        raise ConfigurationError(f"{where}: credential must be an object")
    try:
        validity = obj.get("validity", [0, 1000])
        return CredentialSpec(
            index=int(obj["index"]),
            subject=str(obj["subject"]),
            attributes=_attr_pairs(obj["attributes"], where),
            issuer=obj.get("issuer"),
            not_before=int(validity[0]),
            not_after=int(validity[1]),
            forged=bool(obj.get("forged", False)),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigurationError(f"{where}: bad credential entry ({exc})") from exc


def _party(obj: Any, base: Path, pid: str) -> PartySpec:
    if not isinstance(obj, Mapping):
        raise ConfigurationError(f"parties.{pid} must be an object")
    if "policy" in obj and "policy_text" in obj:
        raise ConfigurationError(f"parties.{pid}: give either policy or policy_text")
    text = _read_text(base, obj["policy"], f"parties.{pid}.policy") if "policy" in obj else obj.get("policy_text", "")
    creds = tuple(_credential(c, f"parties.{pid}.credentials[{i}]") for i, c in enumerate(obj.get("credentials", [])))
    table = tuple(
        (int(level), _attr_pairs(attrs, f"parties.{pid}.trust_table"))
        for level, attrs in obj.get("trust_table", [])
    )
    return PartySpec(
        credentials=creds,
        policy_text=text,
        preludes=tuple(obj.get("preludes", ())),
        trust_table=table,
        history=_attr_pairs(obj.get("history", []), f"parties.{pid}.history"),
    )


def _adversary(obj: Any) -> Optional[AdversarySpec]:
    if obj is None:
        return None
    if not isinstance(obj, Mapping) or "kind" not in obj:
        raise ConfigurationError("adversary must be an object with a kind")
    params = {k: v for k, v in obj.items() if k not in ("kind", "activation")}
    return AdversarySpec(str(obj["kind"]), params, int(obj.get("activation", 1)))


def scenario_from_dict(doc: Mapping[str, Any], base: Union[str, Path] = ".", name: str = "scenario") -> Scenario:
    """Build a scenario from a parsed document; relative paths resolve against ``base``."""
    base = Path(base)
    if not isinstance(doc, Mapping):
        raise ConfigurationError("scenario document must be an object")
    try:
        mode = Mode(Activity(str(doc["mode"]).lower()), 1)
    except KeyError as exc:
        raise ConfigurationError("scenario needs a mode ('active' or 'inactive')") from exc
    except ValueError as exc:
        raise ConfigurationError(f"mode must be 'active' or 'inactive', got {doc['mode']!r}") from exc
    try:
        topo = build_topology(mode, doc.get("csp_count", 1))
    except InvalidCspCount as exc:
        raise ConfigurationError(str(exc)) from exc
    try:
        request = AccessRequest(*doc.get("request", [CLIENT, "read", "rec1"]))
    except (TypeError, MalformedRequest) as exc:
        raise ConfigurationError(f"request: {exc}") from exc
    if "rs_policy" in doc:
        rs_text = _read_text(base, doc["rs_policy"], "rs_policy")
    elif "rs_policy_text" in doc:
        rs_text = doc["rs_policy_text"]
    else:
        raise ConfigurationError("scenario needs rs_policy (path) or rs_policy_text")
    parties = {pid: _party(p, base, pid) for pid, p in doc.get("parties", {}).items()}
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    scenario = Scenario(
        mode=topo.mode,
        request=request,
        rs_policy_text=rs_text,
        rs_preludes=tuple(doc.get("rs_preludes", ())),
        parties=parties,
        seed=seed,
        now=int(doc.get("now", 50)),
        authorities=tuple(doc.get("authorities", ())),
        adversary=_adversary(doc.get("adversary")),
        name=str(doc.get("name", name)),
    )
    materialize(scenario)  # surface policy and credential errors at load time
    return scenario


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc, path.parent, name=path.stem)


# --- the reference case -----------------------------------------------------

REFERENCE_ATTRIBUTES = (
    ("affiliation", "kent_medical"),
    ("role", "physician"),
    ("device", "class2"),
)

REFERENCE_TRUST_TABLE = (
    (0, ()),
    (1, (("device", "class2"),)),
    (2, (("device", "class2"), ("role", "physician"))),
)

_REFERENCE_BODY = (
    "credential(R, affiliation, kent_medical)",
    "credential(R, role, Role), role_within(Role, clinician)",
    "credential(R, device, C), class_at_least(C, class1)",
)


def reference_policy(csp_count: int) -> str:
    """RS authorization policy demanding one client attribute per CSP."""
    body = ", ".join(_REFERENCE_BODY[:csp_count])
    return f"permit(R, read, rec1) :- {body}, now(T), T <= 1000.\n"


def reference_scenario(
    mode: Union[Mode, str] = "I_C1I2R1", *, seed: int = 7, trust_level: Optional[int] = None
) -> Scenario:
    """Each CSP holds one attribute credential about the client and releases it freely.

    ``trust_level`` pre-loads the RS with a client history that reaches that
    tier of :data:`REFERENCE_TRUST_TABLE`.
    """
    if isinstance(mode, str):
        mode = Mode.parse(mode)
    parties: dict[str, PartySpec] = {CLIENT: PartySpec()}
    for i in range(1, mode.csp_count + 1):
        name, value = REFERENCE_ATTRIBUTES[i - 1]
        parties[csp_id(i)] = PartySpec(
            credentials=(CredentialSpec(1, CLIENT, ((name, value),)),),
            policy_text="release(I, R).\n",
        )
    history: tuple = ()
    if trust_level is not None:
        history = dict(REFERENCE_TRUST_TABLE)[trust_level]
    parties[RS] = PartySpec(trust_table=REFERENCE_TRUST_TABLE, history=history)
    return Scenario(
        mode=mode,
        request=AccessRequest(CLIENT, "read", "rec1"),
        rs_policy_text=reference_policy(mode.csp_count),
        rs_preludes=("hipaa", "iomt"),
        parties=parties,
        seed=seed,
        now=50,
        name=f"reference_{mode.label}",
    )


def credential_total(m: Materialized) -> int:
    return sum(len(v) for v in m.vaults.values())


def all_credentials(m: Materialized) -> list[Credential]:
    return [c for v in m.vaults.values() for c in v]
