"""Credentials, credential vaults, and the disclosure decision."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

from soter.codec.cbor import encode
from soter.keys import KeyPair, PublicKeyDirectory
from soter.policy import (
    Atom,
    Int,
    PolicyProgram,
    Var,
    atom,
    const,
    load_policy,
    parse_program,
    query,
    unify,
    unsatisfied_requirements,
)

AttrValue = Union[int, str]


class CredentialError(Exception):
    reason = "CredentialError"


class EmptyAttributes(CredentialError):
    reason = "EmptyAttributes"


class InvalidValidity(CredentialError):
    reason = "InvalidValidity"


class UnknownIssuer(CredentialError):
    reason = "UnknownIssuer"


class BadSignature(CredentialError):
    reason = "BadSignature"


class Expired(CredentialError):
    reason = "Expired"


class NotYetValid(CredentialError):
    reason = "NotYetValid"


class NoSuchCredential(CredentialError):
    reason = "NoSuchCredential"


@dataclass(frozen=True, order=True)
class CredentialId:
    """``owner`` holds the credential; ``index`` numbers it within the owner's vault."""

    owner: str
    index: int

    def __str__(self) -> str:
        return f"C[{self.owner}#{self.index}]"


def _attr_items(attrs: Mapping[str, AttrValue] | Iterable[tuple[str, AttrValue]]) -> tuple:
    items = list(attrs.items()) if isinstance(attrs, Mapping) else list(attrs)
    for name, value in items:
        if not isinstance(name, str) or not name:
            raise ValueError(f"attribute names must be non-empty text, got {name!r}")
        if isinstance(value, bool) or not isinstance(value, (int, str)):
            raise ValueError(f"attribute {name!r} has unsupported value {value!r}")
    names = [n for n, _ in items]
    if len(set(names)) != len(names):
        raise ValueError("duplicate attribute names")
    return tuple(sorted(items))


@dataclass(frozen=True)
class Credential:
    id: CredentialId
    issuer: str
    subject: str
    attributes: tuple[tuple[str, AttrValue], ...]
    not_before: int
    not_after: int
    signature: bytes = field(default=b"", repr=False)

    def payload_value(self) -> dict:
        return {
            1: self.id.owner,
            2: self.id.index,
            3: self.issuer,
            4: self.subject,
            5: [[n, v] for n, v in self.attributes],
            6: self.not_before,
            7: self.not_after,
        }

    def payload(self) -> bytes:
        """Canonical bytes covered by the signature."""
        return encode(self.payload_value())

    @property
    def attribute_map(self) -> dict[str, AttrValue]:
        return dict(self.attributes)

    def facts(self) -> list[Atom]:
        return [atom("credential", const(self.subject), const(n), const(v)) for n, v in self.attributes]

    def matches(self, pattern: Atom) -> bool:
        return any(unify(pattern, f) is not None for f in self.facts())


def issue(
    issuer_key: KeyPair,
    id: CredentialId,
    subject: str,
    attrs: Mapping[str, AttrValue] | Iterable[tuple[str, AttrValue]],
    validity: tuple[int, int],
) -> Credential:
    items = _attr_items(attrs)
    if not items:
        raise EmptyAttributes("a credential needs at least one attribute")
    not_before, not_after = validity
    if not_before > not_after:
        raise InvalidValidity(f"not_before {not_before} > not_after {not_after}")
    unsigned = Credential(id, issuer_key.party, subject, items, not_before, not_after)
    sig = issuer_key.signing.sign(unsigned.payload())
    return Credential(id, issuer_key.party, subject, items, not_before, not_after, sig)


def verify(cred: Credential, directory: PublicKeyDirectory, now: int) -> None:
    """Raise unless ``cred`` is authentic and valid at logical time ``now``."""
    key = directory.get(cred.issuer)
    if key is None:
        raise UnknownIssuer(f"issuer {cred.issuer!r} is not in the key directory")
    if not key.verify(cred.payload(), cred.signature):
        raise BadSignature(f"{cred.id} signature does not verify under {cred.issuer!r}")
    if now < cred.not_before:
        raise NotYetValid(f"{cred.id} valid from {cred.not_before}, now {now}")
    if now > cred.not_after:
        raise Expired(f"{cred.id} expired at {cred.not_after}, now {now}")


class CredentialVault:
    """Credentials held by one party, keyed by id."""

    def __init__(self, owner: str, credentials: Iterable[Credential] = ()):
        self.owner = owner
        self._creds: dict[CredentialId, Credential] = {}
        for c in credentials:
            self.add(c)

    def add(self, cred: Credential) -> None:
        if cred.id.owner != self.owner:
            raise ValueError(f"{cred.id} does not belong to vault of {self.owner!r}")
        if cred.id in self._creds:
            raise ValueError(f"duplicate credential {cred.id}")
        self._creds[cred.id] = cred

    def get(self, cid: CredentialId) -> Credential:
        try:
            return self._creds[cid]
        except KeyError:
            raise NoSuchCredential(f"{cid} not in vault of {self.owner!r}") from None

    def __contains__(self, cid: CredentialId) -> bool:
        return cid in self._creds

    def __iter__(self) -> Iterator[Credential]:
        return iter(sorted(self._creds.values(), key=lambda c: c.id))

    def __len__(self) -> int:
        return len(self._creds)

    def matching(self, pattern: Atom) -> list[Credential]:
        return [c for c in self if c.matches(pattern)]


# In ``release(Index, Requester)`` heads an unbound Index ranges over the
# requested credential and an unbound Requester over whoever is asking.
DISCLOSURE_GUARDS = {("release", 2): ("held", "requester")}


def parse_disclosure_policy(text: str, preludes: tuple[str, ...] = ()) -> PolicyProgram:
    """Parse a disclosure policy; ``release(1, R).`` means release to anyone."""
    if preludes:
        return load_policy(text, preludes, guards=DISCLOSURE_GUARDS)
    return parse_program(text, DISCLOSURE_GUARDS)


@dataclass(frozen=True)
class DisclosurePolicyVault:
    owner: str
    program: PolicyProgram = PolicyProgram()

    @classmethod
    def from_text(cls, owner: str, text: str, preludes: tuple[str, ...] = ()) -> "DisclosurePolicyVault":
        return cls(owner, parse_disclosure_policy(text, preludes))

    def __post_init__(self) -> None:
        heads = [r.head for r in self.program.rules] + list(self.program.facts)
        for h in heads:
            if h.predicate == "release" and h.arity != 2:
                raise ValueError(f"release/{h.arity} head; disclosure rules use release(Index, Requester)")

    def mentions(self, index: int) -> bool:
        """True when some release/2 rule or fact could cover credential ``index``."""
        heads = [r.head for r in self.program.rules] + list(self.program.facts)
        return any(
            h.signature == ("release", 2) and (isinstance(h.args[0], Var) or h.args[0] == Int(index))
            for h in heads
        )


@dataclass(frozen=True)
class Release:
    credential: Credential


@dataclass(frozen=True)
class Deny:
    pass


@dataclass(frozen=True)
class RequireFirst:
    requirements: tuple[Atom, ...]


Decision = Union[Release, Deny, RequireFirst]


def disclosure_decision(
    vault: CredentialVault,
    policy: DisclosurePolicyVault,
    requested: CredentialId,
    requester: str,
    session_facts: Iterable[Atom] = (),
) -> Decision:
    """Decide whether ``requester`` may receive credential ``requested`` now.

    Unmentioned credentials are denied. Otherwise the credential is released
    when ``release(index, requester)`` is derivable from the session facts, and
    the missing credential patterns are returned when it is not.
    """
    if requested.owner != vault.owner:
        raise NoSuchCredential(f"{requested} is not owned by {vault.owner!r}")
    cred = vault.get(requested)
    if not policy.mentions(requested.index):
        return Deny()
    facts = list(session_facts) + [atom("held", requested.index), atom("requester", const(requester))]
    goal = Atom("release", (Int(requested.index), const(requester)))
    if query(policy.program, facts, goal):
        return Release(cred)
    missing = unsatisfied_requirements(policy.program, facts, goal)
    if missing:
        return RequireFirst(tuple(missing))
    return Deny()


__all__ = [
    "AttrValue",
    "BadSignature",
    "Credential",
    "CredentialError",
    "CredentialId",
    "CredentialVault",
    "Decision",
    "Deny",
    "DISCLOSURE_GUARDS",
    "DisclosurePolicyVault",
    "EmptyAttributes",
    "Expired",
    "InvalidValidity",
    "NoSuchCredential",
    "NotYetValid",
    "Release",
    "RequireFirst",
    "UnknownIssuer",
    "disclosure_decision",
    "issue",
    "parse_disclosure_policy",
    "verify",
]
