"""Mapping between negotiation values and canonical CBOR.

Integer-keyed maps throughout:

* message: ``{1 session_id, 2 sender, 3 recipient, 4 round, 5 credential
  states, 6 requests, 7 process state}`` plus optional ``8 access request``,
  ``9 grant`` and ``10 progress`` (omitted when absent / zero)
* credential: the signed payload map ``{1..7}`` plus ``8 signature``
* credential state: ``{1 [owner, index], 2 status, 3 owner, 4 credential}``
* term: ``[kind, value]`` with kind 0 var, 1 symbol, 2 integer, 3 string
* atom: ``[predicate, [term, ...]]``
* process state: ``[0]`` open, ``[1]`` succeeded, ``[2, reason]`` failed
"""

from __future__ import annotations

from typing import Any

from soter.codec.cbor import DecodeError, decode, encode
from soter.credential import Credential, CredentialId
from soter.negotiation.types import (
    AccessRequest,
    CredentialState,
    FailureReason,
    Grant,
    NegotiationMessage,
    ProcessState,
    Status,
)
from soter.policy import Atom, Int, Str, Sym, Term, Var, sorted_atoms


class WireError(DecodeError):
    """Well-formed CBOR that does not describe a valid negotiation value."""

    reason = "Malformed"


_TERM_KINDS = {Var: 0, Sym: 1, Int: 2, Str: 3}


def _need(cond: bool, what: str) -> None:
    if not cond:
        raise WireError(what)


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def term_value(t: Term) -> list:
    kind = _TERM_KINDS[type(t)]
    return [kind, t.value if kind >= 2 else t.name]


def term_from_value(v: Any) -> Term:
    _need(isinstance(v, list) and len(v) == 2 and _is_int(v[0]), "term must be [kind, value]")
    kind, payload = v
    try:
        if kind == 0 and isinstance(payload, str):
            return Var(payload)
        if kind == 1 and isinstance(payload, str):
            return Sym(payload)
        if kind == 2 and _is_int(payload):
            return Int(payload)
        if kind == 3 and isinstance(payload, str):
            return Str(payload)
    except ValueError as exc:
        raise WireError(f"bad term: {exc}") from exc
    raise WireError(f"bad term kind {kind!r} for {type(payload).__name__}")


def atom_value(a: Atom) -> list:
    return [a.predicate, [term_value(t) for t in a.args]]


def atom_from_value(v: Any) -> Atom:
    _need(isinstance(v, list) and len(v) == 2, "atom must be [predicate, args]")
    pred, args = v
    _need(isinstance(pred, str) and isinstance(args, list), "atom fields have wrong types")
    try:
        return Atom(pred, tuple(term_from_value(t) for t in args))
    except ValueError as exc:
        raise WireError(f"bad atom: {exc}") from exc


def credential_value(c: Credential) -> dict:
    m = c.payload_value()
    m[8] = c.signature
    return m


def credential_from_value(v: Any) -> Credential:
    _need(isinstance(v, dict) and set(v) == set(range(1, 9)), "credential must be a map with keys 1..8")
    owner, index, issuer, subject, attrs, nb, na, sig = (v[k] for k in range(1, 9))
    _need(all(isinstance(x, str) for x in (owner, issuer, subject)), "credential party ids must be text")
    _need(all(_is_int(x) for x in (index, nb, na)), "credential index/validity must be integers")
    _need(isinstance(sig, bytes), "credential signature must be bytes")
    _need(isinstance(attrs, list), "credential attributes must be an array")
    items = []
    for pair in attrs:
        _need(
            isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str)
            and (isinstance(pair[1], str) or _is_int(pair[1])),
            "attribute must be [name, int|text]",
        )
        items.append((pair[0], pair[1]))
    return Credential(CredentialId(owner, index), issuer, subject, tuple(items), nb, na, sig)


def encode_credential(c: Credential) -> bytes:
    return encode(credential_value(c))


def decode_credential(data: bytes) -> Credential:
    return credential_from_value(decode(data))


def state_value(s: CredentialState) -> dict:
    m: dict = {1: [s.id.owner, s.id.index], 2: int(s.status), 3: s.owner}
    if s.value is not None:
        m[4] = credential_value(s.value)
    return m


def state_from_value(v: Any) -> CredentialState:
    _need(isinstance(v, dict) and set(v) in ({1, 2, 3}, {1, 2, 3, 4}), "credential state keys must be 1..3[,4]")
    cid, status, owner = v[1], v[2], v[3]
    _need(isinstance(cid, list) and len(cid) == 2 and isinstance(cid[0], str) and _is_int(cid[1]), "bad credential id")
    _need(_is_int(status) and status in Status._value2member_map_, "bad credential status")
    _need(isinstance(owner, str), "credential owner must be text")
    value = credential_from_value(v[4]) if 4 in v else None
    try:
        return CredentialState(CredentialId(cid[0], cid[1]), Status(status), owner, value)
    except ValueError as exc:
        raise WireError(str(exc)) from exc


def process_value(p: ProcessState) -> list:
    if p.kind == "open":
        return [0]
    if p.kind == "succeeded":
        return [1]
    return [2, p.reason.value]


def process_from_value(v: Any) -> ProcessState:
    _need(isinstance(v, list) and v and _is_int(v[0]), "process state must be [code, ...]")
    if v == [0]:
        return ProcessState("open")
    if v == [1]:
        return ProcessState("succeeded")
    _need(len(v) == 2 and v[0] == 2 and isinstance(v[1], str), "bad process state")
    try:
        return ProcessState("failed", FailureReason(v[1]))
    except ValueError as exc:
        raise WireError(f"unknown failure reason {v[1]!r}") from exc


def grant_value(g: Grant) -> dict:
    return {1: g.session_id, 2: [atom_value(a) for a in sorted_atoms(g.facts)], 3: g.issued_at}


def grant_from_value(v: Any) -> Grant:
    _need(isinstance(v, dict) and set(v) == {1, 2, 3}, "grant must be a map with keys 1..3")
    _need(_is_int(v[1]) and _is_int(v[3]) and isinstance(v[2], list), "grant fields have wrong types")
    return Grant(v[1], frozenset(atom_from_value(a) for a in v[2]), v[3])


def message_value(m: NegotiationMessage) -> dict:
    out: dict = {
        1: m.session_id,
        2: m.sender,
        3: m.recipient,
        4: m.round,
        5: [state_value(s) for s in m.credential_states],
        6: [atom_value(a) for a in m.requests],
        7: process_value(m.process_state),
    }
    if m.access_request is not None:
        r = m.access_request
        out[8] = [r.requester, r.action, r.resource]
    if m.grant is not None:
        out[9] = grant_value(m.grant)
    if m.progress:
        out[10] = m.progress
    return out


def message_from_value(v: Any) -> NegotiationMessage:
    _need(isinstance(v, dict), "message must be a map")
    keys = set(v)
    _need(set(range(1, 8)) <= keys <= set(range(1, 11)), "message keys must be 1..7 plus optional 8..10")
    _need(_is_int(v[1]) and _is_int(v[4]), "session id and round must be integers")
    _need(isinstance(v[2], str) and isinstance(v[3], str), "sender/recipient must be text")
    _need(isinstance(v[5], list) and isinstance(v[6], list), "states/requests must be arrays")
    request = None
    if 8 in v:
        r = v[8]
        _need(isinstance(r, list) and len(r) == 3 and all(isinstance(x, str) for x in r), "bad access request")
        try:
            request = AccessRequest(*r)
        except ValueError as exc:
            raise WireError(str(exc)) from exc
    progress = v.get(10, 0)
    _need(_is_int(progress) and (10 not in v or progress > 0), "progress must be a positive integer when present")
    try:
        return NegotiationMessage(
            session_id=v[1],
            sender=v[2],
            recipient=v[3],
            round=v[4],
            credential_states=tuple(state_from_value(s) for s in v[5]),
            requests=tuple(atom_from_value(a) for a in v[6]),
            process_state=process_from_value(v[7]),
            access_request=request,
            grant=grant_from_value(v[9]) if 9 in v else None,
            progress=progress,
        )
    except WireError:
        raise
    except ValueError as exc:
        raise WireError(str(exc)) from exc


def encode_message(m: NegotiationMessage) -> bytes:
    return encode(message_value(m))


def decode_message(data: bytes) -> NegotiationMessage:
    return message_from_value(decode(data))
