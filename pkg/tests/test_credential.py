from __future__ import annotations

import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soter.credential import (
    BadSignature,
    CredentialId,
    CredentialVault,
    Deny,
    DisclosurePolicyVault,
    EmptyAttributes,
    Expired,
    InvalidValidity,
    NoSuchCredential,
    NotYetValid,
    Release,
    RequireFirst,
    UnknownIssuer,
    disclosure_decision,
    issue,
    parse_disclosure_policy,
    verify,
)
from soter.keys import KeyPair, PublicKeyDirectory
from soter.policy import atom, evaluate

ISSUER = KeyPair.derive("dev1", 11)
DIRECTORY = PublicKeyDirectory({"dev1": ISSUER.verify})


def _cred(index=1, subject="alice", attrs=None, validity=(0, 100)):
    return issue(ISSUER, CredentialId("dev1", index), subject, attrs or {"role": "physician"}, validity)


class TestIssueVerify:
    def test_round_trip(self):
        verify(_cred(), DIRECTORY, 50)

    @pytest.mark.parametrize("now", [0, 100])
    def test_window_inclusive(self, now):
        verify(_cred(), DIRECTORY, now)

    def test_expired(self):
        with pytest.raises(Expired):
            verify(_cred(), DIRECTORY, 101)

    def test_not_yet_valid(self):
        with pytest.raises(NotYetValid):
            verify(_cred(validity=(10, 20)), DIRECTORY, 9)

    def test_invalid_validity(self):
        with pytest.raises(InvalidValidity):
            _cred(validity=(10, 5))

    def test_empty_attributes(self):
        with pytest.raises(EmptyAttributes):
            issue(ISSUER, CredentialId("dev1", 1), "alice", {}, (0, 1))

    def test_unknown_issuer(self):
        with pytest.raises(UnknownIssuer):
            verify(_cred(), PublicKeyDirectory(), 50)

    def test_deterministic(self):
        a, b = _cred(), _cred()
        assert a.payload() == b.payload() and a.signature == b.signature

    def test_payload_layout(self):
        c = _cred()
        assert c.payload_value() == {
            1: "dev1", 2: 1, 3: "dev1", 4: "alice", 5: [["role", "physician"]], 6: 0, 7: 100,
        }

    def test_each_payload_byte_flip(self):
        c = _cred()
        payload = c.payload()
        key = DIRECTORY["dev1"]
        for i in range(len(payload)):
            buf = bytearray(payload)
            buf[i] ^= 0x01
            assert not key.verify(bytes(buf), c.signature)

    def test_facts(self):
        c = _cred(attrs={"role": "physician", "ward": 3})
        assert c.facts() == [atom("credential", "alice", "role", "physician"), atom("credential", "alice", "ward", 3)]


class TestUnforgeability:
    def test_forgery_corpus(self):
        rng = random.Random(42)
        genuine = [_cred(i, rng.choice(["alice", "bob"]), {"role": rng.choice(["nurse", "physician"])}) for i in range(1, 21)]
        accepted = 0
        for n in range(1000):
            kind = n % 4
            base = rng.choice(genuine)
            if kind == 0:
                forged = replace(base, signature=rng.randbytes(64))
            elif kind == 1:
                wrong = KeyPair.derive("dev1", rng.randbytes(8))
                forged = issue(wrong, base.id, base.subject, {"role": "surgeon"}, (0, 100))
            elif kind == 2:
                other = rng.choice([g for g in genuine if g.attributes != base.attributes or g.subject != base.subject])
                forged = replace(base, subject=other.subject, attributes=other.attributes)
                if forged.payload() == base.payload():
                    forged = replace(forged, not_after=base.not_after + 1)
            else:
                forged = replace(base, not_after=base.not_after + rng.randint(1, 1000))
            try:
                verify(forged, DIRECTORY, 50)
                accepted += 1
            except (BadSignature, UnknownIssuer):
                pass
        assert accepted == 0


class TestVault:
    def test_owner_enforced(self):
        v = CredentialVault("dev2")
        with pytest.raises(ValueError):
            v.add(_cred())

    def test_lookup(self):
        v = CredentialVault("dev1", [_cred(1), _cred(2)])
        assert v.get(CredentialId("dev1", 2)).id.index == 2
        with pytest.raises(NoSuchCredential):
            v.get(CredentialId("dev1", 3))
        assert [c.id.index for c in v] == [1, 2]

    def test_duplicate(self):
        with pytest.raises(ValueError):
            CredentialVault("dev1", [_cred(1), _cred(1)])

    def test_matching(self):
        v = CredentialVault("dev1", [_cred(1), _cred(2, attrs={"role": "nurse"})])
        assert [c.id.index for c in v.matching(atom("credential", "alice", "role", "R"))] == [1, 2]
        assert [c.id.index for c in v.matching(atom("credential", "X", "role", "nurse"))] == [2]


VAULT = CredentialVault("dev1", [_cred(1), _cred(2), _cred(7)])


def _decide(policy_text: str, index: int, facts=()):
    policy = DisclosurePolicyVault.from_text("dev1", policy_text)
    return disclosure_decision(VAULT, policy, CredentialId("dev1", index), "rs", facts)


class TestDisclosure:
    def test_unconditional(self):
        d = _decide("release(1,R).", 1)
        assert isinstance(d, Release) and d.credential.id.index == 1

    def test_require_first(self):
        d = _decide("release(2,R) :- credential(R,role,physician).", 2)
        assert d == RequireFirst((atom("credential", "rs", "role", "physician"),))

    def test_require_first_satisfied(self):
        d = _decide("release(2,R) :- credential(R,role,physician).", 2, [atom("credential", "rs", "role", "physician")])
        assert isinstance(d, Release)

    def test_facts_about_someone_else_do_not_count(self):
        d = _decide("release(2,R) :- credential(R,role,physician).", 2, [atom("credential", "eve", "role", "physician")])
        assert isinstance(d, RequireFirst)

    def test_default_deny(self):
        assert _decide("release(1,R).", 7) == Deny()

    def test_empty_policy_denies(self):
        assert _decide("", 1) == Deny()

    def test_wildcard_index(self):
        assert isinstance(_decide("release(I, R).", 7), Release)

    def test_requester_specific(self):
        assert isinstance(_decide("release(1, rs).", 1), Release)
        assert _decide("release(1, client).", 1) == Deny()

    def test_not_owned(self):
        policy = DisclosurePolicyVault.from_text("dev1", "release(I, R).")
        with pytest.raises(NoSuchCredential):
            disclosure_decision(VAULT, policy, CredentialId("dev2", 1), "rs")

    def test_missing_credential(self):
        policy = DisclosurePolicyVault.from_text("dev1", "release(I, R).")
        with pytest.raises(NoSuchCredential):
            disclosure_decision(VAULT, policy, CredentialId("dev1", 5), "rs")

    def test_bad_release_arity(self):
        with pytest.raises(ValueError):
            DisclosurePolicyVault.from_text("dev1", "release(1).")

    def test_with_prelude(self):
        text = "release(1, R) :- credential(R, role, Role), role_within(Role, clinician)."
        d = disclosure_decision(
            VAULT,
            DisclosurePolicyVault("dev1", parse_disclosure_policy(text, ("hipaa",))),
            CredentialId("dev1", 1),
            "rs",
            [atom("credential", "rs", "role", "nurse")],
        )
        assert isinstance(d, Release)

    @settings(max_examples=100, deadline=None)
    @given(
        st.sampled_from(
            [
                "release(1, R) :- credential(R, role, physician).",
                "release(1, R) :- credential(R, role, physician), credential(R, ward, icu).",
                "release(I, R) :- credential(R, ward, W), W != er.",
                "release(1, R).",
                "release(2, R).",
            ]
        ),
        st.sets(st.sampled_from([("role", "physician"), ("role", "nurse"), ("ward", "icu"), ("ward", "er")])),
        st.sets(st.sampled_from([("role", "physician"), ("ward", "icu"), ("ward", "ward7")])),
    )
    def test_monotone_and_sound(self, text, base, more):
        before = [atom("credential", "rs", n, v) for n, v in sorted(base)]
        after = before + [atom("credential", "rs", n, v) for n, v in sorted(more)]
        d1, d2 = _decide(text, 1, before), _decide(text, 1, after)
        if isinstance(d1, Release):
            assert isinstance(d2, Release)
        if isinstance(d2, Release):
            policy = DisclosurePolicyVault.from_text("dev1", text)
            facts = after + [atom("held", 1), atom("requester", "rs")]
            assert atom("release", 1, "rs") in evaluate(policy.program, facts)
