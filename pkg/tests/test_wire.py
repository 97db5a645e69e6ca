from __future__ import annotations

import cbor2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from soter.codec import decode, encode
from soter.codec.wire import (
    WireError,
    decode_credential,
    decode_message,
    encode_credential,
    encode_message,
    message_value,
)
from soter.credential import CredentialId, issue
from soter.keys import KeyPair
from soter.negotiation import (
    SUCCEEDED,
    AccessRequest,
    CredentialState,
    FailureReason,
    Grant,
    NegotiationMessage,
    Status,
    failed,
)
from soter.policy import Str, atom

SID = 0x0123456789ABCDEF
CSP = KeyPair.derive("csp1", 3)
CRED = issue(CSP, CredentialId("csp1", 1), "client", {"affiliation": "kent_medical"}, (0, 1000))


def golden_messages() -> dict[str, NegotiationMessage]:
    grant_facts = frozenset({atom("credential", "client", "affiliation", "kent_medical")})
    return {
        "start": NegotiationMessage(SID, "client", "rs", 0, access_request=AccessRequest("client", "read", "rec1")),
        "request": NegotiationMessage(
            SID, "rs", "csp1", 1, requests=(atom("credential", "client", "affiliation", "kent_medical"),)
        ),
        "disclosure": NegotiationMessage(
            SID, "csp1", "rs", 1, credential_states=(CredentialState(CRED.id, Status.DISCLOSED, "csp1", CRED),), progress=1
        ),
        "pending": NegotiationMessage(
            SID, "client", "rs", 2,
            credential_states=(CredentialState(CredentialId("client", 2), Status.PENDING, "client"),),
            requests=(atom("credential", "rs", "role", "hospital"),),
        ),
        "denied": NegotiationMessage(
            SID, "client", "rs", 3, credential_states=(CredentialState(CredentialId("client", 3), Status.DENIED, "client"),)
        ),
        "succeeded": NegotiationMessage(SID, "rs", "client", 2, process_state=SUCCEEDED, grant=Grant(SID, grant_facts, 50)),
        "failed": NegotiationMessage(SID, "rs", "client", 4, process_state=failed(FailureReason.DEADLOCK)),
        "terms": NegotiationMessage(
            SID, "rs", "client", 5, requests=(atom("q", "X", -3, Str("two words"), 2**40),)
        ),
    }


def _golden() -> dict[str, str]:
    out = {}
    for line in (FIXTURES / "wire_golden.txt").read_text().splitlines():
        if line and not line.startswith("#"):
            name, hexed = line.split()
            out[name] = hexed
    return out


class TestGolden:
    @pytest.mark.parametrize("name", sorted(golden_messages()))
    def test_encoding_frozen(self, name):
        assert encode_message(golden_messages()[name]).hex() == _golden()[name]

    @pytest.mark.parametrize("name", sorted(golden_messages()))
    def test_decode_fixture(self, name):
        assert decode_message(bytes.fromhex(_golden()[name])) == golden_messages()[name]

    def test_credential_frozen(self):
        assert encode_credential(CRED).hex() == _golden()["credential"]


class TestLayout:
    def test_message_keys(self):
        v = message_value(golden_messages()["request"])
        assert sorted(v) == [1, 2, 3, 4, 5, 6, 7]
        assert (v[1], v[2], v[3], v[4]) == (SID, "rs", "csp1", 1)
        assert v[7] == [0]

    def test_independent_decoder(self):
        # cbor2 reads every golden message to the same structure.
        for name, m in golden_messages().items():
            raw = encode_message(m)
            assert cbor2.loads(raw) == message_value(m), name

    def test_credential_signature_covers_payload(self):
        v = decode(encode_credential(CRED))
        assert v[8] == CRED.signature
        del v[8]
        assert encode(v) == CRED.payload()

    def test_credential_round_trip(self):
        assert decode_credential(encode_credential(CRED)) == CRED


class TestMalformed:
    @pytest.mark.parametrize(
        "value",
        [
            [],
            {1: 1},
            {1: 1, 2: "a", 3: "b", 4: 0, 5: [], 6: [], 7: [9]},
            {1: 1, 2: "a", 3: "b", 4: 0, 5: [], 6: [], 7: [0], 11: 0},
            {1: 1, 2: "a", 3: "b", 4: 0, 5: [], 6: [], 7: [0], 10: 0},
            {1: 1, 2: "a", 3: "b", 4: 0, 5: [], 6: [[1, []]], 7: [0]},
            {1: 1, 2: "a", 3: "b", 4: 0, 5: [], 6: [["p", [[7, "x"]]]], 7: [0]},
            {1: 1, 2: "a", 3: "b", 4: 0, 5: [], 6: [], 7: [0], 8: ["client", "", "rec1"]},
            {1: 1, 2: "a", 3: "b", 4: 0, 5: [{1: ["x", 1], 2: 2, 3: "x"}], 6: [], 7: [0]},
            {1: 1, 2: 5, 3: "b", 4: 0, 5: [], 6: [], 7: [0]},
        ],
    )
    def test_rejected(self, value):
        with pytest.raises(WireError):
            decode_message(encode(value))


atoms = st.builds(
    lambda p, args: atom(p, *args),
    st.sampled_from(["credential", "p", "now"]),
    st.lists(
        st.one_of(
            st.sampled_from(["X", "Y", "alice", "role"]),
            st.integers(-(2**63), 2**63 - 1),
            st.text(alphabet="ab c", min_size=1, max_size=5),
        ),
        min_size=1,
        max_size=3,
    ),
)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(0, 2**64 - 1),
    st.integers(0, 1000),
    st.lists(atoms, max_size=4),
    st.integers(0, 5),
    st.sampled_from([None, ("client", "read", "rec1")]),
)
def test_message_round_trip(sid, rnd, reqs, progress, access):
    m = NegotiationMessage(
        sid, "client", "rs", rnd, requests=tuple(reqs), progress=progress,
        access_request=AccessRequest(*access) if access else None,
    )
    assert decode_message(encode_message(m)) == m


def write_golden() -> None:
    """Regenerate the fixture file (only when the wire format changes on purpose)."""
    lines = ["# name hex; canonical encodings of representative negotiation messages"]
    for name, m in sorted(golden_messages().items()):
        lines.append(f"{name} {encode_message(m).hex()}")
    lines.append(f"credential {encode_credential(CRED).hex()}")
    (FIXTURES / "wire_golden.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    write_golden()
