"""Canonical CBOR encoding and sealed envelopes.

The message/credential wire mapping lives in :mod:`soter.codec.wire`, which is
kept out of this namespace because it depends on the negotiation types.
"""

from soter.codec.cbor import (
    CodecError,
    DecodeError,
    EncodeError,
    MapKeyCollision,
    NonCanonical,
    TrailingBytes,
    Truncated,
    UnsupportedMajorType,
    decode,
    encode,
    encode_map_items,
)
from soter.codec.envelope import (
    ALG_CHACHA20_POLY1305,
    DecryptFailed,
    EnvelopeError,
    Header,
    HeaderMismatch,
    MalformedEnvelope,
    NonceReuse,
    NonceTracker,
    SealedEnvelope,
    SignatureFailed,
    open_envelope,
    seal,
)

__all__ = [
    "ALG_CHACHA20_POLY1305",
    "CodecError",
    "DecodeError",
    "DecryptFailed",
    "EncodeError",
    "EnvelopeError",
    "Header",
    "HeaderMismatch",
    "MalformedEnvelope",
    "MapKeyCollision",
    "NonCanonical",
    "NonceReuse",
    "NonceTracker",
    "SealedEnvelope",
    "SignatureFailed",
    "TrailingBytes",
    "Truncated",
    "UnsupportedMajorType",
    "decode",
    "encode",
    "encode_map_items",
    "open_envelope",
    "seal",
]
