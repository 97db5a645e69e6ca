"""Sign-then-encrypt envelopes over canonical message bytes.

Wire form: ``[header_bstr, ciphertext_bstr]`` where the header is the
canonical map ``{1: sender, 2: recipient, 3: aead_alg, 4: nonce}``. The
plaintext under ChaCha20-Poly1305 (header bytes as associated data) is
``{1: message, 2: signature}``; the signature covers
``[header_bstr, message]`` so the sender identity is bound inside the
confidential payload.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from soter.codec.cbor import CodecError, decode, encode
from soter.keys import SigningKey, VerifyKey

ALG_CHACHA20_POLY1305 = 24
NONCE_SIZE = 12
KEY_SIZE = 32


class EnvelopeError(Exception):
    reason = "EnvelopeError"


class NonceReuse(EnvelopeError):
    reason = "NonceReuse"


class MalformedEnvelope(EnvelopeError):
    reason = "Malformed"


class HeaderMismatch(EnvelopeError):
    reason = "HeaderMismatch"


class DecryptFailed(EnvelopeError):
    reason = "DecryptFailed"


class SignatureFailed(EnvelopeError):
    reason = "SignatureFailed"


@dataclass(frozen=True)
class Header:
    sender: str
    recipient: str
    nonce: bytes
    alg: int = ALG_CHACHA20_POLY1305

    def to_bytes(self) -> bytes:
        return encode({1: self.sender, 2: self.recipient, 3: self.alg, 4: self.nonce})

    @classmethod
    def from_bytes(cls, data: bytes) -> "Header":
        try:
            m = decode(data)
        except CodecError as exc:
            raise MalformedEnvelope(f"header: {exc}") from exc
        if not isinstance(m, dict) or set(m) != {1, 2, 3, 4}:
            raise MalformedEnvelope("header must be a map with keys 1..4")
        sender, recipient, alg, nonce = m[1], m[2], m[3], m[4]
        if not (isinstance(sender, str) and isinstance(recipient, str)):
            raise MalformedEnvelope("header party ids must be text")
        if not isinstance(alg, int) or not isinstance(nonce, bytes):
            raise MalformedEnvelope("header algorithm/nonce have wrong types")
        return cls(sender, recipient, nonce, alg)


@dataclass(frozen=True)
class SealedEnvelope:
    header: Header
    ciphertext: bytes
    header_bytes: bytes = field(default=b"", compare=False, repr=False)

    def to_bytes(self) -> bytes:
        return encode([self.header_bytes or self.header.to_bytes(), self.ciphertext])

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealedEnvelope":
        try:
            outer = decode(data)
        except CodecError as exc:
            raise MalformedEnvelope(str(exc)) from exc
        if (
            not isinstance(outer, list)
            or len(outer) != 2
            or not all(isinstance(x, bytes) for x in outer)
        ):
            raise MalformedEnvelope("envelope must be [bstr, bstr]")
        return cls(Header.from_bytes(outer[0]), outer[1], outer[0])


class NonceTracker:
    """Remembers nonces already used by each sender; one per session."""

    def __init__(self) -> None:
        self._seen: set[tuple[str, bytes]] = set()

    def claim(self, sender: str, nonce: bytes) -> None:
        key = (sender, bytes(nonce))
        if key in self._seen:
            raise NonceReuse(f"nonce {nonce.hex()} already used by {sender}")
        self._seen.add(key)


def _to_be_signed(header_bytes: bytes, message: bytes) -> bytes:
    return encode([header_bytes, message])


def seal(
    message: bytes,
    signing_key: SigningKey,
    encryption_key: bytes,
    nonce: bytes,
    *,
    sender: str,
    recipient: str,
    tracker: NonceTracker | None = None,
) -> SealedEnvelope:
    if len(nonce) != NONCE_SIZE:
        raise ValueError(f"nonce must be {NONCE_SIZE} bytes")
    if len(encryption_key) != KEY_SIZE:
        raise ValueError(f"encryption key must be {KEY_SIZE} bytes")
    if tracker is not None:
        tracker.claim(sender, nonce)
    header = Header(sender, recipient, bytes(nonce))
    hb = header.to_bytes()
    signature = signing_key.sign(_to_be_signed(hb, message))
    plaintext = encode({1: message, 2: signature})
    ciphertext = ChaCha20Poly1305(encryption_key).encrypt(nonce, plaintext, hb)
    return SealedEnvelope(header, ciphertext, hb)


def open_envelope(
    envelope: SealedEnvelope | bytes,
    decryption_key: bytes,
    sender_key: VerifyKey,
    *,
    expected_sender: str | None = None,
    expected_recipient: str | None = None,
) -> bytes:
    """Decrypt and verify; returns the original message bytes or raises."""
    if isinstance(envelope, (bytes, bytearray)):
        envelope = SealedEnvelope.from_bytes(bytes(envelope))
    h = envelope.header
    if h.alg != ALG_CHACHA20_POLY1305:
        raise HeaderMismatch(f"unsupported AEAD algorithm {h.alg}")
    if len(h.nonce) != NONCE_SIZE:
        raise HeaderMismatch("bad nonce length")
    hb = envelope.header_bytes or h.to_bytes()
    # Authenticate before trusting any header field: the header is the AAD,
    # so an altered sender or recipient fails here rather than as a mismatch.
    try:
        plaintext = ChaCha20Poly1305(decryption_key).decrypt(h.nonce, envelope.ciphertext, hb)
    except (InvalidTag, ValueError) as exc:
        raise DecryptFailed("authentication tag mismatch") from exc
    if expected_sender is not None and h.sender != expected_sender:
        raise HeaderMismatch(f"sender {h.sender!r} != expected {expected_sender!r}")
    if expected_recipient is not None and h.recipient != expected_recipient:
        raise HeaderMismatch(f"recipient {h.recipient!r} != expected {expected_recipient!r}")
    try:
        inner = decode(plaintext)
    except CodecError as exc:
        raise SignatureFailed(f"signed payload malformed: {exc}") from exc
    if not isinstance(inner, dict) or set(inner) != {1, 2}:
        raise SignatureFailed("signed payload must be {1: message, 2: signature}")
    message, signature = inner[1], inner[2]
    if not isinstance(message, bytes) or not isinstance(signature, bytes):
        raise SignatureFailed("signed payload fields must be byte strings")
    if not sender_key.verify(_to_be_signed(hb, message), signature):
        raise SignatureFailed(f"signature does not verify for {h.sender!r}")
    return message
