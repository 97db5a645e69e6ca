"""Canonical CBOR subset: unsigned/negative integers, byte and text strings,
arrays, and maps with integer keys. Definite lengths and shortest-form
heads only; decoding rejects anything else.

Python mapping: ``int``, ``bytes``, ``str``, ``list``/``tuple`` (decoded as
``list``), and ``dict`` with ``int`` keys.
"""

from __future__ import annotations

import struct
from typing import Any

UINT64_MAX = 2**64 - 1
NEGINT_MIN = -(2**64)

MAJOR_UINT = 0
MAJOR_NEGINT = 1
MAJOR_BYTES = 2
MAJOR_TEXT = 3
MAJOR_ARRAY = 4
MAJOR_MAP = 5


class CodecError(ValueError):
    pass


class EncodeError(CodecError):
    pass


class MapKeyCollision(EncodeError):
    pass


class DecodeError(CodecError):
    pass


class Truncated(DecodeError):
    pass


class TrailingBytes(DecodeError):
    pass


class NonCanonical(DecodeError):
    pass


class UnsupportedMajorType(DecodeError):
    pass


def _head(major: int, n: int) -> bytes:
    if n < 24:
        return bytes([(major << 5) | n])
    if n <= 0xFF:
        return bytes([(major << 5) | 24, n])
    if n <= 0xFFFF:
        return bytes([(major << 5) | 25]) + struct.pack(">H", n)
    if n <= 0xFFFFFFFF:
        return bytes([(major << 5) | 26]) + struct.pack(">I", n)
    return bytes([(major << 5) | 27]) + struct.pack(">Q", n)


def _encode(value: Any, out: bytearray) -> None:
    if isinstance(value, bool) or value is None:
        raise EncodeError(f"unsupported value {value!r}")
    if isinstance(value, int):
        if 0 <= value <= UINT64_MAX:
            out += _head(MAJOR_UINT, value)
        elif NEGINT_MIN <= value < 0:
            out += _head(MAJOR_NEGINT, -1 - value)
        else:
            raise EncodeError(f"integer {value} does not fit in 64 bits")
    elif isinstance(value, (bytes, bytearray, memoryview)):
        b = bytes(value)
        out += _head(MAJOR_BYTES, len(b))
        out += b
    elif isinstance(value, str):
        b = value.encode("utf-8")
        out += _head(MAJOR_TEXT, len(b))
        out += b
    elif isinstance(value, (list, tuple)):
        out += _head(MAJOR_ARRAY, len(value))
        for item in value:
            _encode(item, out)
    elif isinstance(value, dict):
        items = []
        for k, v in value.items():
            if isinstance(k, bool) or not isinstance(k, int):
                raise EncodeError(f"map keys must be integers, got {k!r}")
            items.append((encode(k), v))
        items.sort(key=lambda kv: (len(kv[0]), kv[0]))
        for (a, _), (b, _) in zip(items, items[1:]):
            if a == b:
                raise MapKeyCollision(f"duplicate map key {a.hex()}")
        out += _head(MAJOR_MAP, len(items))
        for kb, v in items:
            out += kb
            _encode(v, out)
    else:
        raise EncodeError(f"unsupported type {type(value).__name__}")


def encode(value: Any) -> bytes:
    """Encode ``value`` canonically. Equal values always produce equal bytes."""
    out = bytearray()
    _encode(value, out)
    return bytes(out)


def encode_map_items(items: list[tuple[int, Any]]) -> bytes:
    """Encode a map from an explicit item list so duplicate keys are detectable."""
    keys = [k for k, _ in items]
    if len(set(keys)) != len(keys):
        raise MapKeyCollision(f"duplicate map key in {keys}")
    return encode(dict(items))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise Truncated(f"need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def head(self) -> tuple[int, int]:
        start = self.pos
        initial = self.take(1)[0]
        major, info = initial >> 5, initial & 0x1F
        if major in (6, 7):
            raise UnsupportedMajorType(f"major type {major} at offset {start}")
        if info < 24:
            return major, info
        if info == 24:
            n = self.take(1)[0]
            minimum = 24
        elif info == 25:
            n = struct.unpack(">H", self.take(2))[0]
            minimum = 0x100
        elif info == 26:
            n = struct.unpack(">I", self.take(4))[0]
            minimum = 0x10000
        elif info == 27:
            n = struct.unpack(">Q", self.take(8))[0]
            minimum = 0x100000000
        elif info == 31:
            raise NonCanonical(f"indefinite length at offset {start}")
        else:
            raise NonCanonical(f"reserved additional information {info} at offset {start}")
        if n < minimum:
            raise NonCanonical(f"non-shortest argument encoding at offset {start}")
        return major, n

    def value(self, depth: int = 0) -> Any:
        if depth > 64:
            raise DecodeError("nesting too deep")
        start = self.pos
        major, n = self.head()
        if major == MAJOR_UINT:
            return n
        if major == MAJOR_NEGINT:
            return -1 - n
        if major == MAJOR_BYTES:
            return self.take(n)
        if major == MAJOR_TEXT:
            raw = self.take(n)
            try:
                return raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DecodeError(f"invalid UTF-8 in text string at offset {start}") from exc
        if major == MAJOR_ARRAY:
            if n > len(self.data) - self.pos:
                raise Truncated(f"array of {n} items cannot fit at offset {start}")
            return [self.value(depth + 1) for _ in range(n)]
        # MAJOR_MAP
        if 2 * n > len(self.data) - self.pos:
            raise Truncated(f"map of {n} entries cannot fit at offset {start}")
        out: dict[int, Any] = {}
        prev: bytes | None = None
        for _ in range(n):
            kstart = self.pos
            key = self.value(depth + 1)
            kbytes = self.data[kstart : self.pos]
            if not isinstance(key, int):
                raise UnsupportedMajorType(f"non-integer map key at offset {kstart}")
            if prev is not None and (len(kbytes), kbytes) <= (len(prev), prev):
                raise NonCanonical(f"map keys not strictly ascending at offset {kstart}")
            prev = kbytes
            out[key] = self.value(depth + 1)
        return out


def decode(data: bytes) -> Any:
    """Decode exactly one canonical item from ``data``."""
    r = _Reader(bytes(data))
    if not r.data:
        raise Truncated("empty input")
    value = r.value()
    if r.pos != len(r.data):
        raise TrailingBytes(f"{len(r.data) - r.pos} bytes after the first item")
    return value
