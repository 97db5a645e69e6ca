"""Datagram transports: the deterministic in-memory queue and an optional localhost UDP backend."""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from typing import Iterable, Protocol


@dataclass(frozen=True)
class Datagram:
    src: str
    dst: str
    data: bytes
    seq: int
    # "legit" for protocol traffic, "adversary" for injected or replayed copies
    origin: str = "legit"
    tampered: bool = False

    @property
    def legit(self) -> bool:
        return self.origin == "legit"


class Transport(Protocol):
    def send(self, datagrams: Iterable[Datagram]) -> None: ...

    def collect(self) -> list[Datagram]:
        """Everything sent since the last call, in delivery order."""
        ...

    def close(self) -> None: ...


def delivery_order(datagrams: Iterable[Datagram]) -> list[Datagram]:
    """Receivers in party-id order; per receiver, senders in id order, each link FIFO."""
    return sorted(datagrams, key=lambda d: (d.dst, d.src, d.seq))


class InMemoryTransport:
    def __init__(self) -> None:
        self._queue: list[Datagram] = []

    def send(self, datagrams: Iterable[Datagram]) -> None:
        self._queue.extend(datagrams)

    def collect(self) -> list[Datagram]:
        out, self._queue = delivery_order(self._queue), []
        return out

    def close(self) -> None:
        self._queue = []


class UdpTransport:
    """One localhost UDP socket per party.

    Packets carry a 4-byte sequence number ahead of the envelope so the
    harness can reattach its bookkeeping; ordering across sockets follows
    :func:`delivery_order` once a batch has fully arrived.
    """

    def __init__(self, parties: Iterable[str], timeout: float = 2.0) -> None:
        self.timeout = timeout
        self._socks: dict[str, socket.socket] = {}
        self._addr: dict[str, tuple[str, int]] = {}
        self._pending: dict[int, Datagram] = {}
        for p in parties:
            self._ensure(p)

    def _ensure(self, party: str) -> socket.socket:
        if party not in self._socks:
            s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            s.bind(("127.0.0.1", 0))
            s.settimeout(self.timeout)
            self._socks[party] = s
            self._addr[party] = s.getsockname()
        return self._socks[party]

    def send(self, datagrams: Iterable[Datagram]) -> None:
        for d in datagrams:
            src = self._ensure(d.src)
            self._ensure(d.dst)
            self._pending[d.seq] = d
            src.sendto(struct.pack(">I", d.seq) + d.data, self._addr[d.dst])

    def collect(self) -> list[Datagram]:
        want: dict[str, int] = {}
        for d in self._pending.values():
            want[d.dst] = want.get(d.dst, 0) + 1
        got: list[Datagram] = []
        for dst, n in want.items():
            sock = self._socks[dst]
            for _ in range(n):
                try:
                    packet, _ = sock.recvfrom(65536)
                except socket.timeout:
                    break
                (seq,) = struct.unpack(">I", packet[:4])
                meta = self._pending.get(seq)
                if meta is not None:
                    got.append(Datagram(meta.src, dst, packet[4:], seq, meta.origin, meta.tampered))
        self._pending = {}
        return delivery_order(got)

    def close(self) -> None:
        for s in self._socks.values():
            s.close()
        self._socks.clear()
