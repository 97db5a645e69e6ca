"""Random value generators shared by the codec property tests and the acceptance suite."""

from __future__ import annotations

import random

from hypothesis import strategies as st

INT_EDGES = (0, 1, 23, 24, 255, 256, 65535, 65536, 2**32 - 1, 2**32, 2**64 - 1, -1, -24, -25, -256, -257, -(2**64))


def random_value(rng: random.Random, depth: int = 0):
    """A random value inside the supported CBOR subset."""
    kinds = ["uint", "nint", "bytes", "text"]
    if depth < 3:
        kinds += ["array", "map"]
    kind = rng.choice(kinds)
    if kind == "uint":
        return rng.choice(INT_EDGES[:11]) if rng.random() < 0.3 else rng.randrange(0, 2 ** rng.choice((5, 8, 16, 32, 64)))
    if kind == "nint":
        return rng.choice(INT_EDGES[11:]) if rng.random() < 0.3 else -1 - rng.randrange(0, 2 ** rng.choice((5, 8, 16, 32, 64)))
    if kind == "bytes":
        return rng.randbytes(rng.choice((0, 1, 5, 23, 24, 300)))
    if kind == "text":
        alphabet = "aZ09 _\"\\üé水𐅑"
        return "".join(rng.choice(alphabet) for _ in range(rng.choice((0, 1, 4, 30))))
    n = rng.randint(0, 5)
    if kind == "array":
        return [random_value(rng, depth + 1) for _ in range(n)]
    keys = {rng.choice((rng.randrange(-30, 30), rng.randrange(-(2**40), 2**40))) for _ in range(n)}
    return {k: random_value(rng, depth + 1) for k in keys}


ints = st.integers(-(2**64), 2**64 - 1)
leaves = ints | st.binary(max_size=40) | st.text(max_size=20)
values = st.recursive(
    leaves,
    lambda children: st.lists(children, max_size=5) | st.dictionaries(ints, children, max_size=5),
    max_leaves=20,
)
