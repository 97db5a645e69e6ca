from __future__ import annotations

import socket
from pathlib import Path

import pytest

from soter.policy import Atom, Int, Str, Sym, Var

FIXTURES = Path(__file__).parent / "fixtures"
DATA = Path(__file__).resolve().parents[1] / "src" / "soter" / "data"


def naive_term(t) -> tuple:
    if isinstance(t, Int):
        return ("int", t.value)
    if isinstance(t, Sym):
        return ("sym", t.name)
    if isinstance(t, Str):
        return ("str", t.value)
    assert isinstance(t, Var)
    return ("var", t.name)


def naive_atom(a: Atom) -> tuple:
    return (a.predicate, tuple(naive_term(t) for t in a.args))


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


def udp_available() -> bool:
    try:
        s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        s.bind(("127.0.0.1", 0))
        s.close()
        return True
    except OSError:
        return False
