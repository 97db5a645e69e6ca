"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line straight to the
terminal (past pytest's capture) and checks its own runtime budget.
"""

from __future__ import annotations

import random
import time
from contextlib import contextmanager

import pytest

from generators import random_value
from oracles import naive_fixpoint, random_program
from test_cbor import APPENDIX_A
from test_policy import _engine_fixpoint
from soter.codec import DecodeError, NonCanonical, decode, encode
from soter.harness.corpus import default_corpus
from soter.harness.metrics import export_metrics
from soter.harness.randomized import random_scenario
from soter.harness.runner import run_scenario
from soter.harness.scenario import materialize, reference_scenario
from soter.negotiation import Permit, Success, authorize
from soter.negotiation.types import ALL_MODES, Mode

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(capsys, number: int, title: str, budget: float):
    start = time.perf_counter()
    detail = {"text": ""}
    ok = False
    try:
        yield detail
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        within = elapsed < budget
        verdict = "PASS" if ok and within else "FAIL"
        with capsys.disabled():
            note = f" {detail['text']}" if detail["text"] else ""
            print(f"\ncriterion {number}: {verdict} {title} ({elapsed:.2f}s of {budget:g}s){note}")
    assert within, f"criterion {number} took {elapsed:.2f}s, budget {budget}s"


def test_1_mode_traffic_law(capsys):
    with criterion(capsys, 1, "mode traffic law, 6 modes", 5.0) as d:
        bad = []
        for mode in ALL_MODES:
            m = run_scenario(reference_scenario(mode)).metrics
            for i in range(1, mode.csp_count + 1):
                forbidden = ("client" if mode.active else "rs", f"csp{i}")
                if m.link_count(*forbidden):
                    bad.append((mode.label, forbidden))
        d["text"] = f"violations={len(bad)}"
        assert bad == []


def test_2_client_busiest(capsys):
    with criterion(capsys, 2, "client datagram count is the maximum in I_C1I2R1", 1.0) as d:
        nodes = run_scenario(reference_scenario("I_C1I2R1")).metrics.nodes
        counts = {n: c.datagrams for n, c in nodes.items()}
        d["text"] = " ".join(f"{n}={c}" for n, c in counts.items())
        assert set(counts) == {"client", "rs", "csp1", "csp2"}
        assert all(counts["client"] >= c for c in counts.values())


def test_3_oracle_equivalence(capsys):
    with criterion(capsys, 3, "engine fixpoint equals naive oracle", 30.0) as d:
        rng = random.Random(20260101)
        agree = 0
        for _ in range(1000):
            prog, _, _ = random_program(rng, max_rules=10, max_consts=5, max_arity=3)
            agree += _engine_fixpoint(prog) == naive_fixpoint(prog)
        d["text"] = f"{agree}/1000"
        assert agree == 1000


def test_4_termination(capsys):
    with criterion(capsys, 4, "random scenarios terminate within 2*|credentials|+2 rounds", 60.0) as d:
        rng = random.Random(4040)
        good = 0
        for _ in range(500):
            s = random_scenario(rng, max_credentials=8)
            r = run_scenario(s)
            good += r.outcome.terminal and r.metrics.rounds <= 2 * s.total_credentials() + 2
        d["text"] = f"{good}/500"
        assert good == 500


def test_5_mitigations(capsys):
    with criterion(capsys, 5, "attack corpus contained", 60.0) as d:
        corpus = default_corpus()
        violations = []
        tampered = tampered_rejected = 0
        categories = {}
        for case in corpus.cases:
            r = run_scenario(corpus.base_for(case.mode), adversary=dict(case.adversary))
            m = r.metrics
            kind = case.adversary["kind"]
            categories.setdefault(case.category, set()).add(case.mode.active)
            if kind in ("spoof", "rogue") and (m.adversary_accepted or r.adversary_grant):
                violations.append(case.name)
            if kind == "tamper":
                tampered += m.tampered_sent
                tampered_rejected += m.tampered_sent - m.tampered_accepted
            if m.leaks or r.adversary_grant:
                violations.append(case.name)
        d["text"] = f"cases={len(corpus.cases)} tampered_rejected={tampered_rejected}/{tampered} violations={len(violations)}"
        assert all(v == {True, False} for v in categories.values()) and len(categories) == 4
        assert tampered > 0 and tampered_rejected == tampered
        assert violations == []


def test_6_trust_levels(capsys):
    with criterion(capsys, 6, "trust levels reduce disclosure", 1.0) as d:
        disclosed = [run_scenario(reference_scenario("I_C1I2R1", trust_level=k)).metrics.disclosed for k in (0, 1, 2)]
        d["text"] = f"disclosed={disclosed}"
        assert all(a >= b for a, b in zip(disclosed, disclosed[1:]))
        # level 2 vouches role=physician, which the RS policy requires
        assert disclosed[2] < disclosed[1]


def test_7_determinism(capsys, tmp_path):
    with criterion(capsys, 7, "byte-identical transcript.log and metrics.csv", 2.0):
        from soter.cli import write_run_outputs

        for run in ("a", "b"):
            write_run_outputs(run_scenario(reference_scenario("I_C1I2R1")), tmp_path / run)
        for name in ("transcript.log", "metrics.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


NON_CANONICAL = ["1817", "190017", "1a00000017", "3800", "780161", "a203040102", "a201010102", "9f01ff", "5f4101ff"]


def test_8_codec(capsys):
    with criterion(capsys, 8, "codec conformance", 10.0) as d:
        for value, hexed in APPENDIX_A:
            assert encode(value).hex() == hexed
            assert decode(bytes.fromhex(hexed)) == value
        rng = random.Random(8)
        for _ in range(10_000):
            v = random_value(rng)
            assert decode(encode(v)) == v
        for hexed in NON_CANONICAL:
            with pytest.raises(NonCanonical):
                decode(bytes.fromhex(hexed))
        with pytest.raises(DecodeError):
            decode(bytes.fromhex("0000"))
        d["text"] = f"vectors={len(APPENDIX_A)} round_trips=10000 rejected={len(NON_CANONICAL) + 1}"


def test_9_success_implies_permit(capsys):
    with criterion(capsys, 9, "Success implies Permit", 30.0) as d:
        rng = random.Random(909)
        successes = permits = attempts = 0
        while successes < 200:
            attempts += 1
            assert attempts < 5000, "too few successful random negotiations"
            s = random_scenario(rng, favourable=True)
            r = run_scenario(s)
            if not isinstance(r.outcome, Success):
                continue
            successes += 1
            authz = materialize(r.scenario).authz
            permits += authorize(authz, r.outcome.grant, r.scenario.request, now=r.scenario.now) == Permit()
        d["text"] = f"{permits}/{successes}"
        assert permits == 200
