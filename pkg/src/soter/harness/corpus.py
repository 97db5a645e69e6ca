"""Attack corpus: one adversarial run per attack-tree leaf, each with an expected disposition.

A case's disposition is ``reject`` when the adversary got nowhere (no message
of its own accepted, no tampered datagram accepted, no attribute text seen in
captured traffic, no grant it should not hold) and ``accept`` otherwise.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Union

from soter.harness.adversary import KINDS, AdversaryConfigError, category_of, make_adversary
from soter.harness.runner import ScenarioResult, run_scenario
from soter.harness.scenario import ConfigurationError, Scenario, load_scenario, reference_scenario
from soter.harness.topology import CLIENT, RS
from soter.negotiation.types import ALL_MODES, Mode
from soter.threats import flows

DISPOSITIONS = ("reject", "accept")
REPORT_HEADER = ("scenario", "category", "mode", "expected", "observed", "pass")


@dataclass(frozen=True)
class AttackCase:
    name: str
    category: str
    mode: Mode
    adversary: Mapping[str, Any]
    expected: str = "reject"
    tree: str = "network"


@dataclass(frozen=True)
class AttackRow:
    scenario: str
    category: str
    mode: str
    expected: str
    observed: str
    passed: bool
    detail: str = ""

    def cells(self) -> tuple:
        return (self.scenario, self.category, self.mode, self.expected, self.observed, str(self.passed).lower())


@dataclass
class Corpus:
    cases: list[AttackCase] = field(default_factory=list)
    # None means the built-in reference scenario for each case's mode
    scenario_path: Optional[Path] = None

    def base_for(self, mode: Mode) -> Scenario:
        if self.scenario_path is None:
            return reference_scenario(mode)
        base = load_scenario(self.scenario_path)
        if base.mode != mode:
            base = replace(base, mode=mode, name=f"{base.name}_{mode.label}")
        return base


def breaches(result: ScenarioResult) -> list[str]:
    m = result.metrics
    out = []
    if m.adversary_accepted:
        out.append(f"{m.adversary_accepted} adversary datagrams accepted")
    if m.tampered_accepted:
        out.append(f"{m.tampered_accepted} tampered datagrams accepted")
    if m.leaks:
        out.append("plaintext seen: " + ",".join(sorted(set(m.leaks))))
    if result.adversary_grant:
        out.append("adversary holds a grant")
    return out


def observe(result: ScenarioResult) -> str:
    return "accept" if breaches(result) else "reject"


def run_case(case: AttackCase, corpus: Optional[Corpus] = None, seed: Optional[int] = None) -> AttackRow:
    corpus = corpus or Corpus()
    result = run_scenario(corpus.base_for(case.mode), adversary=dict(case.adversary), seed=seed)
    found = breaches(result)
    observed = "accept" if found else "reject"
    detail = "; ".join(found) or str(result.outcome)
    return AttackRow(case.name, case.category, case.mode.label, case.expected, observed, observed == case.expected, detail)


def run_corpus(corpus: Corpus, seed: Optional[int] = None) -> list[AttackRow]:
    rows = [run_case(c, corpus, seed) for c in corpus.cases]
    return sorted(rows, key=lambda r: r.scenario)


def report_csv(rows: Iterable[AttackRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def default_corpus() -> Corpus:
    """Every catalogued attack in every mode, all expected to be contained."""
    cases: list[AttackCase] = []

    def add(name: str, mode: Mode, tree: str, adversary: dict) -> None:
        cases.append(AttackCase(f"{mode.label}:{name}", category_of(adversary["kind"]), mode, adversary, "reject", tree))

    for mode in ALL_MODES:
        hub = RS if mode.active else CLIENT
        add("spoof_rs", mode, "rs", {"kind": "spoof", "target": RS})
        add("spoof_client", mode, "client", {"kind": "spoof", "target": CLIENT})
        add("spoof_csp_leaked_channel", mode, "csp", {"kind": "spoof", "target": "csp1", "channel_key_known": True})
        for src, dst in flows(mode):
            add(f"tamper_{src}_{dst}", mode, "network", {"kind": "tamper", "link": [src, dst], "offset": 12})
        add("tamper_rs_client_ciphertext", mode, "network", {"kind": "tamper", "link": [RS, CLIENT], "offset": 60})
        add("replay_client_rs", mode, "network", {"kind": "replay", "link": [CLIENT, RS]})
        add(f"replay_csp1_{hub}", mode, "network", {"kind": "replay", "link": ["csp1", hub]})
        add("eavesdrop_client_rs", mode, "network", {"kind": "eavesdrop", "link": [CLIENT, RS]})
        for i in range(1, mode.csp_count + 1):
            add(f"eavesdrop_{hub}_csp{i}", mode, "network", {"kind": "eavesdrop", "link": [hub, f"csp{i}"]})
        add("rogue_node", mode, "network", {"kind": "rogue", "node": "mallory"})
        add("forged_credential", mode, "client", {"kind": "forge", "issuer": "csp1"})
    return Corpus(cases)


def _case(obj: Any, i: int) -> AttackCase:
    where = f"cases[{i}]"
    if not isinstance(obj, Mapping):
        raise ConfigurationError(f"{where} must be an object")
    try:
        adversary = dict(obj["adversary"])
        mode = Mode.parse(obj["mode"])
        name = str(obj["name"])
    except KeyError as exc:
        raise ConfigurationError(f"{where} is missing {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc
    expected = obj.get("expected", "reject")
    if expected not in DISPOSITIONS:
        raise ConfigurationError(f"{where}: expected must be one of {DISPOSITIONS}")
    try:
        make_adversary(adversary)
    except (AdversaryConfigError, KeyError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc
    category = obj.get("category") or category_of(adversary["kind"])
    return AttackCase(name, str(category), mode, adversary, expected, str(obj.get("tree", "network")))


def corpus_from_dict(doc: Mapping[str, Any], base: Union[str, Path] = ".") -> Corpus:
    if not isinstance(doc, Mapping):
        raise ConfigurationError("corpus document must be an object")
    ref = doc.get("scenario", "builtin:reference")
    path = None
    if ref != "builtin:reference":
        path = Path(base) / ref
        if not path.is_file():
            raise ConfigurationError(f"corpus scenario not found: {path}")
    cases = [_case(c, i) for i, c in enumerate(doc.get("cases", []))]
    names = [c.name for c in cases]
    if len(set(names)) != len(names):
        raise ConfigurationError("case names must be unique")
    return Corpus(cases, path)


def load_corpus(path: Union[str, Path]) -> Corpus:
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read corpus {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return corpus_from_dict(doc, path.parent)


def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "scenario": "builtin:reference",
        "cases": [
            {
                "name": c.name,
                "category": c.category,
                "tree": c.tree,
                "mode": c.mode.label,
                "adversary": dict(c.adversary),
                "expected": c.expected,
            }
            for c in corpus.cases
        ],
    }


__all__ = [
    "AttackCase",
    "AttackRow",
    "Corpus",
    "KINDS",
    "REPORT_HEADER",
    "breaches",
    "corpus_from_dict",
    "corpus_to_dict",
    "default_corpus",
    "load_corpus",
    "observe",
    "report_csv",
    "run_case",
    "run_corpus",
]
