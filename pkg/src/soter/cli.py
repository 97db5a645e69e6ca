"""Command-line entry point: ``soter run``, ``soter check-policy``, ``soter attack``.

Exit codes: 0 success, 1 negotiation failure (or a failed attack case),
2 configuration or parse error, 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from soter import __version__
from soter.credential import DISCLOSURE_GUARDS
from soter.harness.corpus import load_corpus, report_csv, run_corpus
from soter.harness.metrics import export_metrics
from soter.harness.runner import ScenarioResult, run_scenario
from soter.harness.scenario import ConfigurationError, Scenario, load_scenario
from soter.negotiation.types import Success
from soter.policy import PolicyError, parse_program

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soter", description="Trust negotiation scenarios, policies and attacks.")
    p.add_argument("--version", action="version", version=f"soter {__version__}")
    p.add_argument("--seed", type=_seed, default=None, help="override the scenario seed (u64)")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario; writes transcript.log and metrics.csv")
    run.add_argument("--scenario", required=True, type=Path)
    run.add_argument("--out", required=True, type=Path)

    check = sub.add_parser("check-policy", help="parse a .meddl policy and report its size")
    check.add_argument("path", type=Path)
    check.add_argument(
        "--disclosure",
        action="store_true",
        help="read as a disclosure policy, where release(I, R) may leave I and R unbound",
    )

    attack = sub.add_parser("attack", help="run an attack corpus; writes attack_report.csv")
    attack.add_argument("--corpus", required=True, type=Path)
    attack.add_argument("--out", required=True, type=Path)
    return p


def write_run_outputs(result: ScenarioResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "transcript.log").write_text(result.transcript.to_text(), "utf-8")
    (out / "metrics.csv").write_text(export_metrics(result.metrics, "delimited"), "utf-8")


def cmd_run(scenario_path: Path, out: Path, seed: Optional[int] = None) -> int:
    scenario: Scenario = load_scenario(scenario_path)
    result = run_scenario(scenario, seed=seed)
    write_run_outputs(result, out)
    print(f"{scenario.name} {scenario.mode.label}: {result.outcome} after {result.metrics.rounds} rounds")
    return EXIT_OK if isinstance(result.outcome, Success) else EXIT_FAILURE


def cmd_check_policy(path: Path, disclosure: bool = False) -> int:
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        program = parse_program(text, DISCLOSURE_GUARDS if disclosure else None)
    except PolicyError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    print(f"{len(program.rules)} rules, {len(program.facts)} facts")
    return EXIT_OK


def cmd_attack(corpus_path: Path, out: Path, seed: Optional[int] = None) -> int:
    corpus = load_corpus(corpus_path)
    rows = run_corpus(corpus, seed=seed)
    out.mkdir(parents=True, exist_ok=True)
    (out / "attack_report.csv").write_text(report_csv(rows), "utf-8")
    failed = [r for r in rows if not r.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} attack cases met their expected disposition")
    for r in failed:
        print(f"FAIL {r.scenario}: expected {r.expected}, observed {r.observed} ({r.detail})")
    return EXIT_FAILURE if failed else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.scenario, args.out, args.seed)
        if args.command == "check-policy":
            return cmd_check_policy(args.path, args.disclosure)
        return cmd_attack(args.corpus, args.out, args.seed)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # anything else is a bug in soter, not in the input
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
