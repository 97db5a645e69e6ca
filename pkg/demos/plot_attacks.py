"""
Putting an adversary on the wire
================================

"""

# Every attack in the catalog is a harness adversary. Its own datagrams are
# marked with a leading "~" in the transcript.
from collections import Counter

from soter.harness.corpus import default_corpus, report_csv, run_corpus
from soter.harness.runner import run_scenario
from soter.harness.scenario import reference_scenario
from soter.threats import CATALOG

for t in CATALOG:
    print(f"{t.category:24} {t.adversary:10} {t.attack}")

attacks = [
    {"kind": "spoof", "target": "rs"},
    {"kind": "tamper", "link": ["client", "rs"], "offset": 12},
    {"kind": "replay", "link": ["client", "rs"]},
    {"kind": "eavesdrop", "link": ["rs", "csp1"]},
    {"kind": "rogue", "node": "mallory"},
    {"kind": "forge", "issuer": "csp1"},
]
for adv in attacks:
    r = run_scenario(reference_scenario("A_C1I1R1"), adversary=adv)
    seen = Counter(e.disposition for e in r.transcript.entries if e.src.startswith("~") or e.disposition != "delivered")
    print(f"{adv['kind']:10} outcome={r.outcome}  rejections={dict(seen)}  leaks={r.metrics.leaks}")

# The full corpus runs each attack in each mode and reports whether the
# adversary got anywhere.
rows = run_corpus(default_corpus())
print(sum(r.passed for r in rows), "of", len(rows), "cases contained")
print(report_csv(rows[:3]))
