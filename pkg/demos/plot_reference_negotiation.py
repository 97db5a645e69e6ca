"""
Negotiating access in the six communication modes
=================================================

"""

# The reference scenario: each credential service provider (CSP) holds one
# attribute credential about the client, and the resource server (RS) wants one
# attribute from each.
from soter.harness.metrics import export_metrics
from soter.harness.runner import run_scenario
from soter.harness.scenario import reference_scenario
from soter.negotiation.types import ALL_MODES

for mode in ALL_MODES:
    result = run_scenario(reference_scenario(mode))
    m = result.metrics
    csp_links = {c: (m.link_count("rs", c), m.link_count("client", c)) for c in result.scenario.topology.csps}
    print(f"{mode.label}: {result.outcome}, rounds={m.rounds}, (rs, client) datagrams per csp={csp_links}")

# Active modes route every CSP exchange through the RS, inactive ones through
# the client. The per-node table for the inactive two-CSP case:
result = run_scenario(reference_scenario("I_C1I2R1"))
print(export_metrics(result.metrics, "table"))

# The transcript holds one line per datagram: tick, link, disposition, bytes.
print(result.transcript.to_text().splitlines()[0][:80], "...")

# A trust table lets the RS vouch for attributes it already knows about the
# client, which cuts how many credentials have to travel.
for level in (0, 1, 2):
    r = run_scenario(reference_scenario("I_C1I2R1", trust_level=level))
    print(f"trust level {level}: {r.metrics.disclosed} credential states disclosed")
