"""
Writing and querying an access policy
=====================================

"""

# A policy is a small Datalog program. Facts are ground atoms, rules derive
# new atoms, and constraints compare bound values.
from soter.policy import atom, evaluate, load_policy, query, unsatisfied_requirements

text = """
permit(R, read, rec1) :- credential(R, role, Role), role_within(Role, clinician),
                         credential(R, affiliation, kent_medical), now(T), T <= 1000.
"""
policy = load_policy(text, ("hipaa",))
print(len(policy.rules), "rules after merging the hipaa prelude")

# Evaluate with what we know about bob so far.
facts = [atom("credential", "bob", "role", "nurse"), atom("now", 50)]
print("permitted:", atom("permit", "bob", "read", "rec1") in evaluate(policy, facts))

# Ask what is still missing. The answer is the set of credential atoms a
# negotiation would have to collect.
for need in unsatisfied_requirements(policy, facts, atom("permit", "bob", "read", "rec1")):
    print("still needs", need)

# Supply it and query the derived permits.
facts.append(atom("credential", "bob", "affiliation", "kent_medical"))
for binding in query(policy, facts, atom("permit", "R", "A", "O")):
    print("derived permit for", {str(v): str(t) for v, t in binding.items()})
