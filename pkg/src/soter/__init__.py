"""Zero-trust authentication and authorization for IoMT edge networks.

Parties with no prior registration build trust by exchanging signed
credentials under disclosure policies, then authorize actions with a
Datalog-with-constraints policy engine.
"""

__version__ = "0.1.0"
