"""Human-robot joint planning engine.

Two planning modes: uncertainty-mitigation planning (hypothesis-augmented
A* + an exact dynamic-programming query policy) and real-time intent-aware
collaboration (geometric intent belief + coordination-aware task selection),
plus a scripted-episode simulator and a live NDJSON session server.
"""

__version__ = "0.1.0"
