"""portalgate: an authenticated reverse-proxy gateway for web applications
running on (simulated) compute nodes.

Users reach backends through two URL spaces: /fw/<name>/ resolves a named,
user-owned forward from the registry; /fw2/<node>:<port>/ forwards directly.
Both enforce process-ownership rules before any backend connection is made.
HTML responses are rewritten so root-relative links stay inside the prefix;
WebSocket upgrades relay byte for byte. A mock scheduler launches demo apps
on per-node port ranges, and a benchmark harness measures the gateway's
per-request latency overhead against direct connections.
"""

__version__ = "0.1.0"
