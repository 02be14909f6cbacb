"""Android API-call-graph malware detection with attention-based localization.

Subpackages: apigraph (listing parsing, per-method graphs, app-level merge),
numkernel (dense numeric layer and hot-kernel backends), gam and gat (the
two attention models), plus localization, evaluation, corpus synthesis and
the command line front end.
"""

__version__ = "0.1.0"
