"""Darkspace traffic analysis with hypersparse traffic matrices.

Pipeline: ingest -> anonymize -> hypersparse leaf matrices -> hierarchy of
window sizes -> quantities and degree distributions per window -> power-law
scaling fits across window sizes.
"""

__version__ = "0.1.0"
