"""Numerical toolkit for PPT states of three qubits: extremal-state search,
rank-targeted search, Lorentz-invariant classification, and construction of
the rank-4444 entangled families."""

__version__ = "0.1.0"

from . import cli, config, extremal, invariants, prodvec, qstate, rank4, ranksearch
from .qstate import HermitianOperator, PptProfile, ppt_profile

__all__ = [
    "__version__",
    "HermitianOperator",
    "PptProfile",
    "cli",
    "config",
    "extremal",
    "invariants",
    "ppt_profile",
    "prodvec",
    "qstate",
    "rank4",
    "ranksearch",
]
