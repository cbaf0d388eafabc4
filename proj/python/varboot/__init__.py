"""Symbolic engine for the inverse problem of the calculus of variations.

The heavy lifting lives in the C++ extension ``_varboot``; this package
re-exports its operations under stable names.
"""

from ._varboot import Model, catalogue_counts, run

__all__ = ["Model", "catalogue_counts", "run"]
