"""Cotangent-sum Gram machinery for odd real quadratic characters.

Exact finite cotangent sums, the step functions and quantum-modular
boundary functions built from them, Dirichlet L-evaluations, growing
Cholesky sweeps of the associated Gram determinant ratios, and the
related Maass-form checks, with a deterministic CLI front end.
"""

__version__ = "0.1.0"

__all__ = [
    "numkernel",
    "stepfn",
    "cotsum",
    "lfun",
    "gram",
    "qmf",
    "maass",
    "cli",
]
