"""Numerics for the single-gap spacing law of bulk GUE and Wigner eigenvalues.

Submodules: ``kernels`` (Hermite and sine kernels), ``operators`` (Nystrom
discretisation, projections, conditioning), ``counting`` (Poisson-binomial
counting laws), ``gaudin`` (the Gaudin gap law by two routes), ``ensembles``
(sampling) and ``harness`` (experiments and the command line).
"""

__version__ = "0.1.0"

from . import counting, ensembles, gaudin, kernels, operators  # noqa: E402

__all__ = ["counting", "ensembles", "gaudin", "kernels", "operators", "__version__"]
