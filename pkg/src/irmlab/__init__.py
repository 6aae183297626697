"""irmlab: a laboratory for spectral-edge statistics of inhomogeneous random matrices.

Subpackages cover variance profiles, the profile Markov chain and its mixing
certificates, matrix ensemble samplers, Chebyshev / Marchenko-Pastur polynomial
machinery, exact ribbon-diagram combinatorics, non-backtracking path expansions,
and Monte Carlo edge-statistics comparisons.
"""

from irmlab import (  # noqa: F401
    chebyshev,
    diagrams,
    edgestats,
    ensembles,
    markov,
    nonbacktracking,
    profiles,
)

__version__ = "0.1.0"
