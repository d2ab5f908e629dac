"""Eigenvector self-overlap statistics of finite-rank deformed complex
Ginibre ensembles.

Three mutually cross-checking routes to the mean diagonal overlap density:

* :mod:`ginolap.sampler` draws matrices from the ensemble and estimates the
  density by disk-binned Monte Carlo;
* :mod:`ginolap.exactrep` evaluates the exact finite-N integral
  representation by deterministic quadrature (rank 1 and 2);
* :mod:`ginolap.asymptotics` evaluates the closed-form large-N limits at the
  spectral edge and at outlier eigenvalues.

:mod:`ginolap.model` holds the Jordan description of the deformation and
:mod:`ginolap.specfun` the iterative-erfc integrals the edge law is built
from.  The ``ginolap`` command line ties the routes together.
"""

from ginolap.model import (
    InvalidSpecError,
    JordanBlockGroup,
    JordanSpec,
    ModelParams,
    build_x0,
    geometric_multiplicity,
    index_sets,
    spec_from_json,
    spec_to_json,
)
from ginolap.specfun import e_trunc, ie, ie_scaled

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "InvalidSpecError",
    "JordanBlockGroup",
    "JordanSpec",
    "ModelParams",
    "build_x0",
    "geometric_multiplicity",
    "index_sets",
    "spec_from_json",
    "spec_to_json",
    "e_trunc",
    "ie",
    "ie_scaled",
]
