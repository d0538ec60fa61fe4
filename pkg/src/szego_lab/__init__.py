"""Szego projections on quotient domains: boundary grids, pullback densities,
admissibility, quotient projections and A_p regularity scans."""

import os as _os

# SZEGO_LAB_THREADS caps BLAS/OpenMP parallelism; it must be set before numpy loads
_threads = _os.environ.get("SZEGO_LAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import (AdmissibilityError, ConfigurationError, DomainError,  # noqa: E402
                     NearSingularDivisionError, NumericalConsistencyError, ParameterError,
                     PreconditionError, SzegoLabError, UnderResolvedError)
from .fields import BoundaryField, WeightField  # noqa: E402
from .geometry import BoundaryGrid, MetricBall, make_sphere3_grid, make_torus_grid  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError", "BoundaryField", "BoundaryGrid", "ConfigurationError", "DomainError",
    "MetricBall", "NearSingularDivisionError", "NumericalConsistencyError", "ParameterError",
    "PreconditionError", "SzegoLabError", "UnderResolvedError", "WeightField",
    "make_sphere3_grid", "make_torus_grid",
]
