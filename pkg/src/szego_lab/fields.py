"""Sampled functions on boundary grids."""

from __future__ import annotations

import json
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, PreconditionError
from .geometry import BoundaryGrid, grid_from_reference, grid_reference

FIELD_FORMAT = "szego_lab.field"
FIELD_FORMAT_VERSION = 1

PROVENANCES = ("jacobian-pipeline", "closed-form", "user")


class BoundaryField:
    """Complex samples on a grid, with an optional analytic evaluator.

    ``func`` maps an ``(M, n)`` array of boundary points to ``M`` values; it
    is used whenever the field has to be evaluated off the grid nodes (for
    instance to compose with a group element on S^3).
    """

    def __init__(self, grid: BoundaryGrid, values, func: Optional[Callable] = None):
        values = np.asarray(values)
        if values.shape != grid.weights.shape:
            raise ConfigurationError(
                f"field has shape {values.shape}, grid has {grid.weights.shape}")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("field values must be finite at every node")
        values = values.copy()
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.func = func

    @classmethod
    def from_function(cls, grid: BoundaryGrid, func: Callable, **kw):
        return cls(grid, func(grid.points), func=func, **kw)

    def __call__(self, points):
        if self.func is None:
            raise ConfigurationError("field has no analytic evaluator")
        return self.func(np.asarray(points, dtype=complex))

    def with_values(self, values, func: Optional[Callable] = None) -> "BoundaryField":
        return BoundaryField(self.grid, values, func)

    def conj(self) -> "BoundaryField":
        f = self.func
        return BoundaryField(self.grid, np.conj(self.values),
                             None if f is None else (lambda p: np.conj(f(p))))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2 * self.grid.weights)))

    def to_json(self) -> str:
        return field_to_json(self)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.grid.manifold_id}, {self.grid.resolutions})"


class WeightField(BoundaryField):
    """Nonnegative real samples (a density or weight) with a provenance tag."""

    def __init__(self, grid: BoundaryGrid, values, provenance: str = "user",
                 func: Optional[Callable] = None):
        values = np.asarray(values)
        if np.iscomplexobj(values):
            if np.any(np.abs(values.imag) > 1e-12 * (1.0 + np.abs(values.real))):
                raise PreconditionError("weight values must be real")
            values = values.real
        values = values.astype(float)
        if np.any(values < 0):
            raise PreconditionError("weight values must be nonnegative")
        if provenance not in PROVENANCES:
            raise ConfigurationError(f"unknown provenance {provenance!r}")
        super().__init__(grid, values, func)
        self.provenance = provenance

    def require_positive(self, floor: float = 1e-300) -> None:
        bad = np.flatnonzero(self.values <= floor)
        if bad.size:
            raise PreconditionError(
                f"weight is not positive at {bad.size} node(s), first index {bad[0]}")

    def power(self, s: float) -> np.ndarray:
        """Node values of w^s (requires w > 0 when s < 0)."""
        if s < 0:
            self.require_positive()
        return self.values ** s


def _offset_phase(grid: BoundaryGrid, sign: float) -> np.ndarray:
    n = grid.dim
    N = grid.resolutions[0]
    k = np.fft.fftfreq(N, 1.0 / N)
    h = 2.0 * np.pi / N
    out = np.ones((N,) * n, dtype=complex)
    for ax, o in enumerate(grid.offsets):
        shape = [1] * n
        shape[ax] = N
        out = out * np.exp(sign * 1j * k * h * o).reshape(shape)
    return out


def torus_coefficients(grid: BoundaryGrid, values) -> np.ndarray:
    """Coefficients a_k of the trigonometric interpolant sum_k a_k exp(i k.theta).

    The array is indexed like ``np.fft.fftfreq`` along every axis; the
    Nyquist index -N/2 counts as a negative frequency.
    """
    N = grid.resolutions[0]
    a = np.fft.fftn(np.asarray(values).reshape((N,) * grid.dim)) / N**grid.dim
    return a * _offset_phase(grid, -1.0)


def torus_synthesize(grid: BoundaryGrid, a: np.ndarray) -> np.ndarray:
    """Node values of sum_k a_k exp(i k.theta) (inverse of torus_coefficients)."""
    N = grid.resolutions[0]
    return (np.fft.ifftn(a * _offset_phase(grid, 1.0)) * N**grid.dim).ravel()


def as_values(f, grid: BoundaryGrid) -> np.ndarray:
    """Node values of a field or plain array, checked against ``grid``."""
    if isinstance(f, BoundaryField):
        if not grid.same_as(f.grid):
            raise ConfigurationError("field was sampled on a different grid")
        return f.values
    v = np.asarray(f)
    if v.shape != grid.weights.shape:
        raise ConfigurationError(f"field has shape {v.shape}, grid has {grid.weights.shape}")
    return v


def field_to_json(f: BoundaryField) -> str:
    v = np.asarray(f.values)
    doc = {
        "format": FIELD_FORMAT,
        "version": FIELD_FORMAT_VERSION,
        "grid": grid_reference(f.grid),
        "kind": "weight" if isinstance(f, WeightField) else "field",
        "provenance": getattr(f, "provenance", None),
        "real": np.real(v).tolist(),
        "imag": np.imag(v).tolist() if np.iscomplexobj(v) else None,
    }
    return json.dumps(doc)


def field_from_json(text: str, grid: Optional[BoundaryGrid] = None) -> BoundaryField:
    doc = json.loads(text)
    if doc.get("format") != FIELD_FORMAT or doc.get("version") != FIELD_FORMAT_VERSION:
        raise ConfigurationError("not a version-1 szego_lab field document")
    g = grid_from_reference(doc["grid"])
    if grid is not None:
        if not grid.same_as(g):
            raise ConfigurationError("field document refers to a different grid")
        g = grid
    values = np.asarray(doc["real"], dtype=float)
    if doc.get("imag") is not None:
        values = values + 1j * np.asarray(doc["imag"], dtype=float)
    if doc.get("kind") == "weight":
        return WeightField(g, values, provenance=doc.get("provenance") or "user")
    return BoundaryField(g, values)
