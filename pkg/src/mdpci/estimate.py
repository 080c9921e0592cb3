"""Point estimators feeding the interval solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DegenerateData, DomainError, SampleData
from .rates import DiscreteMeasurePair


@dataclass(frozen=True)
class PathIntegrals:
    """Trapezoid integrals of a path: int X dt, int X^2 dt, terminal value."""

    int_x: float
    int_x2: float
    x_T: float
    T: float


def path_integrals(data: SampleData) -> PathIntegrals:
    if data.kind != "path" or data.values.shape[0] < 2:
        raise DomainError("path_integrals requires a path with >= 2 points")
    v = data.values
    h = data.step
    return PathIntegrals(
        int_x=float(np.trapezoid(v, dx=h)),
        int_x2=float(np.trapezoid(v * v, dx=h)),
        x_T=float(v[-1]),
        T=h * (v.shape[0] - 1),
    )


def mle_ou(integrals: PathIntegrals) -> float:
    """Drift MLE -(X_T^2 - T) / (2 int X^2 dt).

    May be negative on unlucky paths; downstream solvers report Infeasible.
    """
    if integrals.int_x2 <= 0.0:
        raise DegenerateData("int X^2 dt must be positive")
    return -(integrals.x_T ** 2 - integrals.T) / (2.0 * integrals.int_x2)


def mle_cir(integrals: PathIntegrals, delta: float) -> float:
    """Drift MLE (delta T - X_T) / int X dt for known delta."""
    if not delta > 0:
        raise DomainError("delta must be > 0")
    if integrals.int_x <= 0.0:
        raise DegenerateData("int X dt must be positive")
    return (delta * integrals.T - integrals.x_T) / integrals.int_x


def empirical_mean(data: SampleData):
    """Arithmetic mean of a batch (componentwise for vector observations)."""
    if data.kind != "batch" or data.values.shape[0] == 0:
        raise DomainError("empirical_mean requires a nonempty batch")
    mean = np.mean(data.values, axis=0)
    return float(mean) if np.ndim(mean) == 0 else mean


def empirical_measure(data: SampleData) -> DiscreteMeasurePair:
    """Atoms with multiplicity and uniform weights 1/T."""
    if data.kind != "batch" or data.values.shape[0] == 0:
        raise DomainError("empirical_measure requires a nonempty batch")
    n = data.values.shape[0]
    return DiscreteMeasurePair(atoms=data.values, weights=np.full(n, 1.0 / n))
