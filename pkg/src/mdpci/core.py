"""Shared domain types, scaling arithmetic, and the error taxonomy."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class DomainError(ValueError):
    """A parameter or argument lies outside its admissible domain."""


class DegenerateData(ValueError):
    """Data renders an estimator undefined (e.g. a vanishing denominator)."""


class ConvergenceError(RuntimeError):
    """An iterative routine exhausted its iteration budget."""


class NumericalError(RuntimeError):
    """Internal consistency violated beyond rounding tolerance."""


class InfeasibleError(RuntimeError):
    """A brute-force search found no feasible point."""


class GridTooCoarseWarning(UserWarning):
    """A grid scan kept too few feasible points to be trustworthy."""


class Status(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class ScalingSchedule:
    """Horizon T, speed exponent beta (so b_T = T**beta) and error rate r.

    The scaled radius ``r_T = r * b_T / T = r / a_T**2`` is the sublevel
    threshold used by every interval solver.  ``r == 0`` is representable
    (solvers return degenerate singletons for it); the public factory
    :func:`make_schedule` requires ``r > 0``.
    """

    T: float
    beta: float
    r: float

    def __post_init__(self):
        if not self.T > 1:
            raise DomainError(f"T must exceed 1, got {self.T}")
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (0,1), got {self.beta}")
        if not self.r >= 0.0 or not math.isfinite(self.r):
            raise DomainError(f"r must be finite and >= 0, got {self.r}")

    @property
    def b_T(self) -> float:
        return self.T ** self.beta

    @property
    def a_T(self) -> float:
        return math.sqrt(self.T / self.b_T)

    @property
    def r_T(self) -> float:
        return self.r * self.T ** (self.beta - 1.0)


def make_schedule(T: float, beta: float, r: float) -> ScalingSchedule:
    """Validated schedule with strictly positive error rate."""
    if not r > 0:
        raise DomainError(f"r must be > 0, got {r}")
    return ScalingSchedule(T=float(T), beta=float(beta), r=float(r))


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SampleData:
    """Either an i.i.d. batch or a discretized path on a uniform time grid.

    Paths carry their step ``h`` and start at time 0; point k sits at
    ``t = k * h``.
    """

    kind: str  # "batch" | "path"
    values: np.ndarray
    step: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.kind == "batch":
            if self.values.shape[0] == 0:
                raise DomainError("batch must be nonempty")
        elif self.kind == "path":
            if self.step is None or not self.step > 0:
                raise DomainError("path requires a step h > 0")
            if self.values.ndim != 1 or self.values.shape[0] < 2:
                raise DomainError("path requires at least 2 points")
        else:
            raise DomainError(f"unknown sample kind {self.kind!r}")

    @property
    def horizon(self) -> float:
        if self.kind != "path":
            raise DomainError("horizon is defined for paths only")
        return self.step * (self.values.shape[0] - 1)

    @property
    def times(self) -> np.ndarray:
        if self.kind != "path":
            raise DomainError("times are defined for paths only")
        return np.arange(self.values.shape[0]) * self.step


def batch(values) -> SampleData:
    return SampleData(kind="batch", values=values)


def path(values, step: float) -> SampleData:
    return SampleData(kind="path", values=values, step=float(step))


@dataclass(frozen=True)
class ConfidenceInterval:
    """Lower/upper endpoints with solver provenance and feasibility status."""

    lower: float
    upper: float
    status: Status
    method: str
    schedule: Optional[ScalingSchedule] = None

    def __post_init__(self):
        if self.status is Status.FEASIBLE and not self.lower <= self.upper:
            raise NumericalError(
                f"feasible interval must be ordered, got [{self.lower}, {self.upper}]"
            )
        if self.status is Status.DEGENERATE and self.lower != self.upper:
            raise NumericalError("degenerate interval must be a singleton")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def infeasible_interval(method: str, schedule: Optional[ScalingSchedule] = None) -> ConfidenceInterval:
    return ConfidenceInterval(
        lower=math.nan, upper=math.nan, status=Status.INFEASIBLE,
        method=method, schedule=schedule,
    )


def degenerate_interval(value: float, method: str,
                        schedule: Optional[ScalingSchedule] = None) -> ConfidenceInterval:
    return ConfidenceInterval(
        lower=value, upper=value, status=Status.DEGENERATE,
        method=method, schedule=schedule,
    )


@dataclass(frozen=True)
class ModelSpec:
    """Which statistical model generates data and which rate function applies.

    Kinds: ``iid`` (a Table-row family plus its true mean), ``ou`` (drift
    theta), ``cir`` (drift constant delta, diffusion sigma, drift theta), and
    ``nonparam`` (an i.i.d. loss table).
    """

    kind: str
    theta: object = None
    family: object = None          # RateFamily for "iid"
    delta: Optional[float] = None
    sigma: Optional[float] = None
    losses: Optional[tuple] = None

    def __post_init__(self):
        if self.kind == "ou":
            if not (isinstance(self.theta, (int, float)) and self.theta > 0):
                raise DomainError("ou theta must be > 0")
        elif self.kind == "cir":
            if not (isinstance(self.theta, (int, float)) and self.theta > 0):
                raise DomainError("cir theta must be > 0")
            if self.delta is None or self.sigma is None or not (
                    self.delta > 0 and self.sigma > 0):
                raise DomainError("cir requires delta > 0 and sigma > 0")
        elif self.kind == "iid":
            if self.family is None or not hasattr(self.family, "contains"):
                raise DomainError("iid model needs a rate family")
            if not self.family.contains(self.theta):
                raise DomainError(
                    f"theta={self.theta} outside the {self.family.kind} domain")
        elif self.kind == "nonparam":
            if not self.losses:
                raise DomainError("nonparam model needs a loss table")
            object.__setattr__(self, "losses", tuple(float(x) for x in self.losses))
        else:
            raise DomainError(f"unknown model kind {self.kind!r}")

    def cost_value(self) -> float:
        """The target functional J at the true parameter."""
        if self.kind == "ou":
            return 1.0 / (2.0 * self.theta)
        if self.kind == "cir":
            return self.delta * self.sigma ** 2 / (2.0 * self.theta ** 2)
        if self.kind == "iid":
            theta = np.asarray(self.theta, dtype=float)
            if theta.ndim == 0:
                return float(theta)
            raise DomainError("cost_value needs a scalar iid parameter")
        return float(np.mean(self.losses))


@dataclass(frozen=True, eq=False)
class ExperimentRow:
    """One Monte Carlo summary cell: statistic of one variant at one horizon.

    NaN-valued cells (e.g. undefined decay rates) compare equal to each
    other so CSV round trips preserve result equality.
    """

    T: float
    variant: str
    stat: str
    mean: float
    q10: float
    q90: float
    count: int

    def __post_init__(self):
        if not (math.isnan(self.q10) or math.isnan(self.q90)) and self.q10 > self.q90:
            raise NumericalError(f"q10 > q90 in row {self}")

    @staticmethod
    def _same(a: float, b: float) -> bool:
        return a == b or (math.isnan(a) and math.isnan(b))

    def __eq__(self, other):
        if not isinstance(other, ExperimentRow):
            return NotImplemented
        return (self._same(self.T, other.T)
                and self.variant == other.variant
                and self.stat == other.stat
                and self._same(self.mean, other.mean)
                and self._same(self.q10, other.q10)
                and self._same(self.q90, other.q90)
                and self.count == other.count)

    def __hash__(self):
        return hash((self.T, self.variant, self.stat, self.count))


@dataclass(frozen=True)
class ExperimentResult:
    """Rows of per-T summaries plus run metadata (not serialized to CSV)."""

    rows: tuple
    metadata: dict = field(default_factory=dict, compare=False)
