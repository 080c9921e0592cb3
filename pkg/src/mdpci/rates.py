"""Moderate-deviation rate functions for every supported model.

Scalar mean families use the quadratic rate ``0.5 * v**2 / C(theta)`` where
``C`` is the sampling variance of a single observation; the drift-parameter
families for the two diffusions fit the same mold with ``C(theta) = theta``
(OU) and ``C(theta) = sigma**2 * theta / delta`` (CIR).  The variance tables
in the literature are sometimes printed without the 1/2 factor; this module
keeps the 1/2 everywhere so the quadratic families and the diffusion rates
share one convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DomainError, _frozen_array

_SCALAR_KINDS = (
    "exponential", "gamma", "poisson", "bernoulli",
    "binomial", "geometric", "ou", "cir",
)


@dataclass(frozen=True)
class RateFamily:
    """Tagged rate-function family with its per-family constants.

    Use the module-level constructors (:func:`normal`, :func:`exponential`,
    ...) rather than instantiating directly.
    """

    kind: str
    cov: Optional[np.ndarray] = None     # normal: covariance matrix
    nu: Optional[float] = None           # gamma: scale
    m: Optional[int] = None              # binomial: trial count
    delta: Optional[float] = None        # cir: drift constant
    sigma: Optional[float] = None        # cir: diffusion coefficient
    _cov_inv: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "normal":
            cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
            if cov.shape[0] != cov.shape[1]:
                raise DomainError("covariance must be square")
            if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
                raise DomainError("covariance must be symmetric")
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise DomainError("covariance must be positive definite") from exc
            ident = np.eye(cov.shape[0])
            # Factorize once; Monte Carlo loops re-evaluate the quadratic form.
            inv = np.linalg.solve(chol.T, np.linalg.solve(chol, ident))
            object.__setattr__(self, "cov", _frozen_array(cov))
            object.__setattr__(self, "_cov_inv", _frozen_array(inv))
        elif self.kind == "gamma":
            if not self.nu > 0:
                raise DomainError("gamma scale nu must be > 0")
        elif self.kind == "binomial":
            if not (isinstance(self.m, int) and self.m >= 1):
                raise DomainError("binomial m must be a positive integer")
        elif self.kind == "cir":
            if not (self.delta > 0 and self.sigma > 0):
                raise DomainError("cir requires delta > 0 and sigma > 0")
        elif self.kind not in ("exponential", "poisson", "bernoulli",
                               "geometric", "ou", "nonparam_chi2"):
            raise DomainError(f"unknown rate family {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.cov.shape[0] if self.kind == "normal" else 1

    def domain_bounds(self):
        """Open interval of admissible scalar parameters (lo, hi)."""
        if self.kind == "binomial":
            return (0.0, float(self.m))
        return {
            "normal": (-math.inf, math.inf),
            "exponential": (0.0, math.inf),
            "gamma": (0.0, math.inf),
            "poisson": (0.0, math.inf),
            "bernoulli": (0.0, 1.0),
            "geometric": (1.0, math.inf),
            "ou": (0.0, math.inf),
            "cir": (0.0, math.inf),
        }[self.kind]

    def contains(self, theta) -> bool:
        if self.kind == "normal":
            theta = np.asarray(theta, dtype=float)
            return theta.shape in ((self.dim,), ()) if self.dim == 1 else theta.shape == (self.dim,)
        if self.kind == "nonparam_chi2":
            return False
        lo, hi = self.domain_bounds()
        return lo < theta < hi

    def variance(self, theta):
        """Single-observation variance C(theta); vectorized over theta."""
        if self.kind == "normal":
            if self.dim > 1:
                return self.cov
            theta = np.asarray(theta, dtype=float)
            var = float(self.cov[0, 0])
            return np.full_like(theta, var) if theta.ndim else var
        theta = np.asarray(theta, dtype=float)
        if self.kind == "exponential":
            return theta ** 2
        if self.kind == "gamma":
            return self.nu * theta
        if self.kind == "poisson":
            return theta
        if self.kind == "bernoulli":
            return theta * (1.0 - theta)
        if self.kind == "binomial":
            return theta * (1.0 - theta / self.m)
        if self.kind == "geometric":
            return theta * (theta - 1.0)
        if self.kind == "ou":
            return theta
        if self.kind == "cir":
            return self.sigma ** 2 * theta / self.delta
        raise DomainError(f"variance undefined for family {self.kind!r}")


def normal(cov) -> RateFamily:
    return RateFamily(kind="normal", cov=cov)


def exponential() -> RateFamily:
    return RateFamily(kind="exponential")


def gamma(nu: float) -> RateFamily:
    return RateFamily(kind="gamma", nu=float(nu))


def poisson() -> RateFamily:
    return RateFamily(kind="poisson")


def bernoulli() -> RateFamily:
    return RateFamily(kind="bernoulli")


def binomial(m: int) -> RateFamily:
    return RateFamily(kind="binomial", m=int(m))


def geometric() -> RateFamily:
    return RateFamily(kind="geometric")


def ou() -> RateFamily:
    return RateFamily(kind="ou")


def cir(delta: float, sigma: float) -> RateFamily:
    return RateFamily(kind="cir", delta=float(delta), sigma=float(sigma))


def nonparam_chi2() -> RateFamily:
    return RateFamily(kind="nonparam_chi2")


def eval_rate(family: RateFamily, theta, vartheta) -> float:
    """Rate-function value at deviation ``vartheta`` from model point ``theta``.

    Returns ``0.5 * v.T @ C(theta)^{-1} @ v`` for the quadratic families,
    ``v**2 / (2 theta)`` for OU and ``v**2 delta / (2 sigma**2 theta)`` for
    CIR.  Raises :class:`DomainError` when ``theta`` is outside the family's
    parameter domain.
    """
    if family.kind == "normal":
        v = np.atleast_1d(np.asarray(vartheta, dtype=float))
        if v.shape != (family.dim,):
            raise DomainError(f"deviation must have dimension {family.dim}")
        return 0.5 * float(v @ family._cov_inv @ v)
    if family.kind == "nonparam_chi2":
        raise DomainError(
            "the non-parametric rate is evaluated through chi2_divergence"
        )
    theta = float(theta)
    if not family.contains(theta):
        raise DomainError(f"theta={theta} outside domain of {family.kind}")
    v = float(vartheta)
    c = float(family.variance(theta))
    if c <= 0.0:
        return math.inf if v != 0.0 else 0.0
    return 0.5 * v * v / c


def sublevel_contains(family: RateFamily, theta, vartheta, level: float) -> bool:
    """True iff the deviation lies in the closed sublevel set at ``level``."""
    if level < 0:
        raise DomainError("sublevel threshold must be >= 0")
    return eval_rate(family, theta, vartheta) <= level


@dataclass(frozen=True)
class DiscreteMeasurePair:
    """Candidate reweighting of T sample atoms against the uniform reference."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "atoms", _frozen_array(self.atoms))
        object.__setattr__(self, "weights", _frozen_array(self.weights))
        if self.atoms.shape[0] == 0:
            raise DomainError("measure pair needs at least one atom")
        if self.weights.shape != (self.atoms.shape[0],):
            raise DomainError("weights must match atoms in length")

    @property
    def size(self) -> int:
        return self.atoms.shape[0]


def chi2_divergence(pair: DiscreteMeasurePair) -> float:
    """Chi-square divergence sum((w_t - 1/T)**2 / w_t) of w from uniform.

    Zero weights make the divergence +inf (absolute-continuity failure);
    negative weights or a non-unit total raise :class:`DomainError`.
    """
    w = pair.weights
    if np.any(w < 0):
        raise DomainError("weights must be nonnegative")
    total = float(np.sum(w))
    if abs(total - 1.0) > 1e-10:
        raise DomainError(f"weights must sum to 1, got {total}")
    n = pair.size
    u = 1.0 / n
    if np.any(w == 0.0):
        return math.inf
    return float(np.sum((w - u) ** 2 / w))
