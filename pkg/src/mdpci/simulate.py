"""Seeded simulators for every supported data-generating model.

Both diffusions are sampled from their exact transition laws, so path values
carry no discretization bias; only the quadrature of path integrals feels the
step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import core
from .core import DomainError, SampleData
from .rates import RateFamily


@dataclass(frozen=True)
class RngSpec:
    """(master seed, stream id): distinct streams are independent, identical
    pairs reproduce identical samples within a numpy release."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.seed < 2 ** 64 and 0 <= self.stream < 2 ** 64):
            raise DomainError("seed and stream must be unsigned 64-bit")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence((self.seed, self.stream)))


def _resolve_rng(rng) -> np.random.Generator:
    if isinstance(rng, RngSpec):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise DomainError("rng must be an RngSpec or numpy Generator")


def sample_iid(family: RateFamily, theta, T: int, rng) -> SampleData:
    """T independent draws from the named distribution with mean ``theta``.

    Sampling accepts the closed parameter domain where the distribution
    degenerates gracefully (Bernoulli p in [0,1], binomial mean in [0,m],
    geometric theta >= 1); the rate-function domain stays open.
    """
    if not T >= 1:
        raise DomainError("T must be >= 1")
    g = _resolve_rng(rng)
    kind = family.kind
    if kind == "normal":
        mean = np.atleast_1d(np.asarray(theta, dtype=float))
        if mean.shape != (family.dim,):
            raise DomainError(f"mean must have dimension {family.dim}")
        draws = g.multivariate_normal(mean, family.cov, size=T, method="cholesky")
        if family.dim == 1:
            draws = draws[:, 0]
        return core.batch(draws)
    theta = float(theta)
    if kind == "exponential":
        if not theta > 0:
            raise DomainError("exponential mean must be > 0")
        values = g.exponential(scale=theta, size=T)
    elif kind == "gamma":
        if not theta > 0:
            raise DomainError("gamma mean must be > 0")
        values = g.gamma(shape=theta / family.nu, scale=family.nu, size=T)
    elif kind == "poisson":
        if not theta > 0:
            raise DomainError("poisson rate must be > 0")
        values = g.poisson(lam=theta, size=T).astype(float)
    elif kind == "bernoulli":
        if not 0.0 <= theta <= 1.0:
            raise DomainError("bernoulli p must lie in [0,1]")
        values = g.binomial(1, theta, size=T).astype(float)
    elif kind == "binomial":
        p = theta / family.m
        if not 0.0 <= p <= 1.0:
            raise DomainError("binomial mean must lie in [0,m]")
        values = g.binomial(family.m, p, size=T).astype(float)
    elif kind == "geometric":
        if not theta >= 1.0:
            raise DomainError("geometric mean must be >= 1")
        values = g.geometric(p=1.0 / theta, size=T).astype(float)
    else:
        raise DomainError(f"family {kind!r} is not an i.i.d. sampling model")
    return core.batch(values)


def _step_count(horizon: float, step: float) -> int:
    if not step > 0:
        raise DomainError("step h must be > 0")
    n = round(horizon / step)
    if n < 1 or abs(n * step - horizon) > 1e-9 * max(1.0, horizon):
        raise DomainError(f"horizon {horizon} is not an integral multiple of h={step}")
    return n


def simulate_ou(theta: float, horizon: float, step: float, rng) -> SampleData:
    """Exact-transition path of dX = -theta X dt + dW started at X_0 = 0.

    X_{t+h} = exp(-theta h) X_t + eps with eps ~ N(0, (1-exp(-2 theta h))/(2 theta)).
    """
    if not theta > 0:
        raise DomainError("ou theta must be > 0")
    n = _step_count(horizon, step)
    g = _resolve_rng(rng)
    phi = math.exp(-theta * step)
    sd = math.sqrt((1.0 - math.exp(-2.0 * theta * step)) / (2.0 * theta))
    eps = g.standard_normal(n) * sd
    # AR(1) recursion x_k = phi x_{k-1} + eps_k via a C-level IIR filter.
    x = lfilter([1.0], [1.0, -phi], eps)
    values = np.concatenate(([0.0], x))
    return core.path(values, step)


def _cir_transition(x0: float, delta: float, sigma: float, theta: float,
                    dt: float, g: np.random.Generator) -> float:
    # Noncentral chi-square via its Poisson mixture of central chi-squares.
    scale = sigma ** 2 * (1.0 - math.exp(-theta * dt)) / (4.0 * theta)
    df = 4.0 * delta / sigma ** 2
    nonc = x0 * math.exp(-theta * dt) / scale
    k = g.poisson(0.5 * nonc)
    return scale * g.chisquare(df + 2.0 * k)


def simulate_cir(delta: float, sigma: float, theta: float, horizon: float,
                 step: float, rng, scheme: str = "exact") -> SampleData:
    """Path of dX = (delta - theta X) dt + sigma sqrt(X) dW, X_0 = 0.

    The default scheme samples the exact noncentral chi-square transition
    (degrees of freedom 4 delta / sigma**2).  ``scheme="euler"`` is a
    truncated Euler-Maruyama fallback kept for cross-checking.
    """
    if not (delta > 0 and sigma > 0 and theta > 0):
        raise DomainError("cir requires delta, sigma, theta > 0")
    n = _step_count(horizon, step)
    g = _resolve_rng(rng)
    values = np.empty(n + 1)
    values[0] = 0.0
    if scheme == "exact":
        x = 0.0
        for i in range(1, n + 1):
            x = _cir_transition(x, delta, sigma, theta, step, g)
            values[i] = x
        if np.any(values < 0):
            raise core.NumericalError("exact CIR transition produced a negative value")
    elif scheme == "euler":
        eps = g.standard_normal(n) * math.sqrt(step)
        x = 0.0
        for i in range(1, n + 1):
            x = x + (delta - theta * x) * step + sigma * math.sqrt(max(x, 0.0)) * eps[i - 1]
            values[i] = x
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    return core.path(values, step)
