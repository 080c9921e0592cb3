"""Optimal interval endpoints for every supported model.

All solvers implement the sublevel-set optimization at zero fattening: the
feasible parameter set is ``{theta : I_theta(a_T (theta_hat - theta)) <= r}``
and the interval is the range of the cost over it.  Closed forms are used
where available (OU, CIR, Gaussian-affine); the scalar mean families fall
back on bracketed bisection, and the non-parametric problems go through the
chi-square DRO dual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    ConfidenceInterval,
    ConvergenceError,
    DomainError,
    NumericalError,
    ScalingSchedule,
    Status,
    degenerate_interval,
    infeasible_interval,
)
from .rates import RateFamily

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# 1D search utilities (golden section and bisection with bracket expansion).

def golden_section_min(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-10, max_iter: int = 200):
    """Minimize a unimodal f on [lo, hi]; returns (argmin, min value)."""
    a, b = lo, hi
    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_GOLDEN * (b - a)
            f2 = f(x2)
    x = x1 if f1 <= f2 else x2
    return x, min(f1, f2)


def golden_section_max(f, lo, hi, tol: float = 1e-10, max_iter: int = 200):
    x, neg = golden_section_min(lambda t: -f(t), lo, hi, tol, max_iter)
    return x, -neg


def _bisect_root(g, a: float, b: float, tol: float = 1e-12,
                 max_iter: int = 200) -> float:
    """Root of g on [a, b] with g(a) <= 0 < g(b) (or the mirrored signs)."""
    ga, gb = g(a), g(b)
    if ga > 0 or gb <= 0:
        raise ConvergenceError("bisection bracket does not straddle the root")
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        mid = 0.5 * (a + b)
        if g(mid) <= 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# Cost specifications.

@dataclass(frozen=True)
class ScalarCostSpec:
    """Scalar cost of a scalar parameter with declared monotonicity.

    Built-in kinds: ``identity`` J(t)=t, ``ou_variance`` J(t)=1/(2t),
    ``cir_variance`` J(t)=delta sigma^2/(2 t^2).  ``custom`` carries an
    evaluator plus its direction on the feasible interval ("increasing",
    "decreasing", or "none" for extremization by golden section).
    """

    kind: str
    fn: Optional[Callable[[float], float]] = None
    direction: str = "none"
    delta: Optional[float] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.kind == "cir_variance" and not (self.delta > 0 and self.sigma > 0):
            raise DomainError("cir_variance cost needs delta, sigma > 0")
        if self.kind == "custom" and self.fn is None:
            raise DomainError("custom cost needs an evaluator")
        if self.kind not in ("identity", "ou_variance", "cir_variance", "custom"):
            raise DomainError(f"unknown cost kind {self.kind!r}")
        if self.direction not in ("increasing", "decreasing", "none"):
            raise DomainError(f"unknown direction {self.direction!r}")

    def declared_direction(self) -> str:
        if self.kind == "identity":
            return "increasing"
        if self.kind in ("ou_variance", "cir_variance"):
            return "decreasing"
        return self.direction

    def __call__(self, theta: float) -> float:
        if self.kind == "identity":
            return theta
        if self.kind == "ou_variance":
            if theta == math.inf:
                return 0.0
            return 1.0 / (2.0 * theta)
        if self.kind == "cir_variance":
            if theta == math.inf:
                return 0.0
            return self.delta * self.sigma ** 2 / (2.0 * theta ** 2)
        return self.fn(theta)


IDENTITY_COST = ScalarCostSpec(kind="identity")


def ou_variance_cost() -> ScalarCostSpec:
    return ScalarCostSpec(kind="ou_variance")


def cir_variance_cost(delta: float, sigma: float) -> ScalarCostSpec:
    return ScalarCostSpec(kind="cir_variance", delta=float(delta), sigma=float(sigma))


@dataclass(frozen=True)
class AffineCostSpec:
    """J(theta) = c . theta + d for vector theta."""

    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if not np.any(c != 0):
            raise DomainError("affine cost needs a nonzero gradient")
        object.__setattr__(self, "c", c)

    def __call__(self, theta) -> float:
        return float(self.c @ np.atleast_1d(theta)) + self.d


# ---------------------------------------------------------------------------
# Closed forms for the diffusion drift models.
#
# Both feasible sets are root intervals of a quadratic: with curvature
# constant ``c`` (r_T for OU, sigma^2 r_T / delta for CIR), the constraint
# (theta_hat - theta)^2 <= 2 c theta has roots theta_hat + c -+ sqrt(disc),
# disc = c^2 + 2 theta_hat c, and the asymptotic-variance cost is decreasing
# on theta > 0.

def _quadratic_feasible_roots(theta_hat: float, c: float):
    disc = c * c + 2.0 * theta_hat * c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    return theta_hat + c - sq, theta_hat + c + sq


def ou_interval(theta_hat: float, schedule: ScalingSchedule) -> ConfidenceInterval:
    """Closed-form interval for the OU asymptotic variance 1/(2 theta).

    For a positive estimate the endpoints are J(theta_hat) + kappa_-+ with
    kappa_+- = (r_T +- sqrt(r_T^2 + 2 theta_hat r_T)) / (2 theta_hat^2);
    Infeasible whenever the feasible set has no positive point.
    """
    method = "ou-closed-form"
    r_t = schedule.r_T
    if schedule.r == 0.0:
        if theta_hat > 0:
            return degenerate_interval(1.0 / (2.0 * theta_hat), method, schedule)
        return infeasible_interval(method, schedule)
    if theta_hat > 0:
        sq = math.sqrt(r_t * r_t + 2.0 * theta_hat * r_t)
        center = 1.0 / (2.0 * theta_hat)
        kappa_minus = (r_t - sq) / (2.0 * theta_hat ** 2)
        kappa_plus = (r_t + sq) / (2.0 * theta_hat ** 2)
        return ConfidenceInterval(center + kappa_minus, center + kappa_plus,
                                  Status.FEASIBLE, method, schedule)
    roots = _quadratic_feasible_roots(theta_hat, r_t)
    if roots is None or roots[1] <= 0.0:
        return infeasible_interval(method, schedule)
    t_min, t_max = roots
    upper = math.inf if t_min <= 0.0 else 1.0 / (2.0 * t_min)
    return ConfidenceInterval(1.0 / (2.0 * t_max), upper, Status.FEASIBLE,
                              method, schedule)


def cir_interval(theta_hat: float, delta: float, sigma: float,
                 schedule: ScalingSchedule) -> ConfidenceInterval:
    """Closed-form interval for the CIR asymptotic variance delta sigma^2/(2 theta^2)."""
    if not (delta > 0 and sigma > 0):
        raise DomainError("cir requires delta, sigma > 0")
    method = "cir-closed-form"
    if schedule.r == 0.0:
        if theta_hat > 0:
            return degenerate_interval(delta * sigma ** 2 / (2.0 * theta_hat ** 2),
                                       method, schedule)
        return infeasible_interval(method, schedule)
    c = sigma ** 2 * schedule.r_T / delta
    roots = _quadratic_feasible_roots(theta_hat, c)
    if roots is None or roots[1] <= 0.0:
        return infeasible_interval(method, schedule)
    t_min, t_max = roots
    scale = delta * sigma ** 2 / 2.0
    upper = math.inf if t_min <= 0.0 else scale / t_min ** 2
    return ConfidenceInterval(scale / t_max ** 2, upper, Status.FEASIBLE,
                              method, schedule)


def cir_interval_sdp_dual(theta_hat: float, delta: float, sigma: float,
                          schedule: ScalingSchedule,
                          max_doublings: int = 60) -> ConfidenceInterval:
    """CIR interval through the 2x2 semidefinite duals of the quadratic programs.

    Positive semidefiniteness of the dual matrix reduces to nonnegative
    diagonal plus nonnegative determinant, which pins the optimal gamma for
    fixed lambda; the scalar concave profile in lambda is maximized by golden
    section on a geometrically grown bracket.  Requires a positive estimate
    (the strictly feasible point 1/theta_hat backs strong duality).
    """
    if not (delta > 0 and sigma > 0):
        raise DomainError("cir requires delta, sigma > 0")
    method = "cir-sdp-dual"
    if theta_hat <= 0.0:
        return infeasible_interval(method, schedule)
    if schedule.r == 0.0:
        return degenerate_interval(delta * sigma ** 2 / (2.0 * theta_hat ** 2),
                                   method, schedule)
    q = delta * sigma ** 2 / 2.0
    c1 = theta_hat + sigma ** 2 * schedule.r_T / delta
    th2 = theta_hat ** 2

    def gamma_lower(lam: float) -> float:
        # det of [[q + lam th^2, -lam c1], [-lam c1, lam - gamma]] >= 0
        return lam - lam * lam * c1 * c1 / (q + lam * th2)

    def gamma_upper(mu: float) -> float:
        # same with -q on the leading diagonal entry; lam > q / th^2 required
        lam = q / th2 + mu
        denom = lam * th2 - q
        if denom <= 0.0:
            return -math.inf
        return lam - lam * lam * c1 * c1 / denom

    def maximize(profile) -> float:
        hi = 1.0
        doublings = 0
        while profile(hi) >= profile(hi / 2.0):
            hi *= 2.0
            doublings += 1
            if doublings > max_doublings:
                raise ConvergenceError("dual bracket growth exceeded 60 doublings")
        _, value = golden_section_max(profile, 0.0, hi)
        return value

    lower = maximize(gamma_lower)
    upper = -maximize(gamma_upper)
    return ConfidenceInterval(lower, upper, Status.FEASIBLE, method, schedule)


# ---------------------------------------------------------------------------
# Generic scalar mean families: bracketed bisection on the sublevel boundary.

_EXPANSION_CAP = 1e12


def _feasible_gap(family: RateFamily, theta_hat: float, r_t: float):
    def g(theta: float) -> float:
        return (theta_hat - theta) ** 2 - 2.0 * r_t * float(family.variance(theta))

    return g


def _probe_feasible_point(family: RateFamily, g, theta_hat: float):
    lo, hi = family.domain_bounds()
    if math.isfinite(lo) and math.isfinite(hi):
        probes = np.linspace(lo, hi, 4003)[1:-1]
    else:
        magnitudes = np.concatenate([-np.logspace(9, -9, 1000),
                                     np.logspace(-9, 9, 1000)])
        probes = magnitudes[(magnitudes > lo) & (magnitudes < hi)]
    for theta in probes:
        if g(float(theta)) <= 0.0:
            return float(theta)
    return None


def scalar_mean_interval(family: RateFamily, theta_hat: float,
                         schedule: ScalingSchedule,
                         cost: ScalarCostSpec = IDENTITY_COST) -> ConfidenceInterval:
    """Interval for a scalar Table-row family by bisecting the sublevel boundary.

    The feasible set {theta : (a_T (theta_hat - theta))^2 <= 2 r C(theta)}
    is an interval inside the family's domain; its endpoints are located by
    geometric bracket expansion plus bisection and then mapped through the
    (monotone or golden-sectioned) cost.
    """
    method = "scalar-generic"
    if family.kind == "normal" and family.dim > 1:
        raise DomainError("scalar_mean_interval needs a scalar family")
    dlo, dhi = family.domain_bounds()
    in_domain = dlo < theta_hat < dhi

    if schedule.r == 0.0:
        if in_domain:
            return degenerate_interval(cost(theta_hat), method, schedule)
        return infeasible_interval(method, schedule)

    g = _feasible_gap(family, theta_hat, schedule.r_T)

    if in_domain and g(theta_hat) <= 0.0:
        seed = theta_hat
    else:
        seed = _probe_feasible_point(family, g, theta_hat)
        if seed is None:
            return infeasible_interval(method, schedule)

    scale = max(abs(seed), 1.0)

    def endpoint(direction: int) -> float:
        bound = dhi if direction > 0 else dlo
        step = 1e-9 * scale
        prev = seed
        while True:
            cand = seed + direction * step
            if math.isfinite(bound) and (cand - bound) * direction >= 0:
                edge = bound - direction * 1e-13 * scale
                if (edge - prev) * direction <= 0 or g(edge) <= 0.0:
                    return bound
                cand = edge
                break
            if g(cand) > 0.0:
                break
            prev = cand
            step *= 2.0
            if step > _EXPANSION_CAP * scale:
                return direction * math.inf
        if direction > 0:
            return _bisect_root(g, prev, cand)
        return -_bisect_root(lambda t: g(-t), -prev, -cand)

    theta_lo = endpoint(-1)
    theta_hi = endpoint(+1)

    direction = cost.declared_direction()
    if cost.kind == "custom" and direction in ("increasing", "decreasing"):
        _check_monotone(cost, theta_lo, theta_hi, direction)

    if direction == "increasing":
        lower, upper = cost(theta_lo), cost(theta_hi)
    elif direction == "decreasing":
        lower, upper = cost(theta_hi), cost(theta_lo)
    else:
        if not (math.isfinite(theta_lo) and math.isfinite(theta_hi)):
            raise ConvergenceError("cannot extremize a custom cost on an unbounded set")
        _, lower = golden_section_min(cost, theta_lo, theta_hi)
        _, upper = golden_section_max(cost, theta_lo, theta_hi)
        lower = min(lower, cost(theta_lo), cost(theta_hi))
        upper = max(upper, cost(theta_lo), cost(theta_hi))
    if lower == upper:
        return degenerate_interval(lower, method, schedule)
    return ConfidenceInterval(lower, upper, Status.FEASIBLE, method, schedule)


def _check_monotone(cost, lo: float, hi: float, direction: str):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return
    values = [cost(t) for t in np.linspace(lo, hi, 100)]
    diffs = np.diff(values)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(values))))
    ok = np.all(diffs >= -slack) if direction == "increasing" else np.all(diffs <= slack)
    if not ok:
        raise DomainError(f"cost is not {direction} on the feasible interval")


# ---------------------------------------------------------------------------
# Gaussian mean vector with affine cost: ellipsoid closed form.

def gaussian_affine_interval(theta_hat, sigma_matrix, cost: AffineCostSpec,
                             schedule: ScalingSchedule) -> ConfidenceInterval:
    """Range of an affine cost over the ellipsoid
    (theta - theta_hat)' Sigma^{-1} (theta - theta_hat) <= 2 r_T.
    """
    method = "gaussian-affine"
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    sig = np.atleast_2d(np.asarray(sigma_matrix, dtype=float))
    if sig.shape != (theta_hat.size, theta_hat.size):
        raise DomainError("Sigma shape must match theta_hat")
    if not np.allclose(sig, sig.T, rtol=0, atol=1e-12):
        raise DomainError("Sigma must be symmetric")
    try:
        np.linalg.cholesky(sig)
    except np.linalg.LinAlgError as exc:
        raise DomainError("Sigma must be positive definite") from exc
    center = cost(theta_hat)
    if schedule.r == 0.0:
        return degenerate_interval(center, method, schedule)
    half = math.sqrt(2.0 * schedule.r_T * float(cost.c @ sig @ cost.c))
    if half == 0.0:
        return degenerate_interval(center, method, schedule)
    return ConfidenceInterval(center - half, center + half, Status.FEASIBLE,
                              method, schedule)


# ---------------------------------------------------------------------------
# Non-parametric expected loss: chi-square DRO dual.

def _dual_objective(alpha: float, losses: np.ndarray, r_t: float) -> float:
    args = alpha - losses
    bad = args < -1e-12
    if np.any(bad):
        raise NumericalError("dual objective called outside its domain")
    args = np.where(args < 0.0, 0.0, args)
    mean_root = float(np.mean(np.sqrt(args)))
    return alpha - mean_root ** 2 / (2.0 * r_t + 1.0)


def dro_dual_upper(losses, schedule: ScalingSchedule) -> float:
    """Worst-case expected loss over the chi-square ball, dual route.

    Minimizes ``alpha - mean(sqrt(alpha - l))^2 / (2 r_T + 1)`` over the
    bracket [max(l), max(l) + (max(l) - mean(l)) / (2 r_T)]; the objective
    is convex there.  A zero radius returns the sample mean directly.
    """
    losses = np.asarray(losses, dtype=float)
    if losses.size == 0:
        raise DomainError("losses must be nonempty")
    r_t = schedule.r_T
    mean = float(losses.mean())
    if r_t == 0.0:
        return mean
    lbar = float(losses.max())
    alpha_hi = lbar + (lbar - mean) / (2.0 * r_t)
    if alpha_hi <= lbar:
        return lbar
    f = lambda a: _dual_objective(a, losses, r_t)
    x, fx = golden_section_min(f, lbar, alpha_hi)
    return min(fx, f(lbar), f(alpha_hi))


def dro_dual_lower(losses, schedule: ScalingSchedule) -> float:
    """Best-case expected loss: the upper dual applied to negated losses."""
    losses = np.asarray(losses, dtype=float)
    return -dro_dual_upper(-losses, schedule)


def stochastic_program_interval(loss_matrix, schedule: ScalingSchedule) -> ConfidenceInterval:
    """Interval for min_z E[loss(X, z)] over a finite decision set.

    Both endpoints take the minimum over decisions of the per-column dual
    bounds (the inner sup and the outer min over z interchange).
    """
    method = "dro-dual"
    matrix = np.atleast_2d(np.asarray(loss_matrix, dtype=float))
    if matrix.ndim != 2 or matrix.shape[1] < 1 or matrix.shape[0] < 1:
        raise DomainError("loss matrix must be T x |Z| with |Z| >= 1")
    upper = min(dro_dual_upper(matrix[:, z], schedule) for z in range(matrix.shape[1]))
    lower = min(dro_dual_lower(matrix[:, z], schedule) for z in range(matrix.shape[1]))
    if lower == upper:
        return degenerate_interval(lower, method, schedule)
    return ConfidenceInterval(lower, upper, Status.FEASIBLE, method, schedule)
