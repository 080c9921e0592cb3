"""Independent brute-force verifiers for the closed forms and duals.

Everything here trades speed for transparency: dense grid scans, exhaustive
simplex enumeration, and first-order-condition bisection.  Production solvers
never call into this module; it backs the test suite and the ``oracle-check``
CLI subcommand.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfidenceInterval,
    ConvergenceError,
    DomainError,
    GridTooCoarseWarning,
    InfeasibleError,
    ScalingSchedule,
    Status,
)
from .rates import RateFamily

_SQRT_PI = math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# Normal CDF from an erfc series/continued fraction, independent of the
# rational quantile approximation it is used to test.

def _erf_series(y: float) -> float:
    # Maclaurin series of erf; adequate for |y| <= 2 where cancellation
    # stays below ~1e-14 relative.
    term = y
    total = y
    n = 0
    y2 = y * y
    while abs(term) > 1e-20 * abs(total) + 1e-300:
        n += 1
        term *= -y2 / n
        total += term / (2 * n + 1)
    return 2.0 / _SQRT_PI * total


def _erfc_cf(y: float) -> float:
    # erfc(y) = exp(-y^2)/sqrt(pi) * 1/(y + (1/2)/(y + 1/(y + (3/2)/(y + ...))))
    # evaluated with the modified Lentz algorithm; valid for y >= 2.
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    for n in range(1, 400):
        a = 1.0 if n == 1 else (n - 1) / 2.0
        d = y + a * d
        if d == 0.0:
            d = tiny
        c = y + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-y * y) / _SQRT_PI * f


def erfc_oracle(y: float) -> float:
    if y < 0:
        return 2.0 - erfc_oracle(-y)
    if y < 2.0:
        return 1.0 - _erf_series(y)
    return _erfc_cf(y)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function, series-oracle route."""
    return 0.5 * erfc_oracle(-x / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# Grid oracle for the 1D sublevel-set interval problems.

def grid_interval_oracle(family: RateFamily, cost, theta_hat: float,
                         schedule: ScalingSchedule, grid) -> ConfidenceInterval:
    """Scan a theta grid, keep sublevel members, extremize the cost over them.

    ``grid`` is ``(lo, hi, n)`` with ``n >= 1000``; ``cost`` must accept a
    numpy array.  Warns :class:`GridTooCoarseWarning` below 10 kept points.
    """
    lo, hi, n = grid
    n = int(n)
    if n < 1000:
        raise DomainError("grid oracle needs n >= 1000 points")
    if not lo < hi:
        raise DomainError("grid bounds must satisfy lo < hi")
    thetas = np.linspace(lo, hi, n)
    dlo, dhi = family.domain_bounds()
    # All variance maps are polynomial, so evaluating outside the domain is
    # safe; out-of-domain points are masked away afterwards.
    c = np.asarray(family.variance(thetas), dtype=float)
    # I(theta, a_T (theta_hat - theta)) <= r  <=>  (theta_hat-theta)^2 <= 2 r_T C
    keep = ((thetas > dlo) & (thetas < dhi) & (c > 0)
            & ((theta_hat - thetas) ** 2 <= 2.0 * schedule.r_T * c))
    kept = thetas[keep]
    if kept.size == 0:
        return ConfidenceInterval(math.nan, math.nan, Status.INFEASIBLE,
                                  "grid-oracle", schedule)
    if kept.size < 10:
        warnings.warn(
            f"only {kept.size} feasible grid points", GridTooCoarseWarning,
            stacklevel=2,
        )
    values = np.asarray(cost(kept), dtype=float)
    lower = float(values.min())
    upper = float(values.max())
    status = Status.DEGENERATE if lower == upper else Status.FEASIBLE
    return ConfidenceInterval(lower, upper, status, "grid-oracle", schedule)


# ---------------------------------------------------------------------------
# Exhaustive simplex oracle for the chi-square DRO problems (T <= 4).

def _chi2_term(w: np.ndarray, u: float):
    return (w - u) ** 2 / w


def simplex_dro_oracle(losses, schedule: ScalingSchedule, resolution: int = 2000):
    """Extreme expected losses over the lattice simplex inside the chi2 ball.

    Weights run over multiples of 1/k; points with divergence above
    ``2 r_T`` (plus a 1e-12 rounding slack) are discarded.
    """
    losses = np.asarray(losses, dtype=float)
    T = losses.size
    if not 1 <= T <= 4:
        raise DomainError("simplex oracle supports 1 <= T <= 4")
    k = int(resolution)
    if k < 200:
        raise DomainError("simplex oracle needs resolution k >= 200")
    budget = 2.0 * schedule.r_T + 1e-12
    u = 1.0 / T

    if T == 1:
        return float(losses[0]), float(losses[0])

    best_lo = math.inf
    best_hi = -math.inf

    def leaf(partial_div: float, partial_dot: float, units_left: int,
             la: float, lb: float):
        nonlocal best_lo, best_hi
        j = np.arange(1, units_left)
        if j.size == 0:
            return
        wa = j / k
        wb = (units_left - j) / k
        div = partial_div + _chi2_term(wa, u) + _chi2_term(wb, u)
        ok = div <= budget
        if not np.any(ok):
            return
        vals = partial_dot + wa[ok] * la + wb[ok] * lb
        best_lo = min(best_lo, float(vals.min()))
        best_hi = max(best_hi, float(vals.max()))

    def recurse(depth: int, partial_div: float, partial_dot: float, units_left: int):
        remaining = T - depth
        if remaining == 2:
            leaf(partial_div, partial_dot, units_left, losses[depth], losses[depth + 1])
            return
        # Convexity bound: remaining divergence is minimized by equal weights.
        for j in range(1, units_left - remaining + 2):
            w = j / k
            div = partial_div + float(_chi2_term(np.float64(w), u))
            rest = units_left - j
            w_eq = rest / (k * (remaining - 1))
            least_rest = (remaining - 1) * float(_chi2_term(np.float64(w_eq), u))
            if div + least_rest > budget:
                continue
            recurse(depth + 1, div, partial_dot + w * losses[depth], rest)

    recurse(0, 0.0, 0.0, k)
    if not math.isfinite(best_lo):
        raise InfeasibleError("no simplex grid point satisfies the divergence budget")
    return best_lo, best_hi


# ---------------------------------------------------------------------------
# Lagrange-multiplier oracle for the same DRO problems, any T.

def _upper_multiplier(losses: np.ndarray, r_T: float, max_outer: int = 300):
    T = losses.size
    lbar = float(losses.max())
    spread = lbar - float(losses.min())
    if spread == 0.0:
        return lbar
    target = 2.0 * r_T

    def weights_for(eta: float):
        # Stationarity gives w_t = sqrt(lam) / (T sqrt(eta - l_t)); the inner
        # bisection on lam enforces sum(w) = 1.
        root = np.sqrt(eta - losses)

        def total(lam: float) -> float:
            return float(np.sum(np.sqrt(lam) / (T * root)))

        lam_hi = 1.0
        it = 0
        while total(lam_hi) < 1.0:
            lam_hi *= 4.0
            it += 1
            if it > 600:
                raise ConvergenceError("inner multiplier bracket failed")
        lam_lo = lam_hi
        while total(lam_lo) > 1.0:
            lam_lo /= 4.0
            it += 1
            if it > 1200:
                raise ConvergenceError("inner multiplier bracket failed")
        for _ in range(120):
            mid = 0.5 * (lam_lo + lam_hi)
            if total(mid) < 1.0:
                lam_lo = mid
            else:
                lam_hi = mid
        lam = 0.5 * (lam_lo + lam_hi)
        w = np.sqrt(lam) / (T * root)
        w = w / np.sum(w)
        return w

    def divergence(eta: float) -> float:
        w = weights_for(eta)
        return float(np.sum((w - 1.0 / T) ** 2 / w))

    outer = 0
    eta_hi = lbar + spread
    while divergence(eta_hi) > target:
        eta_hi = lbar + 2.0 * (eta_hi - lbar)
        outer += 1
        if outer > max_outer:
            raise ConvergenceError("outer multiplier bracket failed (high side)")
    eta_lo = lbar + 1e-9 * spread
    while divergence(eta_lo) <= target:
        eta_lo = lbar + 0.25 * (eta_lo - lbar)
        outer += 1
        if eta_lo - lbar < 1e-280 or outer > max_outer:
            raise ConvergenceError("outer multiplier bracket failed (low side)")
    while eta_hi - eta_lo > 1e-13 * max(1.0, abs(eta_hi)):
        outer += 1
        if outer > max_outer:
            raise ConvergenceError("outer multiplier bisection exhausted")
        mid = 0.5 * (eta_lo + eta_hi)
        if divergence(mid) > target:
            eta_lo = mid
        else:
            eta_hi = mid
    w = weights_for(eta_hi)
    return float(np.sum(w * losses))


def multiplier_dro_oracle(losses, schedule: ScalingSchedule):
    """(lower, upper) worst-case expected losses via primal multipliers."""
    losses = np.asarray(losses, dtype=float)
    if losses.size == 0:
        raise DomainError("losses must be nonempty")
    if schedule.r_T == 0.0:
        mean = float(losses.mean())
        return mean, mean
    upper = _upper_multiplier(losses, schedule.r_T)
    lower = -_upper_multiplier(-losses, schedule.r_T)
    return lower, upper


# ---------------------------------------------------------------------------
# Seeded cross-validation corpora shared by the acceptance suite and the
# `oracle-check` subcommand.

@dataclass(frozen=True)
class OuInstance:
    theta_hat: float
    schedule: ScalingSchedule


@dataclass(frozen=True)
class CirInstance:
    theta_hat: float
    delta: float
    sigma: float
    schedule: ScalingSchedule


@dataclass(frozen=True)
class DroInstance:
    losses: tuple
    schedule: ScalingSchedule


def _schedule_for_radius(g, r_t_lo: float, r_t_hi: float) -> ScalingSchedule:
    T = float(np.exp(g.uniform(np.log(1e2), np.log(1e6))))
    beta = float(g.uniform(0.25, 0.75))
    r_t = float(np.exp(g.uniform(np.log(r_t_lo), np.log(r_t_hi))))
    r = r_t * T ** (1.0 - beta)
    return ScalingSchedule(T=T, beta=beta, r=r)


def ou_corpus(n: int = 200, seed: int = 20240) -> list:
    """Positive-estimate OU instances; radii small enough that a 1e6-point
    grid resolves both endpoints to 1e-6 relative."""
    g = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        theta_hat = float(np.exp(g.uniform(np.log(0.05), np.log(3.0))))
        sched = _schedule_for_radius(g, 1e-6, min(1e-2, 0.05 * theta_hat))
        out.append(OuInstance(theta_hat=theta_hat, schedule=sched))
    return out


def cir_corpus(n: int = 200, n_negative: int = 40, seed: int = 20241) -> list:
    g = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        theta_hat = float(np.exp(g.uniform(np.log(0.1), np.log(3.0))))
        delta = float(g.uniform(0.5, 8.0))
        sigma = float(g.uniform(0.5, 3.0))
        # keep c = sigma^2 r_T / delta small relative to theta_hat
        c_hi = 0.015 * theta_hat * delta / sigma ** 2
        sched = _schedule_for_radius(g, 1e-7 * min(1.0, c_hi * 1e5), c_hi)
        out.append(CirInstance(theta_hat, delta, sigma, sched))
    for _ in range(n_negative):
        theta_hat = -float(np.exp(g.uniform(np.log(0.01), np.log(2.0))))
        delta = float(g.uniform(0.5, 8.0))
        sigma = float(g.uniform(0.5, 3.0))
        c_hi = 0.5 * abs(theta_hat) * delta / sigma ** 2
        sched = _schedule_for_radius(g, 1e-7 * min(1.0, c_hi * 1e5), c_hi)
        out.append(CirInstance(theta_hat, delta, sigma, sched))
    return out


def dro_small_corpus(seed: int = 20242) -> list:
    """T <= 4 instances with unit-range losses, sized for k=2000 enumeration."""
    g = np.random.default_rng(seed)
    out = []
    plan = [(1, 6, 0.3), (2, 30, 0.3), (3, 20, 0.2), (4, 4, 0.08)]
    for T, count, r_t_hi in plan:
        for _ in range(count):
            losses = tuple(float(x) for x in g.uniform(0.0, 1.0, size=T))
            T_sched = float(g.uniform(50.0, 5e4))
            beta = float(g.uniform(0.3, 0.7))
            r_t = float(np.exp(g.uniform(np.log(0.01), np.log(r_t_hi))))
            r = r_t * T_sched ** (1.0 - beta)
            out.append(DroInstance(losses, ScalingSchedule(T_sched, beta, r)))
    return out


def dro_t50_corpus(n: int = 100, seed: int = 20243) -> list:
    g = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        scale = float(np.exp(g.uniform(np.log(0.5), np.log(4.0))))
        shift = float(g.uniform(-1.0, 1.0))
        losses = tuple(float(x) for x in shift + scale * g.uniform(0.0, 1.0, size=50))
        T_sched = float(g.uniform(100.0, 1e5))
        beta = float(g.uniform(0.3, 0.7))
        r_t = float(np.exp(g.uniform(np.log(1e-3), np.log(0.5))))
        r = r_t * T_sched ** (1.0 - beta)
        out.append(DroInstance(losses, ScalingSchedule(T_sched, beta, r)))
    return out


def oracle_check(verbose: bool = False) -> list:
    """Run the full cross-validation corpus; returns (name, n, max_err, ok) rows."""
    # Imported here so the production solvers never depend on this module.
    from . import solve
    from .rates import cir as cir_family
    from .rates import ou as ou_family

    rows = []

    worst = 0.0
    for inst in ou_corpus():
        ci = solve.ou_interval(inst.theta_hat, inst.schedule)
        lo, hi = _ou_window(inst.theta_hat, inst.schedule)
        ref = grid_interval_oracle(ou_family(), lambda t: 1.0 / (2.0 * t),
                                   inst.theta_hat, inst.schedule, (lo, hi, 10 ** 6))
        worst = max(worst, _relative_gap(ci, ref))
    rows.append(("ou-closed-form-vs-grid", len(ou_corpus()), worst, worst <= 1e-6))

    worst = 0.0
    agree = True
    corpus = cir_corpus()
    for inst in corpus:
        ci = solve.cir_interval(inst.theta_hat, inst.delta, inst.sigma, inst.schedule)
        dual = solve.cir_interval_sdp_dual(inst.theta_hat, inst.delta, inst.sigma,
                                           inst.schedule)
        if inst.theta_hat <= 0:
            agree &= ci.status is Status.INFEASIBLE and dual.status is Status.INFEASIBLE
            continue
        worst = max(worst, _endpoint_gap(ci, dual))
        lo, hi = _cir_window(inst)
        j = lambda t, d=inst.delta, s=inst.sigma: d * s ** 2 / (2.0 * t ** 2)
        ref = grid_interval_oracle(cir_family(inst.delta, inst.sigma), j,
                                   inst.theta_hat, inst.schedule, (lo, hi, 10 ** 6))
        worst = max(worst, _relative_gap(ci, ref))
    rows.append(("cir-triple-agreement", len(corpus), worst, agree and worst <= 1e-6))

    worst = 0.0
    for inst in dro_small_corpus():
        up = solve.dro_dual_upper(list(inst.losses), inst.schedule)
        lo = solve.dro_dual_lower(list(inst.losses), inst.schedule)
        olo, ohi = simplex_dro_oracle(list(inst.losses), inst.schedule, 2000)
        worst = max(worst, abs(up - ohi), abs(lo - olo))
    rows.append(("dro-dual-vs-simplex", len(dro_small_corpus()), worst, worst <= 2e-3))

    worst = 0.0
    for inst in dro_t50_corpus():
        up = solve.dro_dual_upper(list(inst.losses), inst.schedule)
        lo = solve.dro_dual_lower(list(inst.losses), inst.schedule)
        olo, ohi = multiplier_dro_oracle(list(inst.losses), inst.schedule)
        scale = max(1.0, abs(ohi), abs(olo))
        worst = max(worst, abs(up - ohi) / scale, abs(lo - olo) / scale)
    rows.append(("dro-dual-vs-multiplier", len(dro_t50_corpus()), worst, worst <= 1e-8))

    if verbose:
        for name, n, err, ok in rows:
            print(f"{name}: n={n} max_err={err:.3e} {'PASS' if ok else 'FAIL'}")
    return rows


def _relative_gap(ci: ConfidenceInterval, ref: ConfidenceInterval) -> float:
    if ci.status is Status.INFEASIBLE or ref.status is Status.INFEASIBLE:
        return 0.0 if ci.status == ref.status else math.inf
    gaps = []
    for a, b in ((ci.lower, ref.lower), (ci.upper, ref.upper)):
        gaps.append(abs(a - b) / max(abs(a), abs(b), 1e-300))
    return max(gaps)


def _endpoint_gap(a: ConfidenceInterval, b: ConfidenceInterval) -> float:
    return _relative_gap(a, b)


def _ou_window(theta_hat: float, schedule: ScalingSchedule):
    r_t = schedule.r_T
    disc = math.sqrt(r_t * r_t + 2.0 * theta_hat * r_t)
    t_min = theta_hat + r_t - disc
    t_max = theta_hat + r_t + disc
    span = max(t_max - t_min, 1e-12 * theta_hat)
    return max(t_min - 0.02 * span, 1e-300), t_max + 0.02 * span


def _cir_window(inst: CirInstance):
    c = inst.sigma ** 2 * inst.schedule.r_T / inst.delta
    disc = math.sqrt(c * c + 2.0 * inst.theta_hat * c)
    t_min = inst.theta_hat + c - disc
    t_max = inst.theta_hat + c + disc
    span = max(t_max - t_min, 1e-12 * inst.theta_hat)
    return max(t_min - 0.02 * span, 1e-300), t_max + 0.02 * span
