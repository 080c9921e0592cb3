"""CLT-based heuristic confidence intervals used as the comparison baseline.

The nominal level is tied to the schedule through ``alpha = exp(-r * b_T)``;
for large ``r * b_T`` the quantile ``inv_norm_cdf(1 - alpha/2)`` is computed
straight from ``log(alpha)`` through the tail branch, sidestepping the
cancellation in ``1 - alpha/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    ConfidenceInterval,
    DomainError,
    ScalingSchedule,
    Status,
    degenerate_interval,
    infeasible_interval,
)

# Rational minimax coefficients (Acklam): relative error below 1.15e-9 on
# the whole open unit interval, central branch for p in [0.02425, 0.97575]
# and a sqrt(-2 log p) tail branch outside.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425
_LOG_P_LOW = math.log(_P_LOW)


def _tail_quantile_from_log(log_p: float) -> float:
    """Lower-tail quantile from log(p), p <= 0.02425; returns a negative value."""
    q = math.sqrt(-2.0 * log_p)
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    return num / den


def _central_quantile(p: float) -> float:
    q = p - 0.5
    s = q * q
    num = ((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]
    den = ((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0
    return q * num / den


def inv_norm_cdf(p: float) -> float:
    """Standard normal quantile on (0, 1), rational approximation."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile argument must lie in (0,1), got {p}")
    if p == 0.5:
        return 0.0
    if p < _P_LOW:
        return _tail_quantile_from_log(math.log(p))
    if p > 1.0 - _P_LOW:
        return -_tail_quantile_from_log(math.log1p(-p))
    return _central_quantile(p)


def inv_norm_cdf_upper_from_log(log_q: float) -> float:
    """Phi^{-1}(1 - q) for an upper-tail mass given as log(q), q <= 0.02425."""
    if not log_q <= _LOG_P_LOW:
        raise DomainError("log tail mass must not exceed log(0.02425)")
    return -_tail_quantile_from_log(log_q)


@dataclass(frozen=True)
class CltSpec:
    """Nominal level and plug-in curvature of a CLT interval.

    ``alpha = exp(-r * b_T)`` is carried in log form so extreme schedules
    keep full tail precision.
    """

    log_alpha: float
    grad_j: Optional[np.ndarray] = None
    s_hat: Optional[np.ndarray] = None

    @classmethod
    def from_schedule(cls, schedule: ScalingSchedule, grad_j=None, s_hat=None):
        if schedule.r <= 0.0:
            raise DomainError("CLT level needs r > 0 so that alpha < 1")
        return cls(log_alpha=-schedule.r * schedule.b_T, grad_j=grad_j, s_hat=s_hat)

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    def z_value(self) -> float:
        """Phi^{-1}(1 - alpha/2), tail branch fed log(alpha) directly."""
        log_half_alpha = self.log_alpha - math.log(2.0)
        if log_half_alpha <= _LOG_P_LOW:
            return inv_norm_cdf_upper_from_log(log_half_alpha)
        return inv_norm_cdf(1.0 - 0.5 * self.alpha)


def clt_interval_ou(theta_hat: float, schedule: ScalingSchedule) -> ConfidenceInterval:
    """Symmetric CLT interval for the OU asymptotic variance:
    kappa = Phi^{-1}(1 - alpha/2) / (2^{3/2} theta_hat^{5/2} sqrt(T))."""
    method = "ou-clt"
    if theta_hat <= 0.0:
        return infeasible_interval(method, schedule)
    z = CltSpec.from_schedule(schedule).z_value()
    center = 1.0 / (2.0 * theta_hat)
    kappa = z / (2.0 ** 1.5 * theta_hat ** 2.5 * math.sqrt(schedule.T))
    return ConfidenceInterval(center - kappa, center + kappa, Status.FEASIBLE,
                              method, schedule)


def clt_interval_cir(theta_hat: float, delta: float, sigma: float,
                     schedule: ScalingSchedule) -> ConfidenceInterval:
    """Symmetric CLT interval for the CIR asymptotic variance:
    kappa = sigma^3 delta^{1/2} Phi^{-1}(1 - alpha/2) / (theta_hat^{5/2} sqrt(T))."""
    if not (delta > 0 and sigma > 0):
        raise DomainError("cir requires delta, sigma > 0")
    method = "cir-clt"
    if theta_hat <= 0.0:
        return infeasible_interval(method, schedule)
    z = CltSpec.from_schedule(schedule).z_value()
    center = delta * sigma ** 2 / (2.0 * theta_hat ** 2)
    kappa = sigma ** 3 * math.sqrt(delta) * z / (theta_hat ** 2.5 * math.sqrt(schedule.T))
    return ConfidenceInterval(center - kappa, center + kappa, Status.FEASIBLE,
                              method, schedule)


def clt_interval_generic(j_hat: float, grad_j, s_hat,
                         schedule: ScalingSchedule) -> ConfidenceInterval:
    """Delta-method CLT interval
    J_hat +- Phi^{-1}(1 - alpha/2) sqrt(grad' S grad / T)."""
    method = "generic-clt"
    grad = np.atleast_1d(np.asarray(grad_j, dtype=float))
    s = np.atleast_2d(np.asarray(s_hat, dtype=float))
    if s.shape != (grad.size, grad.size):
        raise DomainError("S shape must match the gradient")
    if not np.allclose(s, s.T, rtol=0, atol=1e-12):
        raise DomainError("S must be symmetric")
    eigs = np.linalg.eigvalsh(s)
    if eigs.min() < -1e-12 * max(1.0, abs(eigs.max())):
        raise DomainError("S must be positive semidefinite")
    quad = float(grad @ s @ grad)
    if quad <= 0.0:
        return degenerate_interval(j_hat, method, schedule)
    z = CltSpec.from_schedule(schedule).z_value()
    kappa = z * math.sqrt(quad / schedule.T)
    if kappa == 0.0:
        return degenerate_interval(j_hat, method, schedule)
    return ConfidenceInterval(j_hat - kappa, j_hat + kappa, Status.FEASIBLE,
                              method, schedule)
