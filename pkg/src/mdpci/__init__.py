"""Moderate-deviation-optimal confidence intervals for cost functionals.

Subpackages: :mod:`mdpci.core` (types and scaling), :mod:`mdpci.rates`
(rate functions), :mod:`mdpci.simulate`, :mod:`mdpci.estimate`,
:mod:`mdpci.solve` (interval solvers), :mod:`mdpci.baseline` (CLT
comparison), :mod:`mdpci.oracle` (brute-force verifiers),
:mod:`mdpci.experiments` (Monte Carlo harness), :mod:`mdpci.cli`.
"""

from .core import (
    ConfidenceInterval,
    ConvergenceError,
    DegenerateData,
    DomainError,
    ExperimentResult,
    ExperimentRow,
    ModelSpec,
    SampleData,
    ScalingSchedule,
    Status,
    make_schedule,
)

__all__ = [
    "ConfidenceInterval",
    "ConvergenceError",
    "DegenerateData",
    "DomainError",
    "ExperimentResult",
    "ExperimentRow",
    "ModelSpec",
    "SampleData",
    "ScalingSchedule",
    "Status",
    "make_schedule",
]

__version__ = "0.1.0"
