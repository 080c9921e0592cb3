import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mdpci import rates
from mdpci.core import (
    ConfidenceInterval,
    DomainError,
    ExperimentRow,
    ModelSpec,
    NumericalError,
    SampleData,
    ScalingSchedule,
    Status,
    batch,
    make_schedule,
    path,
)


def test_make_schedule_figure_parameters():
    s = make_schedule(100000, 5 / 11, 0.01)
    assert s.b_T == pytest.approx(187.38, rel=1e-4)
    assert s.r_T == pytest.approx(1.8738e-5, rel=1e-4)


def test_make_schedule_hand_arithmetic():
    s = make_schedule(1e4, 5 / 11, 1e-4)
    assert s.r_T == pytest.approx(1e-4 * 10 ** (4 * (5 / 11 - 1)), rel=1e-12)
    assert s.r_T == pytest.approx(6.58e-7, rel=1e-3)


def test_make_schedule_rejects_boundaries():
    with pytest.raises(DomainError):
        make_schedule(1, 0.5, 1.0)
    with pytest.raises(DomainError):
        make_schedule(100, 0.0, 1.0)
    with pytest.raises(DomainError):
        make_schedule(100, 1.0, 1.0)
    with pytest.raises(DomainError):
        make_schedule(100, 0.5, 0.0)
    with pytest.raises(DomainError):
        make_schedule(100, 0.5, -1.0)


def test_schedule_allows_zero_rate_for_degenerate_solvers():
    s = ScalingSchedule(T=100, beta=0.5, r=0.0)
    assert s.r_T == 0.0


@given(st.floats(1.0001, 1e8), st.floats(0.01, 0.99), st.floats(1e-8, 1e3))
def test_scaled_radius_identity(T, beta, r):
    s = ScalingSchedule(T=T, beta=beta, r=r)
    assert s.r_T * s.a_T ** 2 == pytest.approx(r, rel=1e-12)
    assert s.r_T == pytest.approx(r * s.b_T / T, rel=1e-12)
    assert s.b_T > 1 and s.a_T > 1


@given(st.floats(2.0, 1e6), st.floats(0.05, 0.95), st.floats(1e-6, 10.0))
def test_scaled_radius_decreasing_in_horizon(T, beta, r):
    s1 = ScalingSchedule(T=T, beta=beta, r=r)
    s2 = ScalingSchedule(T=2 * T, beta=beta, r=r)
    assert s2.r_T < s1.r_T


def test_sample_data_validation():
    with pytest.raises(DomainError):
        batch([])
    with pytest.raises(DomainError):
        path([0.0], 0.1)
    with pytest.raises(DomainError):
        path([0.0, 1.0], 0.0)
    with pytest.raises(DomainError):
        SampleData(kind="weird", values=[1.0])
    p = path([0.0, 1.0, 2.0], 0.5)
    assert p.horizon == 1.0
    assert np.allclose(p.times, [0.0, 0.5, 1.0])
    assert not p.values.flags.writeable


def test_confidence_interval_invariants():
    with pytest.raises(NumericalError):
        ConfidenceInterval(2.0, 1.0, Status.FEASIBLE, "x")
    with pytest.raises(NumericalError):
        ConfidenceInterval(1.0, 2.0, Status.DEGENERATE, "x")
    ci = ConfidenceInterval(1.0, 2.0, Status.FEASIBLE, "x")
    assert ci.width == 1.0
    assert ci.contains(1.5) and not ci.contains(2.5)


def test_experiment_row_orders_quantiles():
    with pytest.raises(NumericalError):
        ExperimentRow(1.0, "v", "s", 0.0, q10=2.0, q90=1.0, count=3)
    nan_row = ExperimentRow(1.0, "v", "s", math.nan, math.nan, math.nan, 0)
    assert nan_row == ExperimentRow(1.0, "v", "s", math.nan, math.nan, math.nan, 0)
    assert nan_row != ExperimentRow(1.0, "v", "s", 0.0, math.nan, math.nan, 0)


def test_model_spec_validation():
    with pytest.raises(DomainError):
        ModelSpec(kind="ou", theta=-1.0)
    with pytest.raises(DomainError):
        ModelSpec(kind="cir", theta=1.0, delta=-5.0, sigma=2.0)
    with pytest.raises(DomainError):
        ModelSpec(kind="iid", theta=1.5, family=rates.bernoulli())
    with pytest.raises(DomainError):
        ModelSpec(kind="nonparam", losses=())
    ou = ModelSpec(kind="ou", theta=0.2)
    assert ou.cost_value() == pytest.approx(2.5)
    cir = ModelSpec(kind="cir", theta=1.0, delta=5.0, sigma=2.0)
    assert cir.cost_value() == pytest.approx(10.0)
