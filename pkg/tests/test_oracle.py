import math

import numpy as np
import pytest

from mdpci import oracle, rates, solve
from mdpci.core import (
    DomainError,
    GridTooCoarseWarning,
    InfeasibleError,
    ScalingSchedule,
    Status,
)


def sched_with_radius(r_t, T=1000.0, beta=0.5):
    return ScalingSchedule(T=T, beta=beta, r=r_t * T ** (1.0 - beta))


def test_normal_cdf_series_oracle_matches_libm():
    xs = np.concatenate([np.linspace(-37.0, 8.0, 500), [-1e-3, 0.0, 1e-3]])
    worst = max(abs(oracle.normal_cdf(float(x)) - 0.5 * math.erfc(-x / math.sqrt(2)))
                for x in xs)
    assert worst < 5e-16


def test_grid_oracle_matches_ou_closed_form():
    sched = sched_with_radius(0.01)
    ci = solve.ou_interval(0.2, sched)
    lo, hi = oracle._ou_window(0.2, sched)
    ref = oracle.grid_interval_oracle(rates.ou(), lambda t: 1.0 / (2.0 * t),
                                      0.2, sched, (lo, hi, 10 ** 5))
    spacing = (hi - lo) / (10 ** 5 - 1)
    bound = spacing / (2.0 * (0.2 - math.sqrt(2 * 0.2 * 0.01)) ** 2) * 1.2
    assert abs(ref.upper - ci.upper) <= bound
    assert abs(ref.lower - ci.lower) <= bound


def test_grid_oracle_zero_rate_degenerate_when_estimate_on_grid():
    sched = ScalingSchedule(T=1000.0, beta=0.5, r=0.0)
    # grid with 1001 points on [0.1, 0.3] contains 0.2 exactly
    ref = oracle.grid_interval_oracle(rates.ou(), lambda t: 1.0 / (2.0 * t),
                                      0.2, sched, (0.1, 0.3, 1001))
    assert ref.status is Status.DEGENERATE
    assert ref.lower == pytest.approx(2.5, rel=1e-12)


def test_grid_oracle_refines_toward_cir_closed_form():
    sched = sched_with_radius(0.0125)
    ci = solve.cir_interval(1.0, 5.0, 2.0, sched)
    cost = lambda t: 10.0 / t ** 2
    fam = rates.cir(5.0, 2.0)
    gaps = []
    for n in (10 ** 4, 10 ** 5, 10 ** 6):
        ref = oracle.grid_interval_oracle(fam, cost, 1.0, sched, (0.5, 1.5, n))
        gaps.append(max(abs(ref.upper - ci.upper), abs(ref.lower - ci.lower)))
    assert gaps[2] <= 1e-3
    assert gaps[2] < gaps[1] < gaps[0]
    # O(1/n) refinement up to rounding: tenfold points shrink the gap ~tenfold
    assert gaps[1] < 0.3 * gaps[0]


def test_grid_oracle_warns_when_too_few_points_survive():
    sched = sched_with_radius(1e-9)
    with pytest.warns(GridTooCoarseWarning):
        ci = oracle.grid_interval_oracle(rates.ou(), lambda t: 1.0 / (2.0 * t),
                                         0.2, sched, (0.01, 2.0, 2000))
    assert ci.status in (Status.FEASIBLE, Status.DEGENERATE)


def test_grid_oracle_infeasible_and_validation():
    sched = sched_with_radius(1e-6)
    ci = oracle.grid_interval_oracle(rates.ou(), lambda t: t, -5.0, sched,
                                     (0.1, 1.0, 1000))
    assert ci.status is Status.INFEASIBLE
    with pytest.raises(DomainError):
        oracle.grid_interval_oracle(rates.ou(), lambda t: t, 0.2, sched, (0.1, 1.0, 10))


def test_simplex_oracle_uniform_weights_always_feasible():
    sched = sched_with_radius(1e-9)
    lo, hi = oracle.simplex_dro_oracle([0.2, 0.4, 0.8, 0.6], sched, resolution=2000)
    mean = 0.5
    assert lo <= mean <= hi
    assert hi - lo < 1e-2


def test_simplex_oracle_constant_losses_exact():
    lo, hi = oracle.simplex_dro_oracle([2.5, 2.5, 2.5], sched_with_radius(0.3), 600)
    assert (lo, hi) == (2.5, 2.5)


def test_simplex_oracle_single_atom():
    assert oracle.simplex_dro_oracle([1.7], sched_with_radius(0.3), 500) == (1.7, 1.7)


def test_simplex_oracle_rejects_bad_arguments():
    sched = sched_with_radius(0.1)
    with pytest.raises(DomainError):
        oracle.simplex_dro_oracle([0.1] * 5, sched, 2000)
    with pytest.raises(DomainError):
        oracle.simplex_dro_oracle([0.1, 0.2], sched, 150)


def test_simplex_oracle_refinement_never_widens_much():
    sched = sched_with_radius(0.15)
    losses = [0.1, 0.9, 0.4]
    lo1, hi1 = oracle.simplex_dro_oracle(losses, sched, 400)
    lo2, hi2 = oracle.simplex_dro_oracle(losses, sched, 800)
    cell = 1.0 / 400
    assert hi2 >= hi1 - cell and lo2 <= lo1 + cell
    assert hi2 - hi1 < 2 * cell and lo1 - lo2 < 2 * cell


def test_multiplier_oracle_matches_simplex_on_pairs():
    sched = sched_with_radius(0.25)
    slo, shi = oracle.simplex_dro_oracle([0.0, 1.0], sched, 4 * 10 ** 5)
    mlo, mhi = oracle.multiplier_dro_oracle([0.0, 1.0], sched)
    assert mhi == pytest.approx(shi, abs=1e-5)
    assert mlo == pytest.approx(slo, abs=1e-5)


def test_multiplier_oracle_constant_losses_exact():
    assert oracle.multiplier_dro_oracle([3.0, 3.0], sched_with_radius(0.2)) == (3.0, 3.0)


def test_multiplier_oracle_matches_dual_on_t50():
    g = np.random.default_rng(3)
    losses = g.uniform(0.0, 1.0, size=50)
    sched = sched_with_radius(0.1)
    up = solve.dro_dual_upper(losses, sched)
    lo = solve.dro_dual_lower(losses, sched)
    mlo, mhi = oracle.multiplier_dro_oracle(losses, sched)
    assert up == pytest.approx(mhi, rel=1e-8)
    assert lo == pytest.approx(mlo, rel=1e-8)


def test_corpora_are_deterministic():
    a = oracle.ou_corpus()
    b = oracle.ou_corpus()
    assert a == b
    assert oracle.dro_small_corpus() == oracle.dro_small_corpus()
    assert oracle.cir_corpus()[:5] == oracle.cir_corpus()[:5]
