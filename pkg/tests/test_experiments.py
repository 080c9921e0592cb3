import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import disappointment_of
from mdpci import estimate, experiments as ex, simulate, solve
from mdpci.core import (
    DomainError,
    ExperimentResult,
    ExperimentRow,
    ModelSpec,
    ScalingSchedule,
)


def small_config(**overrides):
    base = dict(
        model=ModelSpec(kind="ou", theta=0.2),
        t_grid=(100.0, 400.0),
        beta=5 / 11,
        r=1e-2,
        replications=20,
        variants=(ex.OPTIMAL, ex.CLT),
        seed=5,
        step=0.05,
    )
    base.update(overrides)
    return ex.ExperimentConfig(**base)


def row_lookup(result, stat, variant=None):
    out = {}
    for row in result.rows:
        if row.stat == stat and (variant is None or row.variant == variant):
            out[(row.T, row.variant)] = row
    return out


def test_config_validation():
    with pytest.raises(DomainError):
        small_config(t_grid=(400.0, 100.0))
    with pytest.raises(DomainError):
        small_config(replications=0)
    with pytest.raises(DomainError):
        small_config(model=ModelSpec(kind="nonparam", losses=(1.0, 2.0)))
    with pytest.raises(DomainError):
        ex.Variant(kind="bogus")


def test_identical_configs_produce_identical_csv_bytes():
    a = ex.render_csv(ex.run_coverage(small_config()))
    b = ex.render_csv(ex.run_coverage(small_config()))
    assert a == b
    c = ex.render_csv(ex.run_coverage(small_config(seed=6)))
    assert a != c


def test_single_replication_quantiles_equal_the_observation():
    result = ex.run_coverage(small_config(replications=1, t_grid=(100.0,)))
    widths = row_lookup(result, "width")
    for row in widths.values():
        assert row.q10 == row.mean == row.q90
        assert row.count == 1


def test_optimal_width_matches_closed_form_per_replication():
    config = small_config(replications=1, t_grid=(200.0,), variants=(ex.OPTIMAL,))
    result = ex.run_coverage(config)
    row = row_lookup(result, "width", "optimal")[(200.0, "optimal")]
    data = simulate.simulate_ou(0.2, 200.0, config.step,
                                simulate.RngSpec(seed=config.seed, stream=0))
    theta_hat = estimate.mle_ou(estimate.path_integrals(data))
    sched = config.schedule(200.0)
    formula = math.sqrt(sched.r_T * (2 * theta_hat + sched.r_T)) / theta_hat ** 2
    assert row.mean == pytest.approx(formula, rel=1e-12)


def test_coverage_reports_infeasible_and_failed_counts():
    result = ex.run_coverage(small_config())
    stats = {row.stat for row in result.rows}
    assert {"lower", "upper", "width", "miscoverage", "infeasible", "failed"} <= stats


def test_cir_coverage_orders_optimal_below_clt():
    config = ex.ExperimentConfig(
        model=ModelSpec(kind="cir", theta=1.0, delta=5.0, sigma=2.0),
        t_grid=(200.0, 500.0),
        beta=5 / 11,
        r=1e-2,
        replications=100,
        variants=(ex.OPTIMAL, ex.CLT),
        seed=9,
        step=0.25,
    )
    result = ex.run_coverage(config)
    widths = row_lookup(result, "width")
    for T in config.t_grid:
        assert widths[(T, "optimal")].mean < widths[(T, "clt")].mean


def test_trichotomy_wilson_band(trichotomy_result):
    # kappa = 0 at a horizon past 5000 with 2000 replications sits near 1/2
    p_hat = disappointment_of(trichotomy_result, 6310.0, "fixed+0")
    assert 0.45 <= p_hat <= 0.55


def test_disappointment_reports_both_decay_normalizations(trichotomy_result):
    rows = {(r.T, r.variant, r.stat): r for r in trichotomy_result.rows}
    p = rows[(6310.0, "optimal", "disappointment")].mean
    per_t = rows[(6310.0, "optimal", "decay_per_T")].mean
    per_bt = rows[(6310.0, "optimal", "decay_per_bT")].mean
    assert per_t == pytest.approx(-math.log(p) / 6310.0, rel=1e-12)
    assert per_bt == pytest.approx(-math.log(p) / 6310.0 ** (5 / 11), rel=1e-12)


def test_zero_frequency_decay_rate_is_blank_in_csv():
    rows = (
        ExperimentRow(10.0, "optimal", "decay_per_T", math.nan, math.nan, math.nan, 5),
    )
    text = ex.render_csv(ExperimentResult(rows=rows))
    assert text.splitlines()[1] == "10.0,optimal,decay_per_T,,,,5"


def test_csv_round_trip_preserves_rows(tmp_path):
    result = ex.run_disappointment(small_config(replications=5, t_grid=(100.0,)))
    target = tmp_path / "out.csv"
    ex.emit_csv(result, str(target))
    parsed = ex.parse_csv(str(target))
    assert parsed == result
    # byte-identical re-serialization
    assert ex.render_csv(parsed) == ex.render_csv(result)


def test_empty_result_writes_header_only(tmp_path):
    target = tmp_path / "empty.csv"
    ex.emit_csv(ExperimentResult(rows=()), str(target))
    assert target.read_text() == ex.CSV_HEADER + "\n"


def test_csv_floats_round_trip_exactly():
    value = 0.1 + 0.2  # not representable prettily
    rows = (ExperimentRow(3.0, "v", "s", value, value, value, 1),)
    parsed = ex.parse_csv_text(ex.render_csv(ExperimentResult(rows=rows)))
    assert parsed.rows[0].mean == value


def test_band_points_construction():
    pts = ex.band_points([1, 2, 3], [0.1, 0.2, 0.3], [1.1, 1.2, 1.3])
    assert pts == [(1, 0.1), (2, 0.2), (3, 0.3), (3, 1.3), (2, 1.2), (1, 1.1)]


def test_svg_single_series_has_one_polyline_and_band(tmp_path):
    rows = tuple(
        ExperimentRow(float(t), "optimal", "width", 1.0 / t, 0.8 / t, 1.2 / t, 10)
        for t in (100, 200, 400)
    )
    target = tmp_path / "plot.svg"
    ex.emit_svg(ExperimentResult(rows=rows), ex.named_plot_spec("width"), str(target))
    tree = ET.parse(target)  # well-formed XML
    ns = "{http://www.w3.org/2000/svg}"
    polylines = tree.getroot().findall(f".//{ns}polyline")
    polygons = tree.getroot().findall(f".//{ns}polygon")
    assert len(polylines) == 1
    assert len(polygons) == 1
    band = polygons[0].get("points").split()
    assert len(band) == 6  # three T values forward plus three reversed


def test_svg_rejects_empty_results():
    with pytest.raises(DomainError):
        ex.render_svg(ExperimentResult(rows=()), ex.named_plot_spec("width"))
    with pytest.raises(DomainError):
        ex.named_plot_spec("mystery")
