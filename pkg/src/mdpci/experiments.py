"""Monte Carlo harness for coverage, interval-length, and disappointment runs.

Replications are independent: replication ``i`` of the ``j``-th horizon uses
stream ``j * replications + i`` of the master seed, and results are reduced
in stream order, so reruns of the same config produce byte-identical CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import baseline, estimate, simulate, solve
from .core import (
    ConfidenceInterval,
    DegenerateData,
    DomainError,
    ExperimentResult,
    ExperimentRow,
    ModelSpec,
    NumericalError,
    ScalingSchedule,
    Status,
)


@dataclass(frozen=True)
class Variant:
    """One upper/lower bound recipe: the optimal solver, the CLT baseline,
    or a fixed offset J(theta_hat) + kappa."""

    kind: str
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in ("optimal", "clt", "fixed"):
            raise DomainError(f"unknown variant {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"fixed{self.kappa:+g}"
        return self.kind


OPTIMAL = Variant(kind="optimal")
CLT = Variant(kind="clt")


def fixed_offset(kappa: float) -> Variant:
    return Variant(kind="fixed", kappa=float(kappa))


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    t_grid: tuple
    beta: float
    r: float
    replications: int
    variants: tuple = (OPTIMAL, CLT)
    seed: int = 0
    step: float = 0.05

    def __post_init__(self):
        grid = tuple(float(t) for t in self.t_grid)
        if len(grid) == 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("t_grid must be nonempty and strictly increasing")
        object.__setattr__(self, "t_grid", grid)
        object.__setattr__(self, "variants", tuple(self.variants))
        if self.replications < 1:
            raise DomainError("need at least one replication")
        if self.model.kind not in ("ou", "cir"):
            raise DomainError("the harness runs OU and CIR models")

    def schedule(self, horizon: float) -> ScalingSchedule:
        return ScalingSchedule(T=horizon, beta=self.beta, r=self.r)


def _estimate_drift(config: ExperimentConfig, horizon: float, stream: int) -> float:
    rng = simulate.RngSpec(seed=config.seed, stream=stream)
    if config.model.kind == "ou":
        data = simulate.simulate_ou(config.model.theta, horizon, config.step, rng)
        return estimate.mle_ou(estimate.path_integrals(data))
    data = simulate.simulate_cir(config.model.delta, config.model.sigma,
                                 config.model.theta, horizon, config.step, rng)
    return estimate.mle_cir(estimate.path_integrals(data), config.model.delta)


def _variant_interval(config: ExperimentConfig, variant: Variant,
                      theta_hat: float, sched: ScalingSchedule) -> ConfidenceInterval:
    model = config.model
    if variant.kind == "optimal":
        if model.kind == "ou":
            return solve.ou_interval(theta_hat, sched)
        return solve.cir_interval(theta_hat, model.delta, model.sigma, sched)
    if variant.kind == "clt":
        if model.kind == "ou":
            return baseline.clt_interval_ou(theta_hat, sched)
        return baseline.clt_interval_cir(theta_hat, model.delta, model.sigma, sched)
    if theta_hat <= 0.0:
        return ConfidenceInterval(math.nan, math.nan, Status.INFEASIBLE,
                                  "fixed-offset", sched)
    if model.kind == "ou":
        center = 1.0 / (2.0 * theta_hat)
    else:
        center = model.delta * model.sigma ** 2 / (2.0 * theta_hat ** 2)
    # A fixed offset is an upper confidence bound; the interval is one-sided.
    return ConfidenceInterval(-math.inf, center + variant.kappa, Status.FEASIBLE,
                              "fixed-offset", sched)


def _quantiles(values: np.ndarray):
    if values.size == 0:
        return math.nan, math.nan, math.nan
    q10, q90 = np.quantile(values, [0.1, 0.9])
    return float(values.mean()), float(q10), float(q90)


def _scalar_row(horizon: float, variant: str, stat: str, value: float,
                count: int) -> ExperimentRow:
    return ExperimentRow(T=horizon, variant=variant, stat=stat, mean=value,
                         q10=value, q90=value, count=count)


def run_coverage(config: ExperimentConfig) -> ExperimentResult:
    """Endpoint/width distributions and miscoverage frequency per horizon.

    Infeasible replications are counted separately and excluded from the
    endpoint statistics; replications aborted by solver or estimator errors
    are counted as failed.
    """
    true_cost = config.model.cost_value()
    rows = []
    for t_index, horizon in enumerate(config.t_grid):
        sched = config.schedule(horizon)
        per_variant = {v.label: {"lower": [], "upper": [], "width": [], "miss": []}
                       for v in config.variants}
        infeasible = {v.label: 0 for v in config.variants}
        failed = 0
        for rep in range(config.replications):
            stream = t_index * config.replications + rep
            try:
                theta_hat = _estimate_drift(config, horizon, stream)
                intervals = [(v, _variant_interval(config, v, theta_hat, sched))
                             for v in config.variants]
            except (DomainError, DegenerateData, NumericalError):
                failed += 1
                continue
            for variant, ci in intervals:
                acc = per_variant[variant.label]
                if ci.status is Status.INFEASIBLE:
                    infeasible[variant.label] += 1
                    continue
                acc["lower"].append(ci.lower)
                acc["upper"].append(ci.upper)
                acc["width"].append(ci.width)
                acc["miss"].append(0.0 if ci.contains(true_cost) else 1.0)
        for variant in config.variants:
            label = variant.label
            acc = per_variant[label]
            n_ok = len(acc["lower"])
            for stat in ("lower", "upper", "width"):
                mean, q10, q90 = _quantiles(np.asarray(acc[stat]))
                rows.append(ExperimentRow(horizon, label, stat, mean, q10, q90, n_ok))
            miss = np.asarray(acc["miss"])
            mean, q10, q90 = _quantiles(miss)
            rows.append(ExperimentRow(horizon, label, "miscoverage", mean, q10, q90, n_ok))
            rows.append(_scalar_row(horizon, label, "infeasible",
                                    infeasible[label] / config.replications,
                                    infeasible[label]))
        rows.append(_scalar_row(horizon, "all", "failed",
                                failed / config.replications, failed))
    return ExperimentResult(rows=_sorted_rows(rows), metadata=_metadata(config))


def run_disappointment(config: ExperimentConfig) -> ExperimentResult:
    """P(true cost exceeds the variant's upper bound) and its decay statistics.

    The decay rate is reported under both normalizations, -log(P)/T and
    -log(P)/b_T; cells with an exact zero frequency carry NaN (rendered as
    empty CSV fields).
    """
    true_cost = config.model.cost_value()
    rows = []
    for t_index, horizon in enumerate(config.t_grid):
        sched = config.schedule(horizon)
        hits = {v.label: [] for v in config.variants}
        infeasible = {v.label: 0 for v in config.variants}
        failed = 0
        for rep in range(config.replications):
            stream = t_index * config.replications + rep
            try:
                theta_hat = _estimate_drift(config, horizon, stream)
                intervals = [(v, _variant_interval(config, v, theta_hat, sched))
                             for v in config.variants]
            except (DomainError, DegenerateData, NumericalError):
                failed += 1
                continue
            for variant, ci in intervals:
                if ci.status is Status.INFEASIBLE:
                    infeasible[variant.label] += 1
                    continue
                hits[variant.label].append(1.0 if true_cost > ci.upper else 0.0)
        for variant in config.variants:
            label = variant.label
            sample = np.asarray(hits[label])
            n_ok = sample.size
            p_hat = float(sample.mean()) if n_ok else math.nan
            rows.append(_scalar_row(horizon, label, "disappointment", p_hat, n_ok))
            if n_ok and p_hat > 0.0:
                decay_t = -math.log(p_hat) / horizon
                decay_bt = -math.log(p_hat) / sched.b_T
            else:
                decay_t = math.nan
                decay_bt = math.nan
            rows.append(_scalar_row(horizon, label, "decay_per_T", decay_t, n_ok))
            rows.append(_scalar_row(horizon, label, "decay_per_bT", decay_bt, n_ok))
            rows.append(_scalar_row(horizon, label, "infeasible",
                                    infeasible[label] / config.replications,
                                    infeasible[label]))
        rows.append(_scalar_row(horizon, "all", "failed",
                                failed / config.replications, failed))
    return ExperimentResult(rows=_sorted_rows(rows), metadata=_metadata(config))


def _sorted_rows(rows) -> tuple:
    return tuple(sorted(rows, key=lambda r: (r.T, r.variant, r.stat)))


def _metadata(config: ExperimentConfig) -> dict:
    return {
        "seed": config.seed,
        "replications": config.replications,
        "model": config.model.kind,
        "beta": config.beta,
        "r": config.r,
        "step": config.step,
    }


# ---------------------------------------------------------------------------
# CSV round trip.

CSV_HEADER = "T,variant,stat,mean,q10,q90,count"


def _format_value(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def render_csv(result: ExperimentResult) -> str:
    lines = [CSV_HEADER]
    for row in _sorted_rows(result.rows):
        lines.append(",".join([
            _format_value(row.T), row.variant, row.stat,
            _format_value(row.mean), _format_value(row.q10),
            _format_value(row.q90), str(int(row.count)),
        ]))
    return "\n".join(lines) + "\n"


def emit_csv(result: ExperimentResult, path: str) -> None:
    """Write the summary rows as CSV with a deterministic row order."""
    text = render_csv(result)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def _parse_value(text: str) -> float:
    return math.nan if text == "" else float(text)


def parse_csv_text(text: str) -> ExperimentResult:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise DomainError("unrecognized experiment CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 7:
            raise DomainError(f"malformed CSV row: {line!r}")
        rows.append(ExperimentRow(
            T=_parse_value(parts[0]), variant=parts[1], stat=parts[2],
            mean=_parse_value(parts[3]), q10=_parse_value(parts[4]),
            q90=_parse_value(parts[5]), count=int(parts[6]),
        ))
    return ExperimentResult(rows=tuple(rows), metadata={})


def parse_csv(path: str) -> ExperimentResult:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_csv_text(fh.read())
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Static SVG rendering: mean lines with 10/90% quantile bands.

@dataclass(frozen=True)
class PlotSpec:
    name: str
    stats: tuple
    title: str = ""
    ylabel: str = ""
    xlabel: str = "T"


_NAMED_SPECS = {
    "bounds": PlotSpec("bounds", ("lower", "upper"), "Confidence bounds", "bound"),
    "width": PlotSpec("width", ("width",), "Interval length", "length"),
    "disappointment": PlotSpec("disappointment", ("disappointment",),
                               "Disappointment probability", "frequency"),
}

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def named_plot_spec(name: str) -> PlotSpec:
    try:
        return _NAMED_SPECS[name]
    except KeyError:
        raise DomainError(f"unknown plot spec {name!r}; "
                          f"choose from {sorted(_NAMED_SPECS)}") from None


def band_points(ts, q10s, q90s) -> list:
    """Band polygon vertices: (T, q10) forward then (T, q90) reversed."""
    forward = list(zip(ts, q10s))
    backward = list(zip(reversed(list(ts)), reversed(list(q90s))))
    return forward + backward


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def render_svg(result: ExperimentResult, spec: PlotSpec,
               width: int = 640, height: int = 440) -> str:
    series = {}
    for row in _sorted_rows(result.rows):
        if row.stat in spec.stats and not math.isnan(row.mean):
            series.setdefault((row.variant, row.stat), []).append(row)
    if not series:
        raise DomainError("result has no rows matching the plot spec")

    xs = [row.T for rows in series.values() for row in rows]
    ys = []
    for rows in series.values():
        for row in rows:
            ys.extend(v for v in (row.mean, row.q10, row.q90) if not math.isnan(v))
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    pad = 0.05 * (y_hi - y_lo) or 1.0
    y_lo, y_hi = y_lo - pad, y_hi + pad
    left, right, top, bottom = 70, width - 20, 20, height - 50

    def px(t: float) -> float:
        return left + (t - x_lo) / (x_hi - x_lo) * (right - left)

    def py(v: float) -> float:
        return bottom - (v - y_lo) / (y_hi - y_lo) * (bottom - top)

    def fmt(v: float) -> str:
        return f"{v:.6g}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" '
        'stroke="black" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        tx = x_lo + frac * (x_hi - x_lo)
        ty = y_lo + frac * (y_hi - y_lo)
        parts.append(f'<text x="{px(tx):.2f}" y="{bottom + 18}" font-size="11" '
                     f'text-anchor="middle">{_escape(fmt(tx))}</text>')
        parts.append(f'<text x="{left - 6}" y="{py(ty) + 4:.2f}" font-size="11" '
                     f'text-anchor="end">{_escape(fmt(ty))}</text>')
    parts.append(f'<text x="{(left + right) / 2:.2f}" y="{height - 10}" '
                 f'font-size="12" text-anchor="middle">{_escape(spec.xlabel)}</text>')
    if spec.title:
        parts.append(f'<text x="{(left + right) / 2:.2f}" y="14" font-size="13" '
                     f'text-anchor="middle">{_escape(spec.title)}</text>')

    for index, (key, rows) in enumerate(sorted(series.items())):
        color = _PALETTE[index % len(_PALETTE)]
        ts = [row.T for row in rows]
        q10s = [row.q10 for row in rows]
        q90s = [row.q90 for row in rows]
        means = [row.mean for row in rows]
        if all(not math.isnan(v) for v in q10s + q90s):
            pts = " ".join(f"{px(t):.2f},{py(v):.2f}"
                           for t, v in band_points(ts, q10s, q90s))
            parts.append(f'<polygon points="{pts}" fill="{color}" opacity="0.25"/>')
        line = " ".join(f"{px(t):.2f},{py(v):.2f}" for t, v in zip(ts, means))
        parts.append(f'<polyline points="{line}" fill="none" stroke="{color}" '
                     'stroke-width="2"/>')
        label = f"{key[0]} {key[1]}"
        ly = top + 16 * index + 8
        parts.append(f'<rect x="{right - 150}" y="{ly - 8}" width="12" height="8" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{right - 134}" y="{ly}" font-size="11">'
                     f'{_escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(result: ExperimentResult, spec: PlotSpec, path: str,
             width: int = 640, height: int = 440) -> None:
    """Write a standalone SVG figure (mean lines plus shaded quantile bands)."""
    text = render_svg(result, spec, width, height)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc}") from exc
