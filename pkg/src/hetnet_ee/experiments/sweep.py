"""Parameter sweeps over either engine, and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy

from .. import __version__, _kernels
from .. import analytic
from ..model import REFERENCE_SCENARIO, ScheduleClass, UserSet, db_to_linear
from ..montecarlo import (association_frequencies, coverage_from_result, scaled_rate_coverage,
                          simulate)
from .config import AXES, SweepSpec

HEADER = ("axis", "axis_value", "metric", "class", "engine", "value", "ci_half_width", "error")
OVERALL = "overall"
_CATCH = (ValueError, ArithmeticError, KeyError)


@dataclass(frozen=True)
class Row:
    axis: str
    axis_value: float
    metric: str
    cls: str
    engine: str
    value: float = math.nan
    ci_half_width: float = math.nan
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def _fmt(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


def _num(s: str) -> float:
    return float(s) if s != "" else math.nan


class SweepTable:
    """Rows of a sweep plus a flat metadata mapping."""

    def __init__(self, rows=(), metadata=None):
        self.rows = list(rows)
        self.metadata = dict(metadata or {})

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def select(self, metric=None, engine=None, cls=None) -> list[Row]:
        return [r for r in self.rows
                if (metric is None or r.metric == metric)
                and (engine is None or r.engine == engine)
                and (cls is None or r.cls == cls)]

    def series(self, metric: str, engine: str, cls: str = OVERALL):
        """(axis values, values, ci half-widths) of one curve, errors skipped."""
        rows = [r for r in self.select(metric, engine, cls) if r.ok]
        return ([r.axis_value for r in rows], [r.value for r in rows],
                [r.ci_half_width for r in rows])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {self.metadata[key]}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HEADER)
        for r in self.rows:
            writer.writerow([r.axis, _fmt(r.axis_value), r.metric, r.cls, r.engine,
                             _fmt(r.value), _fmt(r.ci_half_width), r.error])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "SweepTable":
        """Read a table back from a path or from CSV text."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            text = Path(source).read_text(encoding="utf-8")
        else:
            text = source
        meta = {}
        body = []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = value
            else:
                body.append(line)
        reader = csv.reader(body)
        header = tuple(next(reader))
        if header != HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = [Row(a, _num(v), m, c, e, _num(val), _num(ci), err)
                for a, v, m, c, e, val, ci, err in reader]
        return cls(rows, meta)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _thresholds(spec: SweepSpec, value: float) -> dict:
    t = {"sinr": spec.sinr_threshold_db, "rate": spec.rate_scale, "ee": spec.ee_threshold}
    if spec.axis == "threshold":
        t[spec.metrics[0]] = value
    return t


def _analytic_rows(spec: SweepSpec, value: float, params, thresholds: dict) -> list[Row]:
    rows = []

    def row(metric, cls, fn):
        try:
            rows.append(Row(spec.axis, value, metric, cls, "analytic", float(fn())))
        except analytic.DegenerateClassError as exc:
            rows.append(Row(spec.axis, value, metric, cls, "analytic", error=f"degenerate: {exc}"))
        except _CATCH as exc:
            rows.append(Row(spec.axis, value, metric, cls, "analytic", error=str(exc)))

    for metric in spec.metrics:
        if metric == "assoc":
            try:
                probs = analytic.association_probabilities(params)
            except _CATCH as exc:
                rows.extend(Row(spec.axis, value, metric, s.value, "analytic", error=str(exc))
                            for s in UserSet)
                continue
            rows.extend(Row(spec.axis, value, metric, s.value, "analytic", probs[s]) for s in UserSet)
            continue
        th = thresholds[metric]
        if metric == "sinr":
            t_lin = db_to_linear(th)
            row(metric, OVERALL, lambda: analytic.sinr_coverage_overall(t_lin, params))
            per = lambda c: analytic.sinr_coverage_class(c, t_lin, params)
        elif metric == "rate":
            row(metric, OVERALL, lambda: analytic.rate_coverage_overall(th, params, spec.rate_method))
            per = lambda c: analytic.rate_coverage_class(
                c, th * params.rate_target(c.rate_tier), params, spec.rate_method)
        else:
            row(metric, OVERALL, lambda: analytic.ee_coverage_overall(th, params, spec.rate_method))
            per = lambda c: analytic.ee_coverage_class(c, th, params, spec.rate_method)
        if spec.per_class:
            for c in ScheduleClass:
                row(metric, c.value, lambda c=c: per(c))
    return rows


def _mc_mode(metrics) -> str:
    if "rate" in metrics or "ee" in metrics:
        return "full"
    return "sinr" if "sinr" in metrics else "assoc"


def _mc_rows(spec: SweepSpec, value: float, result, thresholds: dict) -> list[Row]:
    rows = []

    def add(metric, cls, est):
        if est.samples == 0:
            rows.append(Row(spec.axis, value, metric, cls, "mc", error="no samples in class"))
        else:
            rows.append(Row(spec.axis, value, metric, cls, "mc", est.value, est.ci_half_width))

    for metric in spec.metrics:
        if metric == "assoc":
            for s, est in association_frequencies(result).items():
                add(metric, s.value, est)
            continue
        th = thresholds[metric]
        if metric == "sinr":
            (cov,) = coverage_from_result(result, "sinr", [db_to_linear(th)])
        elif metric == "rate":
            (cov,) = scaled_rate_coverage(result, [th])
        else:
            (cov,) = coverage_from_result(result, "ee", [th])
        add(metric, OVERALL, cov.overall)
        if spec.per_class:
            for c in ScheduleClass:
                add(metric, c.value, cov.per_class[c])
    return rows


def sweep_metadata(spec: SweepSpec) -> dict:
    axis_key = AXES[spec.axis]
    meta = {
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "axis": spec.axis,
        "axis_parameter": axis_key or f"{spec.metrics[0]}_threshold",
        "metrics": ",".join(spec.metrics),
        "engines": ",".join(spec.engines),
        "rate_method": spec.rate_method,
        "sinr_threshold_db": _fmt(spec.sinr_threshold_db),
        "rate_scale": _fmt(spec.rate_scale),
        "ee_threshold_bps_per_w": _fmt(spec.ee_threshold),
        "ee_threshold_unit": "bit/s/W",
    }
    resolved = {**REFERENCE_SCENARIO, **spec.fixed}
    for key in REFERENCE_SCENARIO:
        meta[f"param.{key}"] = "swept" if key == axis_key else repr(float(resolved[key]))
    if "mc" in spec.engines:
        meta["mc_backend"] = _kernels.backend()
        if _kernels.HAVE_NUMBA:
            import numba
            meta["numba_version"] = numba.__version__
        for k, v in asdict(spec.mc_settings).items():
            meta[f"mc.{k}"] = str(v)
    return meta


def _evaluate_point(spec: SweepSpec, value: float, mc_workers: int = 1, shared=None):
    """Rows for one grid point, and the simulation result used (if any)."""
    rows: list[Row] = []
    thresholds = _thresholds(spec, value)
    try:
        params = spec.params_at(value)
    except _CATCH as exc:
        for engine in spec.engines:
            for metric in spec.metrics:
                rows.append(Row(spec.axis, value, metric, OVERALL, engine, error=str(exc)))
        return rows, shared
    if "analytic" in spec.engines:
        rows.extend(_analytic_rows(spec, value, params, thresholds))
    if "mc" in spec.engines:
        try:
            result = shared
            if result is None:
                result = simulate(params, spec.mc_settings, _mc_mode(spec.metrics), mc_workers)
            rows.extend(_mc_rows(spec, value, result, thresholds))
            shared = result
        except _CATCH as exc:
            for metric in spec.metrics:
                rows.append(Row(spec.axis, value, metric, OVERALL, "mc", error=str(exc)))
    return rows, shared


def _evaluate_point_rows(spec: SweepSpec, value: float):
    return _evaluate_point(spec, value)[0]


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> SweepTable:
    """Evaluate every grid point with every engine.

    A failure at one grid point is recorded in that point's rows and the
    sweep carries on.  With ``workers > 1`` grid points run in separate
    processes; rows are still assembled in grid order.  Along a threshold
    axis the network is fixed, so one simulation serves every grid point.
    ``progress``, if given, is called with (i, n).
    """
    rows: list[Row] = []
    n = len(spec.grid)
    if spec.axis == "threshold" or workers <= 1 or n == 1:
        shared = None
        for i, value in enumerate(spec.grid):
            if progress is not None:
                progress(i, n)
            point_rows, result = _evaluate_point(spec, value, workers, shared)
            if spec.axis == "threshold":
                shared = result
            rows.extend(point_rows)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, point_rows in enumerate(pool.map(_evaluate_point_rows, [spec] * n, spec.grid)):
                if progress is not None:
                    progress(i, n)
                rows.extend(point_rows)
    return SweepTable(rows, sweep_metadata(spec))
