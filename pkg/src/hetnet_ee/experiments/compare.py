"""Pair analytic and Monte Carlo rows of a sweep and judge the gaps."""

from __future__ import annotations

from dataclasses import dataclass

from .sweep import SweepTable

# absolute tolerances; SINR and association also pass when the analytic value
# lies inside the simulated confidence interval
TOLERANCES = {"assoc": 0.01, "sinr": 0.01, "rate": 0.03, "ee": 0.03}
# rate and EE rest on a load model that is not exact
APPROXIMATE_METRICS = ("rate", "ee")

PASS = "pass"
FAIL = "fail"
KNOWN_APPROX = "known-approximation"


@dataclass(frozen=True)
class Comparison:
    axis_value: float
    metric: str
    cls: str
    analytic: float
    mc: float
    ci_half_width: float
    status: str

    @property
    def gap(self) -> float:
        return abs(self.analytic - self.mc)

    @property
    def inside_ci(self) -> bool:
        return self.gap <= self.ci_half_width


@dataclass
class ComparisonReport:
    entries: list

    @property
    def passed(self) -> bool:
        return all(e.status != FAIL for e in self.entries)

    def max_gap(self, metric: str | None = None) -> float:
        gaps = [e.gap for e in self.entries if metric is None or e.metric == metric]
        return max(gaps) if gaps else 0.0

    def summary(self) -> str:
        lines = []
        for metric in sorted({e.metric for e in self.entries}):
            sub = [e for e in self.entries if e.metric == metric]
            counts = {s: sum(e.status == s for e in sub) for s in (PASS, KNOWN_APPROX, FAIL)}
            lines.append(f"{metric}: {len(sub)} points, max |gap| {self.max_gap(metric):.4f}, "
                         f"pass {counts[PASS]}, known-approximation {counts[KNOWN_APPROX]}, "
                         f"fail {counts[FAIL]}")
        lines.append("overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def compare_analytic_mc(table: SweepTable, tolerances: dict | None = None,
                        flag_approximations: bool = True) -> ComparisonReport:
    """Compare every (axis value, metric, class) present for both engines.

    With ``flag_approximations`` a rate or EE gap above tolerance is reported
    as a known approximation rather than a failure.  Raises ValueError when
    no row appears for both engines.
    """
    tol = {**TOLERANCES, **(tolerances or {})}
    mc_rows = {(r.axis_value, r.metric, r.cls): r for r in table.select(engine="mc") if r.ok}
    entries = []
    for a in table.select(engine="analytic"):
        m = mc_rows.get((a.axis_value, a.metric, a.cls))
        if m is None or not a.ok:
            continue
        gap = abs(a.value - m.value)
        if a.metric in ("sinr", "assoc"):
            ok = gap <= tol[a.metric] or gap <= m.ci_half_width
        else:
            ok = gap <= tol[a.metric]
        if ok:
            status = PASS
        elif flag_approximations and a.metric in APPROXIMATE_METRICS:
            status = KNOWN_APPROX
        else:
            status = FAIL
        entries.append(Comparison(a.axis_value, a.metric, a.cls, a.value, m.value, m.ci_half_width, status))
    if not entries:
        raise ValueError("no rows were computed by both engines; nothing to compare")
    return ComparisonReport(entries)
