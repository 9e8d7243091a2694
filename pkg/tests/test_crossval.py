"""Analytic engine against simulation and against expected sweep shapes."""

import numpy as np
import pytest

from hetnet_ee import analytic as an
from hetnet_ee import montecarlo as mc
from hetnet_ee.model import ScheduleClass, build_params


def test_rate_curve_has_interior_maximum_over_b1():
    grid = np.arange(2.5, 20.01, 2.5)
    vals = [an.rate_coverage_overall(1.0, build_params(b1_db=b)) for b in grid]
    k = int(np.argmax(vals))
    assert 0 < k < len(grid) - 1
    assert vals[k] - vals[-1] > 1e-3


def test_extra_cre_raises_ee_above_traditional_start():
    start = an.ee_coverage_overall(2e4, build_params(b1_db=2.5, b2_db=2.5))
    later = [an.ee_coverage_overall(2e4, build_params(b1_db=b, b2_db=2.5)) for b in (10.0, 15.0)]
    assert max(later) > start


@pytest.mark.slow
def test_sinr_class_dbar_against_simulation(params):
    r = mc.simulate(params, mc.SimulationSettings(trials=60_000, seed=21), mode="sinr")
    (cov,) = mc.coverage_from_result(r, "sinr", [1.0])
    est = cov.per_class[ScheduleClass.DBAR]
    assert abs(est.value - an.sinr_coverage_class(ScheduleClass.DBAR, 1.0, params)) < 0.01


@pytest.mark.slow
def test_ee_low_threshold_against_simulation():
    p = build_params(b2_db=0.0)
    r = mc.simulate(p, mc.SimulationSettings(trials=20_000, seed=22), mode="full")
    (cov,) = mc.coverage_from_result(r, "ee", [500.0])
    assert abs(cov.overall.value - an.ee_coverage_overall(500.0, p)) < 0.03
