import math

import pytest

from hetnet_ee.model import (PER_KM2, REFERENCE_SCENARIO, CREPolicy, ScheduleClass, TierParams, UserSet,
                             ValidationError, build_params, db_to_linear, dbm_to_watts, linear_to_db,
                             noise_power, total_bs_power)


def test_db_round_trip():
    for x in (-30.0, -10.0, 0.0, 2.5, 17.0):
        assert linear_to_db(db_to_linear(x)) == pytest.approx(x, abs=1e-12)
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(-10.0) == pytest.approx(0.1)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_db_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        db_to_linear(bad)


def test_linear_to_db_rejects_non_positive():
    with pytest.raises(ValueError):
        linear_to_db(0.0)


def test_noise_power_default():
    # -174 dBm/Hz + 70 dB(Hz) = -104 dBm
    p = build_params()
    assert noise_power(p) == pytest.approx(3.981071705534952e-14, rel=1e-12)
    assert p.noise_power == noise_power(p)


def test_noise_psd_per_hz():
    assert dbm_to_watts(-174.0) == pytest.approx(3.981071705534952e-21, rel=1e-12)


def test_defaults_in_si(params):
    assert params.tier1.density == pytest.approx(1.0 * PER_KM2)
    assert params.tier2.density == pytest.approx(10.0 * PER_KM2)
    assert params.user_density == pytest.approx(100.0 * PER_KM2)
    assert params.tier1.tx_power == 10.0 and params.tier2.tx_power == 0.1
    assert params.bandwidth == 10e6
    assert params.rate_target(1) == 300e3 and params.rate_target(2) == 1200e3
    assert params.cre.bias_b1 == pytest.approx(10.0)
    assert params.cre.power_beta == pytest.approx(0.1)


def test_total_bs_power(params):
    assert total_bs_power(params.tier1) == pytest.approx(22.6 * 10 + 412.4)
    assert total_bs_power(params.tier2) == pytest.approx(5.5 * 0.1 + 32)


def test_class_maps():
    assert [c.serving_tier for c in ScheduleClass] == [1, 1, 2, 2]
    assert [c.rate_tier for c in ScheduleClass] == [1, 1, 1, 2]
    assert [c.user_set for c in ScheduleClass] == [UserSet.U1, UserSet.U1, UserSet.UD, UserSet.UDBAR]
    assert [c.reduced_macro_power for c in ScheduleClass] == [True, False, True, False]
    assert [s.serving_tier for s in UserSet] == [1, 2, 2]


@pytest.mark.parametrize("kwargs,field", [
    ({"b1_db": 2.4, "b2_db": 2.5}, "bias_b1"),
    ({"alpha1": 2.0}, "path_loss_exp"),
    ({"eta": 0.0}, "partition_eta"),
    ({"eta": 1.0}, "partition_eta"),
    ({"beta_db": 0.5}, "power_beta"),
    ({"lambda2_per_km2": 0.0}, "density"),
    ({"rho1_bps": 2e6}, "rate_target_macro"),
    ({"p1_watts": -1.0}, "tx_power"),
])
def test_validation(kwargs, field):
    with pytest.raises(ValidationError) as exc:
        build_params(**kwargs)
    assert exc.value.field == field


def test_equal_biases_allowed():
    p = build_params(b1_db=5.0, b2_db=5.0)
    assert not p.cre.extra_cre


def test_unknown_override():
    with pytest.raises(KeyError):
        build_params(lambda3_per_km2=1.0)


def test_with_helpers(params):
    q = params.with_cre(power_beta=1.0)
    assert q.cre.power_beta == 1.0 and params.cre.power_beta == pytest.approx(0.1)
    q = params.with_tier(2, density=5e-6)
    assert q.tier2.density == 5e-6 and q.tier1 == params.tier1
    with pytest.raises(ValueError):
        params.tier(3)


def test_frozen(params):
    with pytest.raises(Exception):
        params.bandwidth = 1.0


def test_tier_nan_rejected():
    with pytest.raises(ValidationError):
        TierParams(math.nan, 1.0, 3.0, 1.0, 1.0)


def test_cre_from_db():
    c = CREPolicy.from_db(10.0, 0.0, 0.5, 0.0)
    assert c.bias_b1 == pytest.approx(10.0) and c.bias_b2 == 1.0 and c.power_beta == 1.0


def test_table_keys_complete():
    assert set(REFERENCE_SCENARIO) >= {"lambda1_per_km2", "noise_psd_dbm_hz", "b2_static_watts", "beta_db"}
