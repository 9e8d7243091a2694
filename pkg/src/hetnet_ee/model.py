"""Scenario parameters, unit conversions and the scheduling-class taxonomy.

All quantities are stored in SI units: densities per m^2, distances in m,
powers in W, noise PSD in W/Hz.  Biases and the macro power fraction are
linear ratios; the config/CLI layer converts from dB on ingest.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

PER_KM2 = 1e-6  # (1/km^2) -> (1/m^2)


class ValidationError(ValueError):
    """A parameter object violates one of its invariants."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise ValidationError(field_name, message)


def _finite(value: float, field_name: str) -> float:
    value = float(value)
    _require(math.isfinite(value), field_name, f"must be finite, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# unit conversions
# ---------------------------------------------------------------------------

def db_to_linear(value_db: float) -> float:
    value_db = float(value_db)
    if not math.isfinite(value_db):
        raise ValueError(f"dB value must be finite, got {value_db!r}")
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"linear value must be positive and finite, got {value!r}")
    return 10.0 * math.log10(value)


def dbm_to_watts(value_dbm: float) -> float:
    return db_to_linear(value_dbm) * 1e-3


# ---------------------------------------------------------------------------
# taxonomy
# ---------------------------------------------------------------------------

class UserSet(enum.Enum):
    """The three disjoint association sets."""

    U1 = "U1"        # macro users
    UD = "UD"        # extra-offloaded users (between the B2 and B1 boundaries)
    UDBAR = "UDbar"  # original small-cell users

    @property
    def serving_tier(self) -> int:
        return 1 if self is UserSet.U1 else 2


class ScheduleClass(enum.Enum):
    """Resource type a user is scheduled on."""

    B = "B"          # macro user on the reduced-power fraction
    BBAR = "Bbar"    # macro user on the full-power fraction
    D = "D"          # extra-offloaded user on the protected fraction
    DBAR = "Dbar"    # original small-cell user on the remaining fraction

    @property
    def serving_tier(self) -> int:
        """M(l)."""
        return 1 if self in (ScheduleClass.B, ScheduleClass.BBAR) else 2

    @property
    def rate_tier(self) -> int:
        """k(l): which target rate applies (1 -> macro target, 2 -> small-cell)."""
        return 2 if self is ScheduleClass.DBAR else 1

    @property
    def user_set(self) -> UserSet:
        """q(l)."""
        if self is ScheduleClass.D:
            return UserSet.UD
        if self is ScheduleClass.DBAR:
            return UserSet.UDBAR
        return UserSet.U1

    @property
    def reduced_macro_power(self) -> bool:
        """True when tier-1 interference is scaled by the power fraction."""
        return self in (ScheduleClass.B, ScheduleClass.D)


# ---------------------------------------------------------------------------
# parameter objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TierParams:
    density: float        # BS per m^2
    tx_power: float       # W
    path_loss_exp: float
    power_coeff_a: float  # dimensionless slope of the BS power model
    power_coeff_b: float  # W, static consumption

    def __post_init__(self):
        _require(_finite(self.density, "density") > 0, "density", "must be > 0")
        _require(_finite(self.tx_power, "tx_power") > 0, "tx_power", "must be > 0")
        _require(_finite(self.path_loss_exp, "path_loss_exp") > 2, "path_loss_exp",
                 "must exceed 2 for the interference integrals to converge")
        _require(_finite(self.power_coeff_a, "power_coeff_a") >= 0, "power_coeff_a", "must be >= 0")
        _require(_finite(self.power_coeff_b, "power_coeff_b") >= 0, "power_coeff_b", "must be >= 0")


@dataclass(frozen=True)
class CREPolicy:
    bias_b1: float        # linear
    bias_b2: float        # linear
    partition_eta: float
    power_beta: float     # linear, (0, 1]

    def __post_init__(self):
        b1 = _finite(self.bias_b1, "bias_b1")
        b2 = _finite(self.bias_b2, "bias_b2")
        _require(b2 > 0, "bias_b2", "must be > 0")
        _require(b1 >= b2, "bias_b1", f"must be >= bias_b2 ({b1!r} < {b2!r})")
        eta = _finite(self.partition_eta, "partition_eta")
        _require(0 < eta < 1, "partition_eta", f"must lie in (0, 1), got {eta!r}")
        beta = _finite(self.power_beta, "power_beta")
        _require(0 < beta <= 1, "power_beta", f"must lie in (0, 1], got {beta!r}")

    @classmethod
    def from_db(cls, b1_db: float, b2_db: float, eta: float, beta_db: float) -> "CREPolicy":
        return cls(db_to_linear(b1_db), db_to_linear(b2_db), eta, db_to_linear(beta_db))

    @property
    def extra_cre(self) -> bool:
        return self.bias_b1 > self.bias_b2


@dataclass(frozen=True)
class NetworkParams:
    tier1: TierParams
    tier2: TierParams
    user_density: float       # users per m^2
    bandwidth: float          # Hz
    noise_psd: float          # W/Hz
    cre: CREPolicy
    rate_target_macro: float  # bit/s
    rate_target_small: float  # bit/s

    def __post_init__(self):
        _require(_finite(self.user_density, "user_density") > 0, "user_density", "must be > 0")
        _require(_finite(self.bandwidth, "bandwidth") > 0, "bandwidth", "must be > 0")
        _require(_finite(self.noise_psd, "noise_psd") >= 0, "noise_psd", "must be >= 0")
        _require(_finite(self.rate_target_macro, "rate_target_macro") > 0,
                 "rate_target_macro", "must be > 0")
        _require(_finite(self.rate_target_small, "rate_target_small") > 0,
                 "rate_target_small", "must be > 0")
        _require(self.rate_target_macro <= self.rate_target_small, "rate_target_macro",
                 "macro rate target must not exceed the small-cell target")

    def tier(self, k: int) -> TierParams:
        if k == 1:
            return self.tier1
        if k == 2:
            return self.tier2
        raise ValueError(f"tier index must be 1 or 2, got {k!r}")

    @property
    def noise_power(self) -> float:
        return noise_power(self)

    def rate_target(self, k: int) -> float:
        return self.rate_target_macro if k == 1 else self.rate_target_small

    def with_cre(self, **changes) -> "NetworkParams":
        return replace(self, cre=replace(self.cre, **changes))

    def with_tier(self, k: int, **changes) -> "NetworkParams":
        name = "tier1" if k == 1 else "tier2"
        return replace(self, **{name: replace(self.tier(k), **changes)})


def noise_power(params: NetworkParams) -> float:
    """Thermal noise power N0 * W in watts."""
    return params.noise_psd * params.bandwidth


def total_bs_power(tier: TierParams) -> float:
    """Average BS consumption a * P + b in watts."""
    return tier.power_coeff_a * tier.tx_power + tier.power_coeff_b


# Default scenario.  The bias/partition/power-fraction defaults are the
# configuration most of the figures are drawn around.
REFERENCE_SCENARIO = {
    "lambda1_per_km2": 1.0,
    "lambda2_per_km2": 10.0,
    "lambda_u_per_km2": 100.0,
    "p1_watts": 10.0,
    "p2_watts": 0.1,
    "alpha1": 3.5,
    "alpha2": 4.0,
    "bandwidth_hz": 10e6,
    "noise_psd_dbm_hz": -174.0,
    "rho1_bps": 300e3,
    "rho2_bps": 1200e3,
    "a1": 22.6,
    "b1_static_watts": 412.4,
    "a2": 5.5,
    "b2_static_watts": 32.0,
    "b1_db": 10.0,
    "b2_db": 2.5,
    "eta": 0.2,
    "beta_db": -10.0,
}


def build_params(**overrides) -> NetworkParams:
    """Build a NetworkParams from external (km^2, dB, dBm) units.

    Keys are those of ``REFERENCE_SCENARIO``; anything not given takes its default.
    """
    unknown = set(overrides) - set(REFERENCE_SCENARIO)
    if unknown:
        raise KeyError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    v = {**REFERENCE_SCENARIO, **overrides}
    tier1 = TierParams(v["lambda1_per_km2"] * PER_KM2, v["p1_watts"], v["alpha1"],
                       v["a1"], v["b1_static_watts"])
    tier2 = TierParams(v["lambda2_per_km2"] * PER_KM2, v["p2_watts"], v["alpha2"],
                       v["a2"], v["b2_static_watts"])
    cre = CREPolicy.from_db(v["b1_db"], v["b2_db"], v["eta"], v["beta_db"])
    return NetworkParams(
        tier1=tier1,
        tier2=tier2,
        user_density=v["lambda_u_per_km2"] * PER_KM2,
        bandwidth=v["bandwidth_hz"],
        noise_psd=dbm_to_watts(v["noise_psd_dbm_hz"]),
        cre=cre,
        rate_target_macro=v["rho1_bps"],
        rate_target_small=v["rho2_bps"],
    )


def default_params() -> NetworkParams:
    return build_params()
