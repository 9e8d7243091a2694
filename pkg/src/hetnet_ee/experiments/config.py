"""Line-oriented ``key = value`` configuration files.

Scenario keys use external units (per km^2, dB, dBm/Hz) and default to the
``REFERENCE_SCENARIO`` values.  Sweep keys describe one parameter sweep.  ``#`` starts a
comment anywhere on a line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from ..analytic import METHODS
from ..model import REFERENCE_SCENARIO, NetworkParams, ValidationError, build_params
from ..montecarlo import SimulationSettings

AXES = {
    "b1_db": "b1_db",
    "b2_db": "b2_db",
    "beta_db": "beta_db",
    "eta": "eta",
    "lambda2": "lambda2_per_km2",
    "threshold": None,
}
METRICS = ("assoc", "sinr", "rate", "ee")
ENGINES = ("analytic", "mc")

# thresholds used when the swept axis is not the threshold itself
DEFAULT_SINR_THRESHOLD_DB = 0.0
DEFAULT_RATE_SCALE = 1.0
DEFAULT_EE_THRESHOLD = 20_000.0  # bit/s per W

SWEEP_KEYS = {
    "axis", "grid_start", "grid_stop", "grid_step", "grid_list", "metrics", "engines",
    "trials", "seed", "window_half_width_m", "ci_level",
    "sinr_threshold_db", "rate_scale", "ee_threshold_bps_per_w", "rate_method", "per_class",
}

# model field -> config keys that can cause it, for error messages
_FIELD_KEYS = {
    "bias_b1": ("b1_db", "b2_db"), "bias_b2": ("b2_db",), "partition_eta": ("eta",),
    "power_beta": ("beta_db",), "density": ("lambda1_per_km2", "lambda2_per_km2"),
    "tx_power": ("p1_watts", "p2_watts"), "path_loss_exp": ("alpha1", "alpha2"),
    "power_coeff_a": ("a1", "a2"), "power_coeff_b": ("b1_static_watts", "b2_static_watts"),
    "user_density": ("lambda_u_per_km2",), "bandwidth": ("bandwidth_hz",),
    "noise_psd": ("noise_psd_dbm_hz",), "rate_target_macro": ("rho1_bps", "rho2_bps"),
    "rate_target_small": ("rho2_bps",),
}


def _blame(field_name: str, scenario: dict) -> str:
    """Config key most likely responsible for a failed model invariant."""
    candidates = _FIELD_KEYS.get(field_name, (field_name,))
    present = [k for k in candidates if k in scenario]
    for key in present:
        try:
            build_params(**{key: scenario[key]})
        except (ValidationError, ValueError):
            return key
    return present[0] if present else candidates[0]


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple
    fixed: dict = field(default_factory=dict)     # external-unit scenario overrides
    metrics: tuple = ("sinr",)
    engines: tuple = ("analytic",)
    mc_settings: SimulationSettings | None = None
    sinr_threshold_db: float = DEFAULT_SINR_THRESHOLD_DB
    rate_scale: float = DEFAULT_RATE_SCALE
    ee_threshold: float = DEFAULT_EE_THRESHOLD
    rate_method: str = "exact"
    per_class: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown axis {self.axis!r}; expected one of {sorted(AXES)}", "axis")
        if len(self.grid) == 0:
            raise ConfigError("grid must not be empty", "grid_list")
        steps = [b - a for a, b in zip(self.grid, self.grid[1:])]
        if steps and not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
            raise ConfigError("grid must be strictly monotone", "grid_list")
        key = AXES[self.axis]
        if key is not None and key in self.fixed:
            raise ConfigError(f"swept parameter {key!r} is also fixed", key)
        bad = [m for m in self.metrics if m not in METRICS]
        if bad or not self.metrics:
            raise ConfigError(f"metrics must be a non-empty subset of {METRICS}", "metrics")
        bad = [e for e in self.engines if e not in ENGINES]
        if bad or not self.engines:
            raise ConfigError(f"engines must be a non-empty subset of {ENGINES}", "engines")
        if "mc" in self.engines and self.mc_settings is None:
            raise ConfigError("Monte Carlo engine selected without simulation settings", "engines")
        if self.axis == "threshold" and (len(self.metrics) != 1 or self.metrics[0] == "assoc"):
            raise ConfigError("a threshold sweep needs exactly one of sinr, rate, ee", "metrics")
        if self.rate_method not in METHODS:
            raise ConfigError(f"rate_method must be one of {METHODS}", "rate_method")

    def params_at(self, value: float) -> NetworkParams:
        key = AXES[self.axis]
        overrides = dict(self.fixed)
        if key is not None:
            overrides[key] = value
        return build_params(**overrides)


def _parse_float(raw: str, key: str, line: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}", key, line) from None
    if not math.isfinite(value):
        raise ConfigError(f"value must be finite, got {raw!r}", key, line)
    return value


def _parse_list(raw: str) -> list[str]:
    return [p.strip() for p in raw.replace(";", ",").split(",") if p.strip()]


def _grid(values: dict, lines: dict) -> tuple:
    if "grid_list" in values:
        if any(k in values for k in ("grid_start", "grid_stop", "grid_step")):
            raise ConfigError("give either grid_list or grid_start/stop/step", "grid_list", lines["grid_list"])
        return tuple(_parse_float(v, "grid_list", lines["grid_list"]) for v in _parse_list(values["grid_list"]))
    if "grid_start" not in values:
        raise ConfigError("sweep needs grid_list or grid_start/grid_stop/grid_step", "axis", lines.get("axis"))
    start = _parse_float(values["grid_start"], "grid_start", lines["grid_start"])
    stop = _parse_float(values.get("grid_stop", values["grid_start"]), "grid_stop", lines.get("grid_stop"))
    if start == stop:
        return (start,)
    if "grid_step" not in values:
        raise ConfigError("grid_step is required when grid_stop differs from grid_start", "grid_step")
    step = _parse_float(values["grid_step"], "grid_step", lines["grid_step"])
    if step == 0 or (stop - start) / step < 0:
        raise ConfigError("grid_step must move grid_start towards grid_stop", "grid_step", lines["grid_step"])
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(n))


def parse_config(text: str) -> tuple[NetworkParams, SweepSpec | None, dict]:
    """Parse configuration text; returns (params, sweep or None, scenario overrides)."""
    scenario: dict = {}
    sweep: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"expected 'key = value', got {content!r}", line=lineno)
        key, value = (s.strip() for s in content.split("=", 1))
        if not key:
            raise ConfigError("missing key", line=lineno)
        if key in lines:
            raise ConfigError("duplicate key", key, lineno)
        lines[key] = lineno
        if key in REFERENCE_SCENARIO:
            scenario[key] = _parse_float(value, key, lineno)
        elif key in SWEEP_KEYS:
            sweep[key] = value
        else:
            raise ConfigError("unknown key", key, lineno)

    try:
        params = build_params(**scenario)
    except ValidationError as exc:
        key = _blame(exc.field, scenario)
        raise ConfigError(str(exc), key, lines.get(key)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if "axis" not in sweep:
        leftover = set(sweep) - {"trials", "seed", "window_half_width_m", "ci_level", "sinr_threshold_db",
                                 "rate_scale", "ee_threshold_bps_per_w", "rate_method", "engines",
                                 "metrics", "per_class"}
        if leftover:
            raise ConfigError("grid keys given without an axis", sorted(leftover)[0], lines[sorted(leftover)[0]])
        return params, None, scenario

    spec = sweep_from_mapping(sweep, scenario, lines)
    return params, spec, scenario


def sweep_from_mapping(sweep: dict, scenario: dict, lines: dict | None = None) -> SweepSpec:
    lines = lines or {}
    axis = sweep["axis"].strip()
    grid = _grid(sweep, lines)
    metrics = tuple(_parse_list(sweep.get("metrics", "sinr")))
    engines = tuple(_parse_list(sweep.get("engines", "analytic")))
    mc = None
    if "mc" in engines:
        kwargs = {}
        if "trials" in sweep:
            kwargs["trials"] = int(_parse_float(sweep["trials"], "trials", lines.get("trials")))
        if "seed" in sweep:
            kwargs["seed"] = int(_parse_float(sweep["seed"], "seed", lines.get("seed")))
        if "window_half_width_m" in sweep:
            kwargs["window_half_width"] = _parse_float(sweep["window_half_width_m"], "window_half_width_m",
                                                       lines.get("window_half_width_m"))
        if "ci_level" in sweep:
            kwargs["ci_level"] = _parse_float(sweep["ci_level"], "ci_level", lines.get("ci_level"))
        try:
            mc = SimulationSettings(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc), "trials") from exc
    opts = {}
    for key, name in (("sinr_threshold_db", "sinr_threshold_db"), ("rate_scale", "rate_scale"),
                      ("ee_threshold_bps_per_w", "ee_threshold")):
        if key in sweep:
            opts[name] = _parse_float(sweep[key], key, lines.get(key))
    if "rate_method" in sweep:
        opts["rate_method"] = sweep["rate_method"].strip()
    if "per_class" in sweep:
        flag = sweep["per_class"].strip().lower()
        if flag not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError("per_class must be a boolean", "per_class", lines.get("per_class"))
        opts["per_class"] = flag in ("true", "1", "yes")
    try:
        return SweepSpec(axis=axis, grid=grid, fixed=dict(scenario), metrics=metrics, engines=engines,
                         mc_settings=mc, **opts)
    except ConfigError as exc:
        if exc.line is None and exc.key in lines:
            raise ConfigError(str(exc).split(": ", 1)[-1], exc.key, lines[exc.key]) from None
        raise


def load_config(path) -> tuple[NetworkParams, SweepSpec | None]:
    """Read a config file; unspecified scenario keys take their defaults."""
    text = Path(path).read_text(encoding="utf-8")
    params, spec, _ = parse_config(text)
    return params, spec
