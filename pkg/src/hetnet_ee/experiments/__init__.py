"""Config files, sweeps, figure presets and engine cross-checks."""

from .config import ConfigError, SweepSpec, load_config, parse_config
from .sweep import Row, SweepTable, run_sweep
from .presets import PRESET_NAMES, Preset, get_preset
from .compare import ComparisonReport, compare_analytic_mc

__all__ = ["ConfigError", "SweepSpec", "load_config", "parse_config", "Row", "SweepTable",
           "run_sweep", "PRESET_NAMES", "Preset", "get_preset", "ComparisonReport",
           "compare_analytic_mc"]
