"""Named figure sweeps.  Each series of a preset is written to its own table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..montecarlo import SimulationSettings
from .config import DEFAULT_EE_THRESHOLD, SweepSpec

B1_GRID = tuple(float(x) for x in np.arange(2.5, 20.0 + 1e-9, 2.5))
EE_TAU_GRID = tuple(float(x) for x in np.round(np.logspace(2, 5, 13), 6))
LAMBDA2_GRID = tuple(float(x) for x in np.arange(1.0, 51.0))


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    series: dict      # series name -> SweepSpec
    headline: str     # series the saturation/shape checks refer to


def _tag(value: float) -> str:
    return f"{value:g}".replace("-", "m").replace(".", "p")


def _b1_sweep(metric, engines, mc):
    series = {}
    for beta_db in (0.0, -10.0):
        for eta in (0.2, 0.8):
            series[f"beta{_tag(beta_db)}db_eta{_tag(eta)}"] = SweepSpec(
                axis="b1_db", grid=B1_GRID, fixed={"b2_db": 2.5, "beta_db": beta_db, "eta": eta},
                metrics=(metric,), engines=engines, mc_settings=mc)
    return series


def _ee_vs_tau(families, engines, mc):
    series = {}
    for b1_db, b2_db in families:
        for beta_db in (0.0, -10.0):
            series[f"b1{_tag(b1_db)}db_b2{_tag(b2_db)}db_beta{_tag(beta_db)}db"] = SweepSpec(
                axis="threshold", grid=EE_TAU_GRID,
                fixed={"b1_db": b1_db, "b2_db": b2_db, "beta_db": beta_db, "eta": 0.2},
                metrics=("ee",), engines=engines, mc_settings=mc)
    return series


def _lambda2_sweep(engines, mc):
    series = {}
    for b1_db, beta_db in ((0.0, 0.0), (10.0, 0.0), (10.0, -10.0), (20.0, -10.0)):
        series[f"b1{_tag(b1_db)}db_beta{_tag(beta_db)}db"] = SweepSpec(
            axis="lambda2", grid=LAMBDA2_GRID,
            fixed={"b1_db": b1_db, "b2_db": 0.0, "beta_db": beta_db, "eta": 0.2},
            metrics=("ee",), engines=engines, mc_settings=mc, ee_threshold=DEFAULT_EE_THRESHOLD)
    return series


PRESET_NAMES = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8")


def get_preset(name: str, engines=("analytic",), mc_settings: SimulationSettings | None = None) -> Preset:
    engines = tuple(engines)
    if "mc" in engines and mc_settings is None:
        mc_settings = SimulationSettings()
    if name == "fig3":
        return Preset(name, "SINR coverage at 0 dB vs B1", _b1_sweep("sinr", engines, mc_settings),
                      "betam10db_eta0p2")
    if name == "fig4":
        return Preset(name, "rate coverage at the class targets vs B1",
                      _b1_sweep("rate", engines, mc_settings), "betam10db_eta0p2")
    if name == "fig5":
        return Preset(name, f"EE coverage at {DEFAULT_EE_THRESHOLD:g} bit/s/W vs B1",
                      _b1_sweep("ee", engines, mc_settings), "betam10db_eta0p2")
    if name == "fig6":
        families = [(b1, 0.0) for b1 in (0.0, 5.0, 10.0, 15.0)]
        return Preset(name, "EE coverage vs threshold for several B1 (B2 = 0 dB)",
                      _ee_vs_tau(families, engines, mc_settings), "b110db_b20db_betam10db")
    if name == "fig7":
        families = [(10.0, b2) for b2 in (0.0, 2.5, 5.0, 7.5)]
        return Preset(name, "EE coverage vs threshold for several B2 (B1 = 10 dB)",
                      _ee_vs_tau(families, engines, mc_settings), "b110db_b20db_betam10db")
    if name == "fig8":
        return Preset(name, f"EE coverage at {DEFAULT_EE_THRESHOLD:g} bit/s/W vs small-cell density",
                      _lambda2_sweep(engines, mc_settings), "b110db_betam10db")
    raise KeyError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
