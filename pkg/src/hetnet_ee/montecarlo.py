"""System-level Monte Carlo simulator of the two-tier network.

Each trial samples both BS tiers as homogeneous PPPs in the square window
[-L, L]^2 with the typical user at the origin, classifies the typical user
with the two-bias rule, draws Rayleigh fading per link and computes SINR,
cell load, rate and energy efficiency.

Randomness is counter based: every (seed, trial, purpose, attempt) tuple
addresses its own Philox stream, so a trial's outcome does not depend on
which other trials ran, in what order, or in which process.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import _kernels
from .model import NetworkParams, ScheduleClass, UserSet, total_bs_power

logger = logging.getLogger(__name__)

MIN_TRIALS_FOR_COVERAGE = 1000
LOW_CONFIDENCE_SAMPLES = 50

_SET_CODES = {UserSet.U1: 0, UserSet.UD: 1, UserSet.UDBAR: 2}
_SET_FROM_CODE = {v: k for k, v in _SET_CODES.items()}
_CLASS_CODES = {ScheduleClass.B: 0, ScheduleClass.BBAR: 1, ScheduleClass.D: 2, ScheduleClass.DBAR: 3}
_CLASS_FROM_CODE = {v: k for k, v in _CLASS_CODES.items()}


class Stream(enum.IntEnum):
    POINTS = 0
    FADING = 1
    SCHEDULE = 2
    USERS = 3


def trial_rng(seed: int, trial: int, purpose: Stream, attempt: int = 0) -> np.random.Generator:
    """Independent generator for one (seed, trial, purpose, attempt)."""
    key = int(seed) & ((1 << 64) - 1)
    counter = [0, int(attempt), int(purpose), int(trial)]
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class SimulationSettings:
    window_half_width: float = 10_000.0  # m
    trials: int = 20_000
    seed: int = 20180101
    ci_level: float = 0.99

    def __post_init__(self):
        if not self.window_half_width > 0:
            raise ValueError("window_half_width must be > 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must lie in (0, 1)")

    def check_window(self, params: NetworkParams) -> None:
        """The sparser tier's mean nearest-BS distance must be below L / 10."""
        sparse = min(params.tier1.density, params.tier2.density)
        mean_nn = 0.5 / math.sqrt(sparse)
        if not mean_nn < self.window_half_width / 10.0:
            raise ValueError(
                f"window_half_width {self.window_half_width:g} m is too small: the sparser tier's mean "
                f"nearest-BS distance is {mean_nn:.1f} m (needs < L/10)")


@dataclass
class NetworkRealization:
    """One sampled world.  Fading and users are generated on demand from the
    trial's own streams, so asking for them never perturbs the BS layout."""

    params: NetworkParams
    settings: SimulationSettings
    trial: int
    attempt: int
    tier1_bs: np.ndarray
    tier2_bs: np.ndarray
    _fading: tuple | None = field(default=None, repr=False)

    typical_user = (0.0, 0.0)

    def bs(self, k: int) -> np.ndarray:
        return self.tier1_bs if k == 1 else self.tier2_bs

    def fading(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit-mean exponential power gains from every BS to the typical user."""
        if self._fading is None:
            rng = trial_rng(self.settings.seed, self.trial, Stream.FADING, self.attempt)
            h1 = rng.exponential(size=self.tier1_bs.shape[0])
            h2 = rng.exponential(size=self.tier2_bs.shape[0])
            self._fading = (h1, h2)
        return self._fading

    def users_in_disk(self, centre, radius: float) -> np.ndarray:
        """User PPP (other than the typical user) restricted to a disk and the window."""
        rng = trial_rng(self.settings.seed, self.trial, Stream.USERS, self.attempt)
        n = rng.poisson(self.params.user_density * math.pi * radius * radius)
        r = radius * np.sqrt(rng.random(n))
        theta = 2 * math.pi * rng.random(n)
        pts = np.column_stack([centre[0] + r * np.cos(theta), centre[1] + r * np.sin(theta)])
        L = self.settings.window_half_width
        inside = (np.abs(pts[:, 0]) <= L) & (np.abs(pts[:, 1]) <= L)
        return pts[inside]


def sample_network(params: NetworkParams, settings: SimulationSettings, trial: int) -> NetworkRealization:
    """Draw both BS tiers for ``trial``.

    A window with no BS at all is redrawn from the next attempt's stream;
    ``realization.attempt`` records how many redraws were needed.
    """
    L = settings.window_half_width
    area = 4.0 * L * L
    attempt = 0
    while True:
        rng = trial_rng(settings.seed, trial, Stream.POINTS, attempt)
        n1 = rng.poisson(params.tier1.density * area)
        n2 = rng.poisson(params.tier2.density * area)
        tier1 = rng.uniform(-L, L, size=(n1, 2))
        tier2 = rng.uniform(-L, L, size=(n2, 2))
        if n1 + n2 > 0:
            return NetworkRealization(params, settings, trial, attempt, tier1, tier2)
        attempt += 1


def _classify(d1sq, d2sq, params: NetworkParams) -> np.ndarray:
    """Set codes from squared nearest distances per tier (inf when a tier is absent)."""
    t1, t2 = params.tier1, params.tier2
    with np.errstate(divide="ignore"):
        rx1 = t1.tx_power * np.power(d1sq, -0.5 * t1.path_loss_exp)
        rx2 = t2.tx_power * np.power(d2sq, -0.5 * t2.path_loss_exp)
    codes = np.full(np.shape(d1sq), _SET_CODES[UserSet.UDBAR], dtype=np.int8)
    codes[rx1 >= params.cre.bias_b2 * rx2] = _SET_CODES[UserSet.UD]
    codes[rx1 >= params.cre.bias_b1 * rx2] = _SET_CODES[UserSet.U1]
    return codes


def classify_points(realization: NetworkRealization, points: np.ndarray, params: NetworkParams,
                    tier_subsets=None):
    """Association set and serving BS index for each row of ``points``.

    ``tier_subsets`` optionally restricts the candidate BSs per tier to index
    arrays known to contain every point's nearest BS.
    """
    points = np.ascontiguousarray(points, dtype=float)
    qx, qy = points[:, 0].copy(), points[:, 1].copy()
    nearest = []
    for k in (1, 2):
        bs = realization.bs(k)
        sub = None if tier_subsets is None else tier_subsets[k - 1]
        if sub is not None:
            bs = bs[sub]
        idx, d2 = _kernels.nearest(qx, qy, np.ascontiguousarray(bs[:, 0]), np.ascontiguousarray(bs[:, 1]))
        if sub is not None:
            idx = np.where(idx >= 0, sub[np.maximum(idx, 0)], -1)
        nearest.append((idx, d2))
    codes = _classify(nearest[0][1], nearest[1][1], params)
    serving = np.where(codes == _SET_CODES[UserSet.U1], nearest[0][0], nearest[1][0])
    return codes, serving


def classify_user(realization: NetworkRealization, user_point, params: NetworkParams):
    """(UserSet, serving tier, serving BS index) for a single location."""
    codes, serving = classify_points(realization, np.asarray([user_point], dtype=float), params)
    user_set = _SET_FROM_CODE[int(codes[0])]
    return user_set, user_set.serving_tier, int(serving[0])


@dataclass(frozen=True)
class TypicalUserOutcome:
    user_set: UserSet
    schedule_class: ScheduleClass
    sinr: float
    cell_load: int
    rate: float
    ee: float


def _cell_radius(realization: NetworkRealization, tier: int, serving: int) -> float:
    """Radius of a disk around the serving BS that contains its same-tier Voronoi cell."""
    bs = realization.bs(tier)
    b0 = bs[serving]
    others = np.delete(bs, serving, axis=0)
    dx = np.ascontiguousarray(others[:, 0] - b0[0])
    dy = np.ascontiguousarray(others[:, 1] - b0[1])
    radius = 1.5 / math.sqrt(realization.params.tier(tier).density)
    cap = 2.0 * math.sqrt(2.0) * realization.settings.window_half_width
    while radius < cap:
        if _kernels.circle_covered(dx, dy, radius):
            return radius
        radius *= 1.5
    return cap


def cell_load(realization: NetworkRealization, user_set: UserSet, serving: int,
              params: NetworkParams) -> int:
    """Users of ``user_set`` attached to the serving BS, the typical user included."""
    tier = user_set.serving_tier
    b0 = realization.bs(tier)[serving]
    radius = _cell_radius(realization, tier, serving)
    users = realization.users_in_disk(b0, radius)
    if users.shape[0] == 0:
        return 1
    subsets = []
    for k in (1, 2):
        bs = realization.bs(k)
        if bs.shape[0] == 0:
            subsets.append(np.zeros(0, dtype=np.int64))
            continue
        dist = np.hypot(bs[:, 0] - b0[0], bs[:, 1] - b0[1])
        reach = 2.0 * radius + dist.min()
        subsets.append(np.flatnonzero(dist <= reach))
    codes, srv = classify_points(realization, users, params, subsets)
    same = (codes == _SET_CODES[user_set]) & (srv == serving)
    return 1 + int(same.sum())


def _sinr(realization: NetworkRealization, params: NetworkParams, cls: ScheduleClass,
          serving: int) -> float:
    h1, h2 = realization.fading()
    t1, t2 = params.tier1, params.tier2
    tier = cls.serving_tier
    b1 = np.ascontiguousarray(realization.tier1_bs)
    b2 = np.ascontiguousarray(realization.tier2_bs)
    skip1 = serving if tier == 1 else -1
    skip2 = serving if tier == 2 else -1
    i1 = t1.tx_power * _kernels.path_gain_sum(b1[:, 0].copy(), b1[:, 1].copy(), h1, t1.path_loss_exp, skip1)
    i2 = t2.tx_power * _kernels.path_gain_sum(b2[:, 0].copy(), b2[:, 1].copy(), h2, t2.path_loss_exp, skip2)
    tp = params.tier(tier)
    pos = realization.bs(tier)[serving]
    h = (h1 if tier == 1 else h2)[serving]
    signal = tp.tx_power * h * float(pos[0] ** 2 + pos[1] ** 2) ** (-0.5 * tp.path_loss_exp)
    beta = params.cre.power_beta
    if cls is ScheduleClass.B:
        return beta * signal / (beta * i1 + i2 + params.noise_power)
    if cls is ScheduleClass.D:
        return signal / (beta * i1 + i2 + params.noise_power)
    return signal / (i1 + i2 + params.noise_power)


def schedule_class_for(user_set: UserSet, params: NetworkParams, seed: int, trial: int) -> ScheduleClass:
    if user_set is UserSet.UD:
        return ScheduleClass.D
    if user_set is UserSet.UDBAR:
        return ScheduleClass.DBAR
    u = trial_rng(seed, trial, Stream.SCHEDULE).random()
    return ScheduleClass.B if u < params.cre.partition_eta else ScheduleClass.BBAR


def typical_user_metrics(realization: NetworkRealization, params: NetworkParams,
                         with_load: bool = True) -> TypicalUserOutcome:
    """Classify, schedule and measure the typical user of one realization.

    Without ``with_load`` the cell load is reported as 1 (single-user share).
    """
    user_set, tier, serving = classify_user(realization, realization.typical_user, params)
    cls = schedule_class_for(user_set, params, realization.settings.seed, realization.trial)
    sinr = _sinr(realization, params, cls, serving)
    load = cell_load(realization, user_set, serving, params) if with_load else 1
    rate = params.bandwidth / load * math.log2(1.0 + sinr)
    ee = rate / total_bs_power(params.tier(tier))
    return TypicalUserOutcome(user_set, cls, sinr, load, rate, ee)


# ---------------------------------------------------------------------------
# batched runs
# ---------------------------------------------------------------------------

@dataclass
class SimulationResult:
    """Per-trial typical-user outcomes in trial order."""

    params: NetworkParams
    settings: SimulationSettings
    user_set: np.ndarray        # int8 set codes
    schedule_class: np.ndarray  # int8 class codes (-1 when only association was simulated)
    sinr: np.ndarray
    load: np.ndarray
    rate: np.ndarray
    ee: np.ndarray
    resampled: int
    with_load: bool

    @property
    def trials(self) -> int:
        return int(self.user_set.shape[0])

    def metric(self, name: str) -> np.ndarray:
        if name not in ("sinr", "rate", "ee"):
            raise ValueError(f"unknown metric {name!r}")
        if name != "sinr" and not self.with_load:
            raise ValueError(f"metric {name!r} needs a run with cell loads")
        return getattr(self, name)


def _run_chunk(params: NetworkParams, settings: SimulationSettings, start: int, stop: int,
               mode: str):
    n = stop - start
    user_set = np.empty(n, dtype=np.int8)
    sched = np.full(n, -1, dtype=np.int8)
    sinr = np.full(n, np.nan)
    load = np.ones(n, dtype=np.int64)
    resampled = 0
    for i, trial in enumerate(range(start, stop)):
        real = sample_network(params, settings, trial)
        resampled += real.attempt > 0
        if mode == "assoc":
            s, _, _ = classify_user(real, real.typical_user, params)
            user_set[i] = _SET_CODES[s]
            continue
        out = typical_user_metrics(real, params, with_load=(mode == "full"))
        user_set[i] = _SET_CODES[out.user_set]
        sched[i] = _CLASS_CODES[out.schedule_class]
        sinr[i] = out.sinr
        load[i] = out.cell_load
    return user_set, sched, sinr, load, resampled


def simulate(params: NetworkParams, settings: SimulationSettings, mode: str = "full",
             workers: int = 1, chunk_size: int = 2000) -> SimulationResult:
    """Run ``settings.trials`` independent trials.

    ``mode`` is ``"assoc"`` (association only), ``"sinr"`` (no load) or
    ``"full"``.  Chunks are reduced in trial order, so the result does not
    depend on ``workers``.
    """
    if mode not in ("assoc", "sinr", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    settings.check_window(params)
    bounds = [(s, min(settings.trials, s + chunk_size)) for s in range(0, settings.trials, chunk_size)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, *zip(*[(params, settings, a, b, mode) for a, b in bounds])))
    else:
        parts = [_run_chunk(params, settings, a, b, mode) for a, b in bounds]
    user_set = np.concatenate([p[0] for p in parts])
    sched = np.concatenate([p[1] for p in parts])
    sinr = np.concatenate([p[2] for p in parts])
    load = np.concatenate([p[3] for p in parts])
    resampled = sum(p[4] for p in parts)
    if resampled > 1e-4 * settings.trials:
        logger.warning("%d of %d trials needed a redrawn window", resampled, settings.trials)
    tier = np.where(user_set == _SET_CODES[UserSet.U1], 1, 2)
    p_total = np.where(tier == 1, total_bs_power(params.tier1), total_bs_power(params.tier2))
    with np.errstate(invalid="ignore"):
        rate = params.bandwidth / load * np.log2(1.0 + sinr)
    ee = rate / p_total
    return SimulationResult(params, settings, user_set, sched, sinr, load, rate, ee, resampled,
                            with_load=(mode == "full"))


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def wilson_interval(successes: int, n: int, level: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    p = successes / n
    z2n = z * z / n
    centre = (p + 0.5 * z2n) / (1.0 + z2n)
    half = z / (1.0 + z2n) * math.sqrt(p * (1 - p) / n + z2n / (4 * n))
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class MCEstimate:
    """Empirical proportion with its Wilson interval."""

    value: float
    lower: float
    upper: float
    samples: int
    weight: float = 1.0
    low_confidence: bool = False

    @property
    def ci_half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def _estimate(hits: int, n: int, level: float, weight: float = 1.0) -> MCEstimate:
    lo, hi = wilson_interval(hits, n, level)
    value = hits / n if n else float("nan")
    return MCEstimate(value, lo, hi, n, weight, n < LOW_CONFIDENCE_SAMPLES)


def association_frequencies(result: SimulationResult) -> dict[UserSet, MCEstimate]:
    n = result.trials
    level = result.settings.ci_level
    return {s: _estimate(int(np.sum(result.user_set == code)), n, level)
            for s, code in _SET_CODES.items()}


@dataclass(frozen=True)
class CoverageEstimate:
    threshold: float
    overall: MCEstimate
    per_class: dict  # ScheduleClass -> MCEstimate (conditional; weight = class frequency)


def coverage_from_result(result: SimulationResult, metric: str, thresholds) -> list[CoverageEstimate]:
    values = result.metric(metric)
    n = result.trials
    level = result.settings.ci_level
    out = []
    for t in thresholds:
        t = float(t)
        hit = values >= t
        per_class = {}
        for cls, code in _CLASS_CODES.items():
            mask = result.schedule_class == code
            m = int(mask.sum())
            per_class[cls] = _estimate(int(np.sum(hit & mask)), m, level, m / n)
        out.append(CoverageEstimate(t, _estimate(int(hit.sum()), n, level), per_class))
    return out


def scaled_rate_coverage(result: SimulationResult, scales) -> list[CoverageEstimate]:
    """Rate coverage where each user is held to ``scale`` times its own class target."""
    rates = result.metric("rate")
    n = result.trials
    level = result.settings.ci_level
    target = np.empty(n)
    for cls, code in _CLASS_CODES.items():
        target[result.schedule_class == code] = result.params.rate_target(cls.rate_tier)
    out = []
    for scale in scales:
        scale = float(scale)
        hit = rates >= scale * target
        per_class = {}
        for cls, code in _CLASS_CODES.items():
            mask = result.schedule_class == code
            m = int(mask.sum())
            per_class[cls] = _estimate(int(np.sum(hit & mask)), m, level, m / n)
        out.append(CoverageEstimate(scale, _estimate(int(hit.sum()), n, level), per_class))
    return out


def estimate_coverage(metric: str, thresholds, params: NetworkParams, settings: SimulationSettings,
                      workers: int = 1) -> list[CoverageEstimate]:
    """Empirical P(metric >= threshold) for each threshold, with Wilson intervals.

    SINR thresholds are linear, rate thresholds bit/s, EE thresholds bit/s/W.
    """
    if settings.trials < MIN_TRIALS_FOR_COVERAGE:
        raise ValueError(f"coverage estimation needs >= {MIN_TRIALS_FOR_COVERAGE} trials")
    mode = "sinr" if metric == "sinr" else "full"
    result = simulate(params, settings, mode=mode, workers=workers)
    return coverage_from_result(result, metric, thresholds)
