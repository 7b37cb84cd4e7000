"""Movement detection over summed per-stream standard deviations.

At each tick the detector sums, across all streams, the population standard
deviation of the trailing window of length ``d`` seconds. Those sums form a
learned "quiet office" distribution whose density is estimated with a
Gaussian kernel; a tick is anomalous when its sum reaches the distribution's
(100 - alpha)-th percentile. New sums are queued in batches of ``b`` and fold
back into the profile only when fewer than a fraction ``tau`` of the batch
was anomalous, so the profile tracks slow environmental drift without ever
learning from movement itself. Runs of anomalous ticks coalesce into
variation windows.

A trailing window ending at time t covers the half-open interval (t - d, t],
i.e. the most recent ``d * sample_rate_hz`` samples — the same closure
convention the activity module uses for idle queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import ndtr
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .config import Config, tick_of
from .errors import DegenerateProfileError, ValidationError
from .simulate import RssiTrace

NORMAL = "normal"
ANOMALOUS = "anomalous"

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Silverman bandwidths below this floor (all-but-identical samples) would
# collapse the density onto spikes; clamp instead.
MIN_BANDWIDTH_DB = 1e-3


def sum_std(trace: RssiTrace, t: float, d: float) -> float:
    """Sum over streams of the population std dev of the window (t - d, t]."""
    n = tick_of(d, trace.sample_rate_hz)
    k = tick_of(t, trace.sample_rate_hz)
    if k < n:
        raise ValidationError(f"t={t} precedes the first full window (t >= d={d})")
    if k >= trace.n_ticks:
        raise ValidationError(f"t={t} beyond trace end ({trace.duration}s)")
    window = trace.values[:, k - n + 1:k + 1]
    # anchoring on the first sample keeps constant windows at exactly zero
    shifted = window - window[:, :1]
    return float(np.std(shifted, axis=1).sum())


def sum_std_series(trace: RssiTrace, d: float) -> tuple[np.ndarray, np.ndarray]:
    """(tick indices, s_t values) for every tick with a full trailing window."""
    n = tick_of(d, trace.sample_rate_hz)
    if trace.n_ticks <= n:
        raise ValidationError(
            f"trace ({trace.duration}s) shorter than the window d={d}s")
    # per-stream loop keeps the windowed intermediate at one stream's size
    n_windows = trace.n_ticks - n + 1
    stds = np.empty((len(trace.streams), n_windows))
    for i in range(len(trace.streams)):
        windows = sliding_window_view(trace.values[i], n)
        stds[i] = np.std(windows - windows[:, :1], axis=-1)
    s = stds.sum(axis=0)
    # window j covers ticks [j, j + n); it is the trailing window of tick
    # j + n - 1, valid from t >= d i.e. tick >= n
    ticks = np.arange(n, trace.n_ticks)
    return ticks, s[1:]


@dataclass
class GaussianKde:
    """Kernel density estimate f(r) = (1/nh) sum K((r - r_i) / h)."""

    values: np.ndarray
    h: float

    def pdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = (x[:, None] - self.values[None, :]) / self.h
        out = np.exp(-0.5 * z * z).sum(axis=1) / (self.values.size * self.h * _SQRT_2PI)
        return out

    def __call__(self, x):
        return self.pdf(x)

    def cdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = (x[:, None] - self.values[None, :]) / self.h
        return ndtr(z).mean(axis=1)


def silverman_bandwidth(values: np.ndarray) -> float:
    sigma = float(np.std(values))
    return max(1.06 * sigma * values.size ** (-1 / 5), MIN_BANDWIDTH_DB)


def kde_estimate(values, bandwidth_rule: str | float = "silverman"
                 ) -> tuple[GaussianKde, float]:
    """Estimate the density of a sample with a Gaussian kernel.

    ``bandwidth_rule`` is "silverman" (1.06 * std * n^(-1/5), floored at
    MIN_BANDWIDTH_DB) or an explicit bandwidth; a forced bandwidth also
    admits single-value samples.
    """
    values = np.asarray(values, dtype=float).ravel()
    if isinstance(bandwidth_rule, str):
        if bandwidth_rule != "silverman":
            raise ValidationError(f"unknown bandwidth rule {bandwidth_rule!r}")
        if values.size < 2:
            raise DegenerateProfileError(
                f"need at least 2 values to estimate a density, got {values.size}")
        if np.ptp(values) == 0:
            raise DegenerateProfileError(
                "all profile values identical; bandwidth would degenerate")
        h = silverman_bandwidth(values)
    else:
        h = float(bandwidth_rule)
        if h <= 0:
            raise ValidationError(f"bandwidth must be > 0, got {h}")
        if values.size < 1:
            raise DegenerateProfileError("cannot estimate a density of nothing")
    return GaussianKde(values, h), h


def percentile_threshold(kde: GaussianKde, alpha: float) -> float:
    """Smallest x with CDF(x) >= (100 - alpha) / 100, by bisection."""
    if not 0 < alpha < 100:
        raise ValidationError(f"alpha must be in (0, 100), got {alpha}")
    q = (100.0 - alpha) / 100.0
    lo = float(kde.values.min()) - 10.0 * kde.h
    hi = float(kde.values.max()) + 10.0 * kde.h
    for _ in range(200):
        if hi - lo <= 1e-4 * max(1.0, abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if float(kde.cdf(mid)[0]) >= q:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class NormalProfile:
    """Learned distribution of quiet-office std-dev sums plus its threshold."""

    values: np.ndarray
    alpha: float
    bandwidth_rule: str | float = "silverman"
    h: float = field(init=False)
    kde: GaussianKde = field(init=False)
    ub: float = field(init=False)
    version: int = field(init=False, default=0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size < 2:
            raise DegenerateProfileError(
                f"profile needs at least 2 values, got {self.values.size}")
        self._refresh()

    def _refresh(self):
        self.kde, self.h = kde_estimate(self.values, self.bandwidth_rule)
        self.ub = percentile_threshold(self.kde, self.alpha)

    def replace_oldest(self, batch) -> None:
        """Drop the oldest len(batch) values, append the batch, re-estimate."""
        batch = np.asarray(batch, dtype=float).ravel()
        if batch.size > self.values.size:
            raise ValidationError(
                f"batch of {batch.size} larger than profile of {self.values.size}")
        self.values = np.concatenate([self.values[batch.size:], batch])
        self._refresh()
        self.version += 1


@dataclass
class UpdateQueue:
    """Pending profile-update batch with its anomalous-decision tally."""

    capacity: int
    tau: float
    values: list[float] = field(default_factory=list)
    anomalous: int = 0

    def append(self, value: float, was_anomalous: bool) -> None:
        self.values.append(value)
        if was_anomalous:
            self.anomalous += 1

    @property
    def anomalous_fraction(self) -> float:
        return self.anomalous / len(self.values) if self.values else 0.0

    def clear(self) -> None:
        self.values = []
        self.anomalous = 0


def md_step(profile: NormalProfile, queue: UpdateQueue, s_t: float) -> str:
    """One detection step: threshold s_t, queue it, flush full batches.

    Returns ANOMALOUS iff s_t >= profile.ub (the threshold side is
    inclusive). When the queue reaches capacity it is committed into the
    profile only if its anomalous fraction is below tau, and emptied either
    way, so the queue never exceeds the batch size.
    """
    was_anomalous = s_t >= profile.ub
    queue.append(s_t, was_anomalous)
    if len(queue.values) >= queue.capacity:
        if queue.anomalous_fraction < queue.tau:
            profile.replace_oldest(queue.values)
        queue.clear()
    return ANOMALOUS if was_anomalous else NORMAL


@dataclass(frozen=True)
class VariationWindow:
    """Interval [t1, t2] of coalesced anomalous detection decisions."""

    t1: float
    t2: float

    def __post_init__(self):
        if self.t2 < self.t1:
            raise ValidationError(f"window end {self.t2} precedes start {self.t1}")

    @property
    def duration(self) -> float:
        return self.t2 - self.t1

    def overlaps(self, lo: float, hi: float) -> bool:
        return max(self.t1, lo) <= min(self.t2, hi)


class WindowTracker:
    """Coalesce a stream of decisions into variation windows.

    Up to ``gap_ticks`` consecutive normal decisions inside a run are
    flicker, not closure; the window closes once the gap is exceeded and its
    end is the last anomalous tick. The same tracker drives both offline
    detection and the online controller so their window timings agree.
    """

    def __init__(self, sample_rate_hz: float, gap_ticks: int = 1):
        self.fs = sample_rate_hz
        self.gap_ticks = gap_ticks
        self.start: int | None = None
        self.last_anomalous: int | None = None

    def update(self, tick: int, decision: str) -> VariationWindow | None:
        """Feed one decision; returns the window it closed, if any."""
        closed = None
        if decision == ANOMALOUS:
            if self.start is None:
                self.start = tick
            self.last_anomalous = tick
        elif self.start is not None and tick - self.last_anomalous > self.gap_ticks:
            closed = VariationWindow(self.start / self.fs,
                                     self.last_anomalous / self.fs)
            self.start = None
            self.last_anomalous = None
        return closed

    def finish(self) -> VariationWindow | None:
        """Close any window still open at end of input."""
        if self.start is None:
            return None
        window = VariationWindow(self.start / self.fs, self.last_anomalous / self.fs)
        self.start = None
        self.last_anomalous = None
        return window

    def open_duration(self, tick: int) -> float:
        """Seconds the current window has been open; 0 when none is."""
        if self.start is None:
            return 0.0
        return (tick - self.start) / self.fs

    @property
    def open_start_time(self) -> float | None:
        return None if self.start is None else self.start / self.fs


@dataclass
class DetectionResult:
    """Full per-tick record of one detection pass."""

    ticks: np.ndarray
    s: np.ndarray
    ub: np.ndarray
    decisions: list[str]
    windows: list[VariationWindow]
    sample_rate_hz: float
    n_updates: int

    def decision_at(self) -> dict[int, str]:
        return dict(zip(self.ticks.tolist(), self.decisions))


class MovementDetector(BaseEstimator):
    """Streaming anomaly detector over std-dev sums.

    Parameters
    ----------
    config : Config
        Pipeline parameters (d, alpha, b, tau, bandwidth rule).
    bootstrap_s : float
        Leading movement-free seconds of a trace used to build the initial
        profile when running end-to-end over a stored trace.
    gap_ticks : int
        Normal-decision flicker tolerated inside a variation window.
    """

    def __init__(self, config: Config | None = None, bootstrap_s: float = 120.0,
                 gap_ticks: int = 1):
        self.config = config
        self.bootstrap_s = bootstrap_s
        self.gap_ticks = gap_ticks

    def _config(self) -> Config:
        return self.config if self.config is not None else Config()

    def fit(self, values) -> "MovementDetector":
        """Initialize the normal profile from quiet-period std-dev sums."""
        cfg = self._config()
        self.profile_ = NormalProfile(np.asarray(values, dtype=float),
                                      cfg.alpha, cfg.kde_bandwidth_rule)
        self.queue_ = UpdateQueue(cfg.b, cfg.tau)
        return self

    def step(self, s_t: float) -> str:
        if not hasattr(self, "profile_"):
            raise NotFittedError("MovementDetector.fit must run before step")
        return md_step(self.profile_, self.queue_, s_t)

    def run(self, trace: RssiTrace) -> DetectionResult:
        """Bootstrap on the leading quiet period, then stream the rest."""
        cfg = self._config()
        if trace.duration <= self.bootstrap_s:
            raise ValidationError(
                f"trace ({trace.duration}s) shorter than bootstrap "
                f"({self.bootstrap_s}s)")
        ticks, s = sum_std_series(trace, cfg.d)
        boot_end = tick_of(self.bootstrap_s, cfg.sample_rate_hz)
        boot = s[ticks <= boot_end]
        if boot.size < 2:
            raise ValidationError(
                "bootstrap period too short for the sliding window")
        self.fit(boot)
        live = ticks > boot_end
        live_ticks = ticks[live]
        live_s = s[live]
        base_version = self.profile_.version
        tracker = WindowTracker(cfg.sample_rate_hz, self.gap_ticks)
        decisions: list[str] = []
        ubs = np.empty(live_s.size)
        windows: list[VariationWindow] = []
        for i, (k, value) in enumerate(zip(live_ticks.tolist(), live_s.tolist())):
            ubs[i] = self.profile_.ub
            decision = self.step(value)
            decisions.append(decision)
            closed = tracker.update(k, decision)
            if closed is not None:
                windows.append(closed)
        final = tracker.finish()
        if final is not None:
            windows.append(final)
        return DetectionResult(live_ticks, live_s, ubs, decisions, windows,
                               cfg.sample_rate_hz,
                               self.profile_.version - base_version)

    def detect(self, trace: RssiTrace) -> list[VariationWindow]:
        """All variation windows of a trace, unfiltered by duration.

        Duration filtering happens downstream so one detection pass serves
        every threshold swept during evaluation.
        """
        return self.run(trace).windows


def detect_variation_windows(trace: RssiTrace, config: Config,
                             bootstrap_s: float = 120.0,
                             gap_ticks: int = 1) -> list[VariationWindow]:
    return MovementDetector(config, bootstrap_s, gap_ticks).detect(trace)


def write_debug_csv(result: DetectionResult, path) -> None:
    """Per-tick t,s_t,ub,decision record for plotting or inspection."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "s_t", "ub", "decision"])
        for k, s_t, ub, decision in zip(result.ticks.tolist(), result.s.tolist(),
                                        result.ub.tolist(), result.decisions):
            writer.writerow([f"{k / result.sample_rate_hz:.6f}",
                             repr(s_t), repr(ub), decision])
