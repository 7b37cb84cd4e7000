"""Runtime parameters and the time/stream bookkeeping used by every stage.

All times live on a fixed sampling grid: a trace with rate ``sample_rate_hz``
has one reading per stream per tick, and every timestamp handed between
modules is a multiple of ``1 / sample_rate_hz``. Working on the grid (rather
than wall clock) is what makes streaming and batch recomputation exactly
comparable.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .errors import ParseError, ValidationError

# Reserved label for "someone entered the office"; workstation labels are
# w_1 .. w_k and must not collide with it.
ENTRY_LABEL = "w_0"


class StreamId(NamedTuple):
    """Ordered (transmitter, receiver) pair identifying one RSSI stream."""

    tx: int
    rx: int


def all_streams(device_ids) -> list[StreamId]:
    """Every ordered pair of distinct devices: m devices -> m*(m-1) streams."""
    ids = sorted(device_ids)
    if len(set(ids)) != len(ids):
        raise ValidationError("device ids must be distinct")
    return [StreamId(a, b) for a in ids for b in ids if a != b]


def tick_of(t: float, sample_rate_hz: float) -> int:
    """Snap a time in seconds to the nearest tick index."""
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}")
    return int(round(t * sample_rate_hz))


def time_of(tick: int, sample_rate_hz: float) -> float:
    """Seconds since trace start for a tick index."""
    return tick / sample_rate_hz


@dataclass(frozen=True)
class Config:
    """Parameter ledger for the whole pipeline.

    Attributes:
        sample_rate_hz: readings per second per stream.
        d: sliding-window length for the stream standard deviations, seconds.
        t_delta: variation-window decision threshold, seconds.
        alpha: anomaly percentile parameter; the detection threshold sits at
            the (100 - alpha)-th percentile of the learned distribution.
        b: profile-update batch size, number of queued values.
        tau: maximum anomalous fraction for a batch to be committed, in [0, 1].
        t_id: idle seconds in alert state before the screen saver turns on.
        t_ss: screen-saver grace seconds before deauthentication.
        T: baseline idle time-out, seconds.
        delta: half-width of the true window around a ground-truth event,
            seconds (scoring only).
        ac_lag: autocorrelation lag for window features, samples.
        entropy_bin_width: histogram bin width for window entropy, dB.
        kde_bandwidth_rule: "silverman" or an explicit bandwidth in dB.
    """

    sample_rate_hz: float = 4.0
    d: float = 30.0
    t_delta: float = 4.5
    alpha: float = 5.0
    b: int = 100
    tau: float = 0.1
    t_id: float = 5.0
    t_ss: float = 3.0
    T: float = 300.0
    delta: float = 3.0
    ac_lag: int = 1
    entropy_bin_width: float = 1.0
    kde_bandwidth_rule: str | float = "silverman"

    def __post_init__(self):
        for key in ("sample_rate_hz", "d", "t_delta", "t_id", "t_ss", "T",
                    "delta", "entropy_bin_width"):
            if getattr(self, key) <= 0:
                raise ValidationError(f"{key} must be > 0, got {getattr(self, key)}")
        if not 0 < self.alpha < 100:
            raise ValidationError(f"alpha must be in (0, 100), got {self.alpha}")
        if not 0 <= self.tau <= 1:
            raise ValidationError(f"tau must be in [0, 1], got {self.tau}")
        if self.b < 1:
            raise ValidationError(f"b must be >= 1, got {self.b}")
        if self.ac_lag < 1:
            raise ValidationError(f"ac_lag must be >= 1, got {self.ac_lag}")
        if not self.t_delta < self.T:
            raise ValidationError(
                f"t_delta must be < T, got t_delta={self.t_delta} T={self.T}")
        if isinstance(self.kde_bandwidth_rule, str):
            if self.kde_bandwidth_rule != "silverman":
                raise ValidationError(
                    f"kde_bandwidth_rule must be 'silverman' or a bandwidth, "
                    f"got {self.kde_bandwidth_rule!r}")
        elif self.kde_bandwidth_rule <= 0:
            raise ValidationError(
                f"kde_bandwidth_rule must be > 0, got {self.kde_bandwidth_rule}")

    def ticks(self, seconds: float) -> int:
        return tick_of(seconds, self.sample_rate_hz)

    def replace(self, **kwargs) -> "Config":
        return dataclasses.replace(self, **kwargs)


_INT_FIELDS = {"b", "ac_lag"}


def _parse_value(key: str, raw: str, lineno: int, source: str):
    if key == "kde_bandwidth_rule":
        try:
            return float(raw)
        except ValueError:
            return raw
    try:
        return int(raw) if key in _INT_FIELDS else float(raw)
    except ValueError:
        raise ParseError(
            f"{source}:{lineno}: cannot parse value {raw!r} for key {key!r}") from None


def loads_config(text: str, source: str = "<string>") -> Config:
    """Parse flat ``key = value`` lines (``#`` comments) into a Config."""
    names = {f.name for f in dataclasses.fields(Config)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in names:
            raise ParseError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ParseError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, lineno, source)
    return Config(**values)


def load_config(path) -> Config:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"config file not found: {path}")
    return loads_config(path.read_text(), source=str(path))


def dumps_config(config: Config) -> str:
    lines = [f"{field.name} = {getattr(config, field.name)}"
             for field in dataclasses.fields(Config)]
    return "\n".join(lines) + "\n"


def dump_config(config: Config, path) -> None:
    Path(path).write_text(dumps_config(config))
