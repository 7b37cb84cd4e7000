"""Keyboard/mouse activity tracking and simulation.

The tracker answers one question: which workstations saw no input during the
half-open interval (t - s, t]? An input landing exactly at t - s therefore
still counts the workstation as idle, and s = 0 yields every workstation.

The input simulator discretizes time into fixed intervals (5 s by default)
and, while the user is seated, marks each interval active with probability p,
placing a single input event uniformly inside the interval's seated portion.
Only the gaps matter downstream, so one event per active interval suffices.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError


class IdleTracker:
    """Last-input bookkeeping per workstation; queries never mutate."""

    def __init__(self, workstations, start_time: float = 0.0):
        self.start_time = start_time
        self.last_input: dict[str, float | None] = {w: None for w in workstations}

    def record(self, t: float, workstation: str) -> None:
        if workstation not in self.last_input:
            raise ValidationError(f"unknown workstation {workstation!r}")
        prev = self.last_input[workstation]
        if prev is not None and t < prev:
            raise ValidationError(
                f"input times must be non-decreasing ({t} after {prev})")
        self.last_input[workstation] = t

    def idle_seconds(self, t: float, workstation: str) -> float:
        """Seconds since the last input, counting from trace start if none."""
        last = self.last_input[workstation]
        return t - (self.start_time if last is None else last)

    def idle_set(self, t: float, s: float) -> set[str]:
        """Workstations with no input inside (t - s, t]."""
        if s < 0:
            raise ValidationError(f"idle horizon must be >= 0, got {s}")
        if t < s:
            raise ValidationError(f"query t={t} precedes the horizon s={s}")
        return {w for w, last in self.last_input.items()
                if last is None or last <= t - s}


def idle_set(tracker: IdleTracker, t: float, s: float) -> set[str]:
    return tracker.idle_set(t, s)


@dataclass
class InputTrace:
    """Per-workstation sorted input times."""

    inputs: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for w, times in self.inputs.items():
            times = np.asarray(times, dtype=float)
            if times.size and (np.diff(times) <= 0).any():
                raise ValidationError(
                    f"input times for {w} must be sorted and unique")
            self.inputs[w] = times

    def merged(self) -> list[tuple[float, str]]:
        events = [(float(t), w) for w, times in self.inputs.items() for t in times]
        events.sort()
        return events

    def active_fraction(self, duration: float, interval: float) -> float:
        """Fraction of intervals containing at least one input (all stations)."""
        n_intervals = int(duration // interval)
        if n_intervals == 0:
            return 0.0
        hits = 0
        for times in self.inputs.values():
            idx = np.unique(np.floor_divide(times, interval).astype(int))
            hits += int((idx < n_intervals).sum())
        return hits / (n_intervals * max(len(self.inputs), 1))


def simulate_inputs(duration: float, presence: dict[str, list[tuple[float, float]]],
                    p: float = 0.78, interval: float = 5.0,
                    seed: int = 0) -> InputTrace:
    """Draw synthetic keyboard/mouse events.

    ``presence`` maps each workstation to its away intervals; no inputs are
    generated while away. Deterministic given the seed.
    """
    if not 0 <= p <= 1:
        raise ValidationError(f"p must be in [0, 1], got {p}")
    if interval <= 0:
        raise ValidationError(f"interval must be > 0, got {interval}")
    rng = np.random.default_rng(seed)
    n_intervals = int(duration // interval)
    out: dict[str, np.ndarray] = {}
    for workstation in sorted(presence):
        away = sorted(presence[workstation])
        times = []
        for k in range(n_intervals):
            lo, hi = k * interval, (k + 1) * interval
            seated = _subtract_intervals(lo, hi, away)
            if not seated:
                continue
            if rng.random() >= p:
                continue
            length = sum(b - a for a, b in seated)
            offset = rng.uniform(0.0, length)
            for a, b in seated:
                if offset <= b - a:
                    times.append(a + offset)
                    break
                offset -= b - a
        out[workstation] = np.array(times)
    return InputTrace(out)


def _subtract_intervals(lo: float, hi: float,
                        away: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Parts of [lo, hi) not covered by the (sorted) away intervals."""
    segments = []
    cursor = lo
    for a, b in away:
        if b <= cursor:
            continue
        if a >= hi:
            break
        if a > cursor:
            segments.append((cursor, min(a, hi)))
        cursor = max(cursor, b)
        if cursor >= hi:
            break
    if cursor < hi:
        segments.append((cursor, hi))
    return [(a, b) for a, b in segments if b > a]


def write_inputs(trace: InputTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "workstation"])
        for t, w in trace.merged():
            writer.writerow([f"{t:.6f}", w])


def read_inputs(path) -> InputTrace:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"input-trace file not found: {path}")
    per: dict[str, list[float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "workstation"]:
            raise ParseError(f"{path}:1: expected header t,workstation")
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ParseError(f"{path}:{rownum}: expected 2 fields")
            try:
                per.setdefault(row[1], []).append(float(row[0]))
            except ValueError:
                raise ParseError(f"{path}:{rownum}: malformed row {row!r}") from None
    return InputTrace({w: np.array(sorted(ts)) for w, ts in per.items()})
