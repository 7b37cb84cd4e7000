"""Synthetic office radio simulator.

Models a rectangular room with wall-mounted transceivers, workstations and a
single door. Every ordered sensor pair is a stream whose baseline follows a
log-distance path-loss law; a body near the line between the two sensors
attenuates the stream through a Gaussian-of-distance mask. People walk
straight seat-to-door (and back) at constant speed; seated bodies contribute
a reduced static attenuation so an occupied seat and an empty one differ.
Optional "fidget" intervals wobble a seated body's attenuation to reproduce
the short, unlabeled fluctuations a real office produces.

The model is two-dimensional: sensor mounting height is ignored, which is
adequate at desk scale where sensors and bodies share a horizontal plane.
Everything is a pure function of (plan, script, seed): identical inputs give
bit-identical traces.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ENTRY_LABEL, Config, StreamId, all_streams, tick_of
from .errors import ParseError, ValidationError

DEPART = "depart"
ENTER = "enter"
EXIT = "exit"

# Seconds a person stands at the door before turning back or stepping out.
DOOR_PAUSE_S = 0.5


@dataclass(frozen=True)
class FloorPlan:
    """Room geometry plus the channel-model knobs.

    Positions are meters from the room's south-west corner. ``sensors`` holds
    (id, x, y); ``workstations`` holds (label, x, y) with labels w_1..w_k
    (w_0 is reserved for entry events).
    """

    width: float
    depth: float
    sensors: tuple[tuple[int, float, float], ...]
    workstations: tuple[tuple[str, float, float], ...]
    door: tuple[float, float]
    walk_speed: float = 1.4
    max_atten_db: float = 10.0
    body_radius_m: float = 0.4
    ref_dbm: float = -40.0
    path_loss_exp: float = 2.0
    seated_atten_frac: float = 0.5
    # fraction of the seat-to-door line walked before turning back on a
    # departure that does not exit the office
    turnback_frac: float = 1.0

    def __post_init__(self):
        if self.walk_speed <= 0:
            raise ValidationError(f"walk_speed must be > 0, got {self.walk_speed}")
        ids = [s[0] for s in self.sensors]
        if len(set(ids)) != len(ids):
            raise ValidationError("sensor ids must be distinct")
        labels = [w[0] for w in self.workstations]
        if len(set(labels)) != len(labels):
            raise ValidationError("workstation labels must be distinct")
        if ENTRY_LABEL in labels:
            raise ValidationError(f"workstation label {ENTRY_LABEL} is reserved")
        for name, x, y in list(self.sensors) + list(self.workstations) + [
                ("door", *self.door)]:
            if not (0 <= x <= self.width and 0 <= y <= self.depth):
                raise ValidationError(
                    f"position of {name} ({x}, {y}) outside room bounds")

    def sensor_pos(self) -> dict[int, np.ndarray]:
        return {sid: np.array([x, y], dtype=float) for sid, x, y in self.sensors}

    def workstation_pos(self) -> dict[str, np.ndarray]:
        return {w: np.array([x, y], dtype=float) for w, x, y in self.workstations}

    def streams(self) -> list[StreamId]:
        return all_streams([s[0] for s in self.sensors])

    def walk_duration(self, workstation: str) -> float:
        """Seconds to walk the straight seat-to-door line."""
        seat = self.workstation_pos()[workstation]
        return float(np.linalg.norm(seat - np.asarray(self.door)) / self.walk_speed)


@dataclass(frozen=True)
class MoveEvent:
    t: float
    kind: str  # depart | enter | exit
    user: str
    workstation: str | None = None  # required for depart


@dataclass(frozen=True)
class Fidget:
    """A seated occupant shifting in place: (start time, workstation, seconds)."""

    t: float
    workstation: str
    duration: float


@dataclass(frozen=True)
class MovementScript:
    events: tuple[MoveEvent, ...]
    fidgets: tuple[Fidget, ...] = ()

    def __post_init__(self):
        last_t: dict[str, float] = {}
        state: dict[str, str] = {}  # seated | at_door_or_returning | out
        seat: dict[str, str] = {}
        for ev in self.events:
            if ev.t <= last_t.get(ev.user, -math.inf):
                raise ValidationError(
                    f"event times must strictly increase per user "
                    f"({ev.user} at t={ev.t})")
            last_t[ev.user] = ev.t
            mode = state.get(ev.user, "seated")
            if ev.kind == DEPART:
                if ev.workstation is None:
                    raise ValidationError(f"depart at t={ev.t} names no workstation")
                if mode == "out":
                    raise ValidationError(
                        f"{ev.user} departs at t={ev.t} while outside the office")
                if seat.setdefault(ev.user, ev.workstation) != ev.workstation:
                    raise ValidationError(
                        f"{ev.user} is assigned to {seat[ev.user]}, "
                        f"cannot depart {ev.workstation}")
                state[ev.user] = "away"
            elif ev.kind == EXIT:
                if mode != "away":
                    raise ValidationError(
                        f"{ev.user} exits at t={ev.t} without departing first")
                state[ev.user] = "out"
            elif ev.kind == ENTER:
                if mode != "out":
                    raise ValidationError(
                        f"{ev.user} enters at t={ev.t} while already inside")
                state[ev.user] = "seated"
            else:
                raise ValidationError(f"unknown event kind {ev.kind!r}")

    def seats(self) -> dict[str, str]:
        """User -> workstation binding taken from each user's departures."""
        out: dict[str, str] = {}
        for ev in self.events:
            if ev.kind == DEPART and ev.user not in out:
                out[ev.user] = ev.workstation
        return out

    def end_time(self) -> float:
        times = [ev.t for ev in self.events] + [f.t + f.duration for f in self.fidgets]
        return max(times, default=0.0)


@dataclass
class RssiTrace:
    """Per-stream signal strengths on the sampling grid, dBm."""

    sample_rate_hz: float
    streams: tuple[StreamId, ...]
    values: np.ndarray  # shape (n_streams, n_ticks)

    def __post_init__(self):
        self.streams = tuple(StreamId(*s) for s in self.streams)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != len(self.streams):
            raise ValidationError(
                f"values must be (n_streams, n_ticks), got {self.values.shape} "
                f"for {len(self.streams)} streams")
        if not np.isfinite(self.values).all():
            raise ValidationError("trace values must be finite")

    @property
    def n_ticks(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        return self.n_ticks / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.n_ticks) / self.sample_rate_hz

    def sensor_ids(self) -> list[int]:
        return sorted({s.tx for s in self.streams} | {s.rx for s in self.streams})

    def select_sensors(self, sensor_ids) -> "RssiTrace":
        """Restrict the trace to streams among a sensor subset (ablation)."""
        keep = set(sensor_ids)
        idx = [i for i, s in enumerate(self.streams)
               if s.tx in keep and s.rx in keep]
        if not idx:
            raise ValidationError(f"no streams among sensors {sorted(keep)}")
        return RssiTrace(self.sample_rate_hz,
                         tuple(self.streams[i] for i in idx),
                         self.values[idx].copy())


@dataclass(frozen=True)
class GroundTruth:
    """Labeled movement events: (time, label) with label in {w_0..w_k}."""

    events: tuple[tuple[float, str], ...]

    def true_windows(self, delta: float, duration: float):
        """[t - delta, t + delta] per event, clipped to the trace."""
        return [(max(0.0, t - delta), min(duration, t + delta), label)
                for t, label in self.events]

    def departures(self) -> list[tuple[float, str]]:
        return [(t, lab) for t, lab in self.events if lab != ENTRY_LABEL]


# ---------------------------------------------------------------------------
# Channel model


def attenuation(tx_pos, rx_pos, person_pos, max_atten_db: float = 10.0,
                body_radius_m: float = 0.4):
    """dB attenuation a body at ``person_pos`` adds to the tx-rx stream.

    Gaussian-of-distance mask over the point-to-segment distance: full
    ``max_atten_db`` on the line of sight, decaying with the body's distance
    from it. Accepts a single position or an (n, 2) array.
    """
    dist = _point_segment_distance(np.asarray(tx_pos, dtype=float),
                                   np.asarray(rx_pos, dtype=float),
                                   np.asarray(person_pos, dtype=float))
    return max_atten_db * np.exp(-((dist / body_radius_m) ** 2))


def _point_segment_distance(a: np.ndarray, b: np.ndarray, p: np.ndarray):
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        diff = p - a
        return np.sqrt((diff * diff).sum(axis=-1))
    # project p onto the segment, clamping to the endpoints
    t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
    closest = a + np.multiply.outer(t, ab)
    diff = p - closest
    return np.sqrt((diff * diff).sum(axis=-1))


@dataclass
class _Segment:
    t0: float
    t1: float
    p0: np.ndarray
    p1: np.ndarray
    weight: float  # attenuation scale: 1.0 moving/standing, seated fraction when seated


class _Occupant:
    """Position/weight timeline for one user (or a static, userless seat)."""

    def __init__(self, label: str, seat: np.ndarray, plan: FloorPlan):
        self.label = label
        self.seat = seat
        self.plan = plan
        self.segments: list[_Segment] = []
        self.cursor = 0.0
        self.mode = "seated"

    def _hold(self, until: float, pos: np.ndarray, weight: float):
        if until > self.cursor:
            self.segments.append(_Segment(self.cursor, until, pos, pos, weight))
            self.cursor = until

    def _walk(self, p0: np.ndarray, p1: np.ndarray) -> float:
        dur = float(np.linalg.norm(p1 - p0) / self.plan.walk_speed)
        self.segments.append(
            _Segment(self.cursor, self.cursor + dur, p0, p1, 1.0))
        self.cursor += dur
        return dur

    def depart(self, t: float, returns: bool):
        door = np.asarray(self.plan.door, dtype=float)
        if t < self.cursor:
            raise ValidationError(
                f"{self.label}: depart at t={t} overlaps an earlier movement "
                f"(busy until t={self.cursor:.2f})")
        self._hold(t, self.seat, self.plan.seated_atten_frac)
        if returns:
            frac = self.plan.turnback_frac
            turn = self.seat + frac * (door - self.seat)
            self._walk(self.seat, turn)
            self._hold(self.cursor + DOOR_PAUSE_S, turn, 1.0)
            self._walk(turn, self.seat)
            self.mode = "seated"
        else:
            self._walk(self.seat, door)
            self.mode = "at_door"

    def exit(self, t: float):
        door = np.asarray(self.plan.door, dtype=float)
        if t < self.cursor:
            raise ValidationError(
                f"{self.label}: exit at t={t} before reaching the door "
                f"(t={self.cursor:.2f})")
        self._hold(t, door, 1.0)
        self.mode = "out"

    def enter(self, t: float):
        door = np.asarray(self.plan.door, dtype=float)
        if t < self.cursor:
            raise ValidationError(
                f"{self.label}: enter at t={t} overlaps an earlier movement")
        self.cursor = t
        self._walk(door, self.seat)
        self.mode = "seated"

    def finish(self, duration: float):
        if self.mode in ("seated",):
            self._hold(duration, self.seat, self.plan.seated_atten_frac)
        elif self.mode == "at_door":
            self._hold(duration, np.asarray(self.plan.door, dtype=float), 1.0)
        # "out": contributes nothing

    def sample(self, times: np.ndarray):
        """(positions (n,2), weights (n,)) with weight 0 while absent."""
        pos = np.zeros((times.size, 2))
        weight = np.zeros(times.size)
        for seg in self.segments:
            if seg.t0 >= seg.t1:
                continue
            mask = (times >= seg.t0) & (times < seg.t1)
            if not mask.any():
                continue
            frac = (times[mask] - seg.t0) / (seg.t1 - seg.t0)
            pos[mask] = seg.p0 + frac[:, None] * (seg.p1 - seg.p0)
            weight[mask] = seg.weight
        return pos, weight

    def away_intervals(self, duration: float) -> list[tuple[float, float]]:
        """Complement of the seated intervals over [0, duration]."""
        seated: list[tuple[float, float]] = []
        for seg in self.segments:
            is_seated = seg.weight == self.plan.seated_atten_frac and \
                np.array_equal(seg.p0, self.seat) and np.array_equal(seg.p1, self.seat)
            if not is_seated:
                continue
            if seated and math.isclose(seated[-1][1], seg.t0, abs_tol=1e-9):
                seated[-1] = (seated[-1][0], seg.t1)
            else:
                seated.append((seg.t0, seg.t1))
        away: list[tuple[float, float]] = []
        cursor = 0.0
        for lo, hi in seated:
            if lo > cursor:
                away.append((cursor, lo))
            cursor = max(cursor, hi)
        if cursor < duration:
            away.append((cursor, duration))
        return away


def _build_occupants(plan: FloorPlan, script: MovementScript,
                     duration: float) -> dict[str, _Occupant]:
    """One occupant per workstation; seats without script users sit still."""
    seats = script.seats()
    seat_pos = plan.workstation_pos()
    for user, w in seats.items():
        if w not in seat_pos:
            raise ValidationError(f"script references unknown workstation {w!r}")
    occupants: dict[str, _Occupant] = {}
    user_of: dict[str, str] = {}
    for label, pos in seat_pos.items():
        occupants[label] = _Occupant(label, pos, plan)
    for user, w in seats.items():
        user_of[user] = w

    by_user: dict[str, list[MoveEvent]] = {}
    for ev in script.events:
        by_user.setdefault(ev.user, []).append(ev)
    for user, events in by_user.items():
        if user not in user_of:
            raise ValidationError(
                f"user {user!r} has events but never departs a workstation")
        occ = occupants[user_of[user]]
        for i, ev in enumerate(events):
            if ev.kind == DEPART:
                nxt = events[i + 1] if i + 1 < len(events) else None
                occ.depart(ev.t, returns=not (nxt is not None and nxt.kind == EXIT))
            elif ev.kind == EXIT:
                occ.exit(ev.t)
            elif ev.kind == ENTER:
                occ.enter(ev.t)
    for occ in occupants.values():
        occ.finish(duration)
    return occupants


def away_intervals(plan: FloorPlan, script: MovementScript,
                   duration: float) -> dict[str, list[tuple[float, float]]]:
    """Per-workstation intervals with no seated occupant (for input models)."""
    occupants = _build_occupants(plan, script, duration)
    return {label: occ.away_intervals(duration) for label, occ in occupants.items()}


def is_seated(away: list[tuple[float, float]], t: float) -> bool:
    """True when t falls outside every away interval."""
    return not any(lo <= t < hi for lo, hi in away)


def generate_trace(plan: FloorPlan, script: MovementScript, config: Config,
                   noise_sigma: float = 0.5, seed: int = 0,
                   duration: float | None = None) -> tuple[RssiTrace, GroundTruth]:
    """Synthesize an RSSI trace plus its labeled ground-truth events.

    Each stream is baseline + N(0, noise_sigma) minus the attenuation of
    every body near its line of sight; bodies move per the script. Ground
    truth lists one event per departure (its workstation label) and one
    w_0 event per office entry.
    """
    if noise_sigma < 0:
        raise ValidationError(f"noise_sigma must be >= 0, got {noise_sigma}")
    fs = config.sample_rate_hz
    if duration is None:
        duration = script.end_time() + 30.0
    n_ticks = tick_of(duration, fs)
    if script.events and script.end_time() > duration:
        raise ValidationError("script events extend past the trace duration")
    times = np.arange(n_ticks) / fs

    streams = plan.streams()
    spos = plan.sensor_pos()
    rng = np.random.default_rng(seed)

    baseline = np.empty(len(streams))
    for i, s in enumerate(streams):
        dist = max(float(np.linalg.norm(spos[s.tx] - spos[s.rx])), 0.1)
        baseline[i] = plan.ref_dbm - 10.0 * plan.path_loss_exp * math.log10(dist)

    values = baseline[:, None] + rng.normal(0.0, noise_sigma,
                                            size=(len(streams), n_ticks))

    occupants = _build_occupants(plan, script, duration)

    # fidget wobble: per-tick attenuation scale replacing the seated fraction
    for f in script.fidgets:
        if f.workstation not in occupants:
            raise ValidationError(
                f"fidget references unknown workstation {f.workstation!r}")
        if f.duration <= 0:
            raise ValidationError(f"fidget duration must be > 0, got {f.duration}")

    weights_extra: dict[str, np.ndarray] = {}
    for f in sorted(script.fidgets, key=lambda f: (f.t, f.workstation)):
        mask = (times >= f.t) & (times < f.t + f.duration)
        wob = rng.uniform(0.05, 0.95, size=int(mask.sum()))
        arr = weights_extra.setdefault(f.workstation, np.full(n_ticks, np.nan))
        arr[mask] = wob

    for label, occ in occupants.items():
        pos, weight = occ.sample(times)
        extra = weights_extra.get(label)
        if extra is not None:
            seated = weight == plan.seated_atten_frac
            replace = seated & ~np.isnan(extra)
            weight = weight.copy()
            weight[replace] = extra[replace]
        active = weight > 0
        if not active.any():
            continue
        for i, s in enumerate(streams):
            att = attenuation(spos[s.tx], spos[s.rx], pos[active],
                              plan.max_atten_db, plan.body_radius_m)
            values[i, active] -= weight[active] * att

    truth_events = []
    for ev in script.events:
        if ev.kind == DEPART:
            truth_events.append((ev.t, ev.workstation))
        elif ev.kind == ENTER:
            truth_events.append((ev.t, ENTRY_LABEL))
    truth_events.sort()
    trace = RssiTrace(fs, tuple(streams), values)
    return trace, GroundTruth(tuple(truth_events))


# ---------------------------------------------------------------------------
# File formats


def write_trace(trace: RssiTrace, path) -> None:
    """CSV with header t,tx,rx,rssi_dbm; one row per (tick, stream)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "tx", "rx", "rssi_dbm"])
        times = trace.times()
        values = trace.values.tolist()
        for k in range(trace.n_ticks):
            t = f"{times[k]:.6f}"
            for i, s in enumerate(trace.streams):
                writer.writerow([t, s.tx, s.rx, repr(values[i][k])])


def read_trace(path, sample_rate_hz: float | None = None) -> RssiTrace:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"trace file not found: {path}")
    per_stream: dict[StreamId, list[float]] = {}
    times: list[float] = []
    seen_first_tick: set[StreamId] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "tx", "rx", "rssi_dbm"]:
            raise ParseError(f"{path}:1: expected header t,tx,rx,rssi_dbm")
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ParseError(f"{path}:{rownum}: expected 4 fields, got {len(row)}")
            try:
                t = float(row[0])
                sid = StreamId(int(row[1]), int(row[2]))
                rssi = float(row[3])
            except ValueError:
                raise ParseError(
                    f"{path}:{rownum}: malformed row {row!r}") from None
            if not times or t > times[-1]:
                times.append(t)
            per_stream.setdefault(sid, []).append(rssi)
            seen_first_tick.add(sid)
    if not per_stream:
        raise ParseError(f"{path}: no data rows")
    if sample_rate_hz is None:
        if len(times) < 2:
            raise ParseError(
                f"{path}: cannot infer sample rate from a single tick; "
                f"pass sample_rate_hz")
        sample_rate_hz = 1.0 / (times[1] - times[0])
    lengths = {len(v) for v in per_stream.values()}
    if len(lengths) != 1:
        raise ParseError(f"{path}: stream lengths differ: {sorted(lengths)}")
    streams = tuple(sorted(per_stream))
    values = np.array([per_stream[s] for s in streams])
    return RssiTrace(float(sample_rate_hz), streams, values)


def write_ground_truth(truth: GroundTruth, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "label"])
        for t, label in truth.events:
            writer.writerow([f"{t:.6f}", label])


def read_ground_truth(path) -> GroundTruth:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"ground-truth file not found: {path}")
    events = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "label"]:
            raise ParseError(f"{path}:1: expected header t,label")
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise ParseError(f"{path}:{rownum}: expected 2 fields")
            try:
                events.append((float(row[0]), row[1]))
            except ValueError:
                raise ParseError(f"{path}:{rownum}: malformed row {row!r}") from None
    return GroundTruth(tuple(events))


def _plan_scalars(plan: FloorPlan) -> list[str]:
    return [
        f"width = {plan.width}",
        f"depth = {plan.depth}",
        f"door = {plan.door[0]} {plan.door[1]}",
        f"walk_speed = {plan.walk_speed}",
        f"max_atten_db = {plan.max_atten_db}",
        f"body_radius_m = {plan.body_radius_m}",
        f"ref_dbm = {plan.ref_dbm}",
        f"path_loss_exp = {plan.path_loss_exp}",
        f"seated_atten_frac = {plan.seated_atten_frac}",
        f"turnback_frac = {plan.turnback_frac}",
    ]


def dump_plan(plan: FloorPlan, path) -> None:
    lines = _plan_scalars(plan)
    lines.append("")
    lines.append("[sensors]")
    lines.extend(f"{sid} {x} {y}" for sid, x, y in plan.sensors)
    lines.append("")
    lines.append("[workstations]")
    lines.extend(f"{w} {x} {y}" for w, x, y in plan.workstations)
    Path(path).write_text("\n".join(lines) + "\n")


def load_plan(path) -> FloorPlan:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"floor-plan file not found: {path}")
    scalars: dict[str, object] = {}
    sensors: list[tuple[int, float, float]] = []
    workstations: list[tuple[str, float, float]] = []
    section = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]")
            if section not in ("sensors", "workstations"):
                raise ParseError(f"{path}:{lineno}: unknown section {section!r}")
            continue
        try:
            if section is None:
                key, raw = (p.strip() for p in line.split("=", 1))
                if key == "door":
                    x, y = raw.split()
                    scalars["door"] = (float(x), float(y))
                else:
                    scalars[key] = float(raw)
            elif section == "sensors":
                sid, x, y = line.split()
                sensors.append((int(sid), float(x), float(y)))
            else:
                w, x, y = line.split()
                workstations.append((w, float(x), float(y)))
        except ValueError:
            raise ParseError(f"{path}:{lineno}: malformed line {line!r}") from None
    try:
        return FloorPlan(sensors=tuple(sensors), workstations=tuple(workstations),
                         **scalars)
    except TypeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def dump_script(script: MovementScript, path) -> None:
    lines = ["[events]"]
    for ev in script.events:
        tail = f" {ev.workstation}" if ev.workstation else ""
        lines.append(f"{ev.t:.6f} {ev.kind} {ev.user}{tail}")
    if script.fidgets:
        lines.append("")
        lines.append("[fidgets]")
        lines.extend(f"{f.t:.6f} {f.workstation} {f.duration:.6f}"
                     for f in script.fidgets)
    Path(path).write_text("\n".join(lines) + "\n")


def load_script(path) -> MovementScript:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"movement-script file not found: {path}")
    events: list[MoveEvent] = []
    fidgets: list[Fidget] = []
    section = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]")
            if section not in ("events", "fidgets"):
                raise ParseError(f"{path}:{lineno}: unknown section {section!r}")
            continue
        parts = line.split()
        try:
            if section == "events":
                if parts[1] == DEPART:
                    events.append(MoveEvent(float(parts[0]), DEPART, parts[2], parts[3]))
                elif parts[1] in (ENTER, EXIT):
                    events.append(MoveEvent(float(parts[0]), parts[1], parts[2]))
                else:
                    raise ParseError(
                        f"{path}:{lineno}: unknown event kind {parts[1]!r}")
            elif section == "fidgets":
                fidgets.append(Fidget(float(parts[0]), parts[1], float(parts[2])))
            else:
                raise ParseError(f"{path}:{lineno}: line outside any section")
        except (IndexError, ValueError):
            raise ParseError(f"{path}:{lineno}: malformed line {line!r}") from None
    return MovementScript(tuple(events), tuple(fidgets))
