"""Reference office scenario for end-to-end evaluation.

A 12 x 8.5 m room with nine wall sensors, three workstations and one door.
Three users produce 60 departures (40 walk to the door and come back, 20
step out and later re-enter, so the script also carries 20 entry events)
plus seated fidgets — short in-place wobbles whose variation windows stay
below the walk duration, giving the duration-threshold sweep something to
filter.

Sensor ids are ordered so that ascending-prefix masking reproduces a
coverage ablation: the first three sensors cluster on the west wall and
barely see the east half of the room, and each added sensor widens coverage.

The scenario config shortens the std-dev sliding window to 1 s: the window
length sets how long the detector stays elevated after motion stops, and at
desk scale the noisy period should track the walk itself rather than smear
tens of seconds past it.
"""

from __future__ import annotations

import numpy as np

from .config import Config
from .simulate import (DOOR_PAUSE_S, ENTER, EXIT, Fidget, FloorPlan, MoveEvent,
                       MovementScript)

REFERENCE_SEED = 7
REFERENCE_NOISE_SIGMA = 0.5

_USERS = ("u1", "u2", "u3")
_SEATS = {"u1": "w_1", "u2": "w_2", "u3": "w_3"}


def reference_config() -> Config:
    return Config(d=1.0)


def reference_plan() -> FloorPlan:
    return FloorPlan(
        width=10.4,
        depth=7.4,
        sensors=(
            (1, 0.3, 1.8),
            (2, 0.3, 5.6),
            (3, 2.6, 7.1),
            (4, 7.8, 7.1),
            (5, 10.1, 5.6),
            (6, 10.1, 1.8),
            (7, 7.8, 0.3),
            (8, 2.6, 0.3),
            (9, 5.2, 7.1),
        ),
        workstations=(
            ("w_1", 1.5, 6.7),
            ("w_2", 5.2, 7.0),
            ("w_3", 8.9, 6.6),
        ),
        door=(5.2, 0.0),
        turnback_frac=0.42,
    )


def reference_script(seed: int = REFERENCE_SEED, n_departures: int = 60,
                     start: float = 140.0) -> MovementScript:
    """Scripted day: departures round-robin over users, every i % 9 in
    {2, 4, 6} being a full exit with a later re-entry."""
    plan = reference_plan()
    rng = np.random.default_rng(seed)
    walk = {w: plan.walk_duration(w) for w in _SEATS.values()}

    events: list[MoveEvent] = []
    fidgets: list[Fidget] = []
    pending_enters: list[tuple[float, str]] = []  # (earliest return, user)
    out_users: set[str] = set()
    cursor = start
    departures = 0
    turn = 0

    def add_gap(busy_end: float) -> float:
        """Advance past a quiet gap, sometimes parking a fidget inside it.

        Every few fidgets one is a long stretch-in-place, so the short
        unlabeled fluctuations span durations right up to (but below) the
        walk durations.
        """
        seated = [u for u in _USERS if u not in out_users]
        if seated and rng.random() < 0.45:
            station = _SEATS[seated[int(rng.integers(len(seated)))]]
            if len(fidgets) % 4 == 3:
                duration = float(rng.uniform(3.5, 4.05))
            else:
                duration = float(rng.uniform(0.8, 2.6))
            f_start = busy_end + 5.0 + float(rng.uniform(0.0, 2.0))
            fidgets.append(Fidget(round(f_start, 2), station, round(duration, 2)))
            return f_start + duration + 5.0 + float(rng.uniform(0.0, 2.0))
        return busy_end + 8.0 + float(rng.uniform(0.0, 4.0))

    while departures < n_departures or pending_enters:
        due = [p for p in pending_enters if p[0] <= cursor]
        if due and (departures >= n_departures or rng.random() < 0.5):
            due.sort()
            t_ret, user = due[0]
            pending_enters.remove((t_ret, user))
            t = round(max(cursor, t_ret), 2)
            events.append(MoveEvent(t, ENTER, user))
            out_users.discard(user)
            cursor = add_gap(t + walk[_SEATS[user]])
            continue
        if departures >= n_departures or len(out_users) == len(_USERS):
            # nothing schedulable now; jump to the earliest pending return
            cursor = max(cursor, min(p[0] for p in pending_enters))
            continue
        user = _USERS[turn % 3]
        turn += 1
        if user in out_users:
            continue
        t = round(cursor, 2)
        station = _SEATS[user]
        exits = departures % 9 in (2, 4, 6)
        events.append(MoveEvent(t, "depart", user, station))
        departures += 1
        if exits:
            t_exit = round(t + walk[station] + DOOR_PAUSE_S, 2)
            events.append(MoveEvent(t_exit, EXIT, user))
            out_users.add(user)
            pending_enters.append(
                (t_exit + float(rng.uniform(40.0, 80.0)), user))
            busy_end = t_exit
        else:
            busy_end = t + 2.0 * plan.turnback_frac * walk[station] + DOOR_PAUSE_S
        cursor = add_gap(busy_end)

    events.sort(key=lambda ev: ev.t)
    fidgets.sort(key=lambda f: f.t)
    return MovementScript(tuple(events), tuple(fidgets))


def mean_walk_duration(plan: FloorPlan, script: MovementScript) -> float:
    """Average seat-to-door walk over the script's departures."""
    walks = [plan.walk_duration(ev.workstation)
             for ev in script.events if ev.kind == "depart"]
    return float(np.mean(walks))


def ablation_subsets(plan: FloorPlan, smallest: int = 3) -> list[tuple[int, list[int]]]:
    """Ascending-prefix sensor subsets for the coverage ablation."""
    ids = sorted(s[0] for s in plan.sensors)
    return [(k, ids[:k]) for k in range(smallest, len(ids) + 1)]
