"""The deauthentication controller.

A two-state automaton driven by the movement detector. In Quiet the system
waits for the open variation window to reach ``t_delta`` seconds; at that
moment it classifies the window's signature and applies Rule 1 (deauthenticate
the classified workstation only if its idle time corroborates a departure),
then moves to Noisy. While Noisy — the window still running, so several
people may be moving — Rule 2 puts every workstation idle for a second into
alert state each tick. An alerted workstation gets the screen saver at the
moment its idle time (since last input) reaches ``t_id``, and is
deauthenticated ``t_ss`` seconds after that; any input cancels the
escalation, and alerts that neither escalate nor get canceled lapse when the
system returns to Quiet. Independently, a workstation idle for ``T`` seconds
is deauthenticated by the baseline time-out.

Inputs are processed before rules within a tick, so a keystroke landing on
the same tick as an escalation wins. Replaying the same trace, inputs and
classifier yields a bit-identical action log.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .activity import IdleTracker, InputTrace
from .classify import WindowClassifier, classify, extract_features
from .config import ENTRY_LABEL, Config
from .detection import NORMAL, DetectionResult, WindowTracker
from .errors import ParseError, ValidationError
from .simulate import RssiTrace

AUTHENTICATED = "authenticated"
ALERT = "alert"
SCREENSAVER = "screensaver"
DEAUTHENTICATED = "deauthenticated"

ALERT_ON = "AlertOn"
SCREENSAVER_ON = "ScreenSaverOn"
DEAUTHENTICATE = "Deauthenticate"
CANCEL = "Cancel"
TIMEOUT_DEAUTH = "TimeoutDeauth"

QUIET = "quiet"
NOISY = "noisy"


@dataclass(frozen=True)
class ActionRecord:
    t: float
    workstation: str
    action: str


@dataclass
class WorkstationState:
    label: str
    status: str = AUTHENTICATED
    status_since: float = 0.0

    def set(self, status: str, t: float) -> None:
        self.status = status
        self.status_since = t


def apply_rule1(label: str, idle: set[str],
                states: dict[str, WorkstationState], t: float) -> list[ActionRecord]:
    """Deauthenticate the classified workstation iff its idle time agrees.

    w_0 (an entry) never acts; a classification contradicted by recent input
    at that workstation is dropped as unreliable.
    """
    if label == ENTRY_LABEL or label not in states:
        return []
    state = states[label]
    if label in idle and state.status != DEAUTHENTICATED:
        state.set(DEAUTHENTICATED, t)
        return [ActionRecord(t, label, DEAUTHENTICATE)]
    return []


def apply_rule2(idle_1s: set[str],
                states: dict[str, WorkstationState], t: float) -> list[ActionRecord]:
    """Put every 1-second-idle, still-authenticated workstation on alert."""
    actions = []
    for label in sorted(idle_1s):
        state = states.get(label)
        if state is not None and state.status == AUTHENTICATED:
            state.set(ALERT, t)
            actions.append(ActionRecord(t, label, ALERT_ON))
    return actions


class DeauthController:
    """Replays detector decisions and inputs into workstation actions."""

    def __init__(self, config: Config, workstations, trace: RssiTrace,
                 classify_fn, resume_on_input: bool = True, gap_ticks: int = 1):
        self.config = config
        self.trace = trace
        self.classify_fn = _as_classify_fn(classify_fn)
        self.resume_on_input = resume_on_input
        self.states = {w: WorkstationState(w) for w in workstations}
        self.tracker = IdleTracker(workstations)
        self.windows = WindowTracker(config.sample_rate_hz, gap_ticks)
        self.mode = QUIET
        self.episode_start: float | None = None
        self.log: list[ActionRecord] = []

    def process_input(self, t: float, workstation: str) -> None:
        self.tracker.record(t, workstation)
        state = self.states[workstation]
        if state.status in (ALERT, SCREENSAVER):
            state.set(AUTHENTICATED, t)
            self.log.append(ActionRecord(t, workstation, CANCEL))
        elif state.status == DEAUTHENTICATED and self.resume_on_input:
            # the user logged back in; modelled silently so usability runs
            # can span many departures
            state.set(AUTHENTICATED, t)

    def tick(self, k: int, md_decision: str) -> None:
        cfg = self.config
        fs = cfg.sample_rate_hz
        t = k / fs
        self.windows.update(k, md_decision)
        duration = self.windows.open_duration(k)

        if self.mode == QUIET:
            if self.windows.start is not None and duration >= cfg.t_delta:
                t1 = self.windows.open_start_time
                sample = extract_features(self.trace, t1, cfg.t_delta, cfg)
                label = self.classify_fn(sample)
                idle = self.tracker.idle_set(t, cfg.t_delta)
                self.log.extend(apply_rule1(label, idle, self.states, t))
                self.mode = NOISY
                self.episode_start = t
        else:
            if self.windows.start is None:
                self.mode = QUIET
                self.episode_start = None
                # alerts that never escalated lapse with the noisy period
                for state in self.states.values():
                    if state.status == ALERT:
                        state.set(AUTHENTICATED, t)
            elif duration > cfg.t_delta and t >= 1.0:
                idle_1s = self.tracker.idle_set(t, 1.0)
                self.log.extend(apply_rule2(idle_1s, self.states, t))

        for label in sorted(self.states):
            state = self.states[label]
            idle = self.tracker.idle_seconds(t, label)
            if state.status == ALERT and idle >= cfg.t_id \
                    and self._escalation_armed(label):
                state.set(SCREENSAVER, t)
                self.log.append(ActionRecord(t, label, SCREENSAVER_ON))
            elif state.status == SCREENSAVER and t - state.status_since >= cfg.t_ss:
                state.set(DEAUTHENTICATED, t)
                self.log.append(ActionRecord(t, label, DEAUTHENTICATE))
            if state.status != DEAUTHENTICATED and idle >= cfg.T:
                state.set(DEAUTHENTICATED, t)
                self.log.append(ActionRecord(t, label, TIMEOUT_DEAUTH))

    def _escalation_armed(self, label: str) -> bool:
        """Whether an alerted workstation's idle clock belongs to this episode.

        The screen saver lands at last-input + t_id for anyone who went idle
        around the current noisy episode; a workstation that had already been
        idle far longer than t_id when the episode began keeps its alert (any
        input cancels it) but is not retroactively escalated — the time-out
        T is the backstop for long-stale idleness.
        """
        if self.episode_start is None:
            return False
        last = self.tracker.last_input[label]
        anchor = self.episode_start - self.config.t_id
        if last is None:
            return 0.0 >= anchor - 1e-9
        return last >= anchor - 1e-9


def _as_classify_fn(classifier):
    if isinstance(classifier, WindowClassifier):
        return lambda sample: classify(classifier, sample)
    if callable(classifier):
        return classifier
    raise ValidationError("classifier must be a WindowClassifier or callable")


def run_controller(trace: RssiTrace, detection: DetectionResult | dict[int, str],
                   inputs: InputTrace, classifier, config: Config,
                   workstations=None, resume_on_input: bool = True,
                   gap_ticks: int = 1) -> list[ActionRecord]:
    """Full tick-by-tick replay; returns the time-ordered action log.

    Ticks before the detector's first decision count as normal (the
    bootstrap period is assumed movement-free).
    """
    decisions = (detection.decision_at() if isinstance(detection, DetectionResult)
                 else dict(detection))
    if workstations is None:
        workstations = sorted(inputs.inputs)
    controller = DeauthController(config, workstations, trace, classifier,
                                  resume_on_input, gap_ticks)
    fs = config.sample_rate_hz
    by_tick: dict[int, list[tuple[float, str]]] = {}
    for t, w in inputs.merged():
        k = math.ceil(t * fs - 1e-9)
        by_tick.setdefault(k, []).append((t, w))
    for k in range(trace.n_ticks):
        for t, w in by_tick.get(k, ()):
            controller.process_input(t, w)
        controller.tick(k, decisions.get(k, NORMAL))
    return controller.log


def write_actions(log: list[ActionRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "workstation", "action"])
        for record in log:
            writer.writerow([f"{record.t:.6f}", record.workstation, record.action])


def read_actions(path) -> list[ActionRecord]:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"action log not found: {path}")
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "workstation", "action"]:
            raise ParseError(f"{path}:1: expected header t,workstation,action")
        for rownum, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ParseError(f"{path}:{rownum}: expected 3 fields")
            try:
                out.append(ActionRecord(float(row[0]), row[1], row[2]))
            except ValueError:
                raise ParseError(f"{path}:{rownum}: malformed row {row!r}") from None
    return out
