"""Evaluation harness: detection scoring, deauthentication timing, adversary
opportunity counting and the usability cost simulation.

Detection is scored by interval overlap with the true windows around each
labeled event (TP per variation window overlapping a true window, FP
otherwise, FN per uncovered true window). Each departure then lands in
exactly one timing case:

    A  detected and correctly classified   -> deauth at t1 + t_delta
    B  detected but misclassified          -> deauth at last input + t_id + t_ss
    C  missed by the detector              -> deauth at the T time-out

following the worst-case convention that a departing user's last input is
the departure instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as scipy_stats

from .activity import simulate_inputs
from .classify import Sample, WindowClassifier, extract_features, train
from .config import ENTRY_LABEL, Config
from .controller import (DEAUTHENTICATE, SCREENSAVER_ON, TIMEOUT_DEAUTH,
                         run_controller)
from .detection import DetectionResult, MovementDetector, VariationWindow
from .errors import ValidationError
from .simulate import (EXIT, FloorPlan, GroundTruth, MovementScript, RssiTrace,
                       away_intervals, is_seated)

CASE_A = "A"
CASE_B = "B"
CASE_C = "C"

INSIDER = "insider"
COWORKER = "coworker"
ADVERSARY_DELAY_S = {INSIDER: 4.0, COWORKER: 0.0}


@dataclass(frozen=True)
class MdCounts:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0


def md_outcomes(windows: list[VariationWindow], truth: GroundTruth,
                delta: float, t_delta_filter: float,
                duration: float) -> MdCounts:
    """Score variation windows against the true windows.

    Windows shorter than ``t_delta_filter`` are dropped first, so a single
    detection pass can be scored across a whole threshold sweep.
    """
    if t_delta_filter < 0:
        raise ValidationError(f"filter must be >= 0, got {t_delta_filter}")
    kept = [w for w in windows if w.duration >= t_delta_filter]
    true_windows = truth.true_windows(delta, duration)
    tp = fp = 0
    for w in kept:
        if any(w.overlaps(lo, hi) for lo, hi, _ in true_windows):
            tp += 1
        else:
            fp += 1
    fn = sum(1 for lo, hi, _ in true_windows
             if not any(w.overlaps(lo, hi) for w in kept))
    return MdCounts(tp, fp, fn)


def f_measure(tp: int, fp: int, fn: int) -> float:
    """Harmonic mean of precision and recall; 0 whenever tp is 0."""
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def sweep_t_delta(windows: list[VariationWindow], truth: GroundTruth,
                  config: Config, duration: float,
                  grid=None) -> list[dict]:
    """F-measure across a window-duration threshold sweep (one MD pass)."""
    if grid is None:
        grid = [1.0 + 0.5 * i for i in range(15)]  # 1.0 .. 8.0
    rows = []
    for t_delta in grid:
        counts = md_outcomes(windows, truth, config.delta, t_delta, duration)
        rows.append({"t_delta": t_delta, "tp": counts.tp, "fp": counts.fp,
                     "fn": counts.fn, "precision": counts.precision,
                     "recall": counts.recall,
                     "f_measure": f_measure(counts.tp, counts.fp, counts.fn)})
    return rows


def match_events(windows: list[VariationWindow], truth: GroundTruth,
                 delta: float, duration: float) -> dict[int, VariationWindow]:
    """Event index -> earliest overlapping variation window."""
    matched = {}
    true_windows = truth.true_windows(delta, duration)
    for idx, (lo, hi, _) in enumerate(true_windows):
        overlapping = [w for w in windows if w.overlaps(lo, hi)]
        if overlapping:
            matched[idx] = min(overlapping, key=lambda w: w.t1)
    return matched


def labeled_samples(trace: RssiTrace, windows: list[VariationWindow],
                    truth: GroundTruth, config: Config
                    ) -> tuple[list[Sample], list[int]]:
    """One truth-labeled sample per detected event; returns (samples, events)."""
    matched = match_events(windows, truth, config.delta, trace.duration)
    samples, events = [], []
    for idx in sorted(matched):
        window = matched[idx]
        if window.t1 + config.t_delta > trace.duration:
            continue
        sample = extract_features(trace, window.t1, config.t_delta, config)
        sample.label = truth.events[idx][1]
        samples.append(sample)
        events.append(idx)
    return samples, events


@dataclass(frozen=True)
class DeauthOutcome:
    departure_t: float
    workstation: str
    case: str
    deauth_t: float

    @property
    def elapsed(self) -> float:
        return self.deauth_t - self.departure_t


@dataclass
class SecurityResult:
    outcomes: list[DeauthOutcome]
    counts: MdCounts
    accuracy: float
    n_samples: int
    predictions: dict[int, str] = field(default_factory=dict)


def five_fold_predictions(samples: list[Sample], folds: int = 5,
                          seed: int = 0) -> dict[int, str]:
    """Out-of-fold prediction per sample index via k-fold cross-validation.

    Folds are class-stratified so sparse classes keep training presence in
    every fold.
    """
    if len(samples) < folds:
        raise ValidationError(
            f"{len(samples)} samples cannot form {folds} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(samples), dtype=int)
    by_class: dict[str, list[int]] = {}
    for i, s in enumerate(samples):
        by_class.setdefault(str(s.label), []).append(i)
    for cls in sorted(by_class):
        members = np.array(by_class[cls])
        rng.shuffle(members)
        offset = int(rng.integers(folds))
        for pos, i in enumerate(members.tolist()):
            fold_of[i] = (pos + offset) % folds
    predictions: dict[int, str] = {}
    for fold in range(folds):
        test_idx = np.flatnonzero(fold_of == fold).tolist()
        if not test_idx:
            continue
        train_idx = np.flatnonzero(fold_of != fold).tolist()
        model = train([samples[i] for i in train_idx], seed=seed)
        X = np.stack([samples[i].features for i in test_idx])
        for i, label in zip(test_idx, model.predict(X)):
            predictions[i] = str(label)
    return predictions


def security_run(trace: RssiTrace, truth: GroundTruth, config: Config,
                 folds: int = 5, seed: int = 0,
                 detection: DetectionResult | None = None,
                 bootstrap_s: float = 120.0) -> SecurityResult:
    """Detect once, cross-validate the classifier, time every departure."""
    if detection is None:
        detection = MovementDetector(config, bootstrap_s).run(trace)
    kept = [w for w in detection.windows if w.duration >= config.t_delta]
    counts = md_outcomes(detection.windows, truth, config.delta,
                         config.t_delta, trace.duration)
    samples, events = labeled_samples(trace, kept, truth, config)
    predictions = five_fold_predictions(samples, folds, seed)
    matched = match_events(kept, truth, config.delta, trace.duration)

    correct = sum(1 for i, s in enumerate(samples) if predictions[i] == s.label)
    accuracy = correct / len(samples) if samples else 0.0

    event_prediction = {events[i]: predictions[i] for i in range(len(samples))}
    outcomes = []
    for idx, (t, label) in enumerate(truth.events):
        if label == ENTRY_LABEL:
            continue
        if idx in event_prediction:
            window = matched[idx]
            if event_prediction[idx] == label:
                outcomes.append(DeauthOutcome(
                    t, label, CASE_A, window.t1 + config.t_delta))
            else:
                outcomes.append(DeauthOutcome(
                    t, label, CASE_B, t + config.t_id + config.t_ss))
        else:
            outcomes.append(DeauthOutcome(t, label, CASE_C, t + config.T))
    return SecurityResult(outcomes, counts, accuracy, len(samples),
                          event_prediction)


def timeout_outcomes(truth: GroundTruth, config: Config) -> list[DeauthOutcome]:
    """Baseline: every departure deauthenticates at the idle time-out."""
    return [DeauthOutcome(t, label, CASE_C, t + config.T)
            for t, label in truth.departures()]


def deauth_curve(outcomes: list[DeauthOutcome], resolution: float = 0.1,
                 horizon: float = 15.0) -> list[dict]:
    """Cumulative proportion of departures deauthenticated by elapsed time."""
    elapsed = np.array([o.elapsed for o in outcomes])
    rows = []
    steps = int(round(horizon / resolution))
    for i in range(steps + 1):
        tau = i * resolution
        rows.append({"elapsed_s": round(tau, 6),
                     "proportion": float((elapsed <= tau + 1e-12).mean())
                     if elapsed.size else 0.0})
    return rows


def script_exits(script: MovementScript) -> list[tuple[float, str]]:
    """(exit time, workstation) per office exit in the script."""
    seats = script.seats()
    return [(ev.t, seats[ev.user]) for ev in script.events if ev.kind == EXIT]


def attack_opportunities(outcomes: list[DeauthOutcome],
                         exits: list[tuple[float, str]],
                         adversary: str) -> int:
    """Exits leaving the workstation authenticated when the adversary arrives.

    The insider starts outside and needs 4 s to reach the desk; a co-worker
    is already inside and reaches it immediately.
    """
    if adversary not in ADVERSARY_DELAY_S:
        raise ValidationError(f"unknown adversary {adversary!r}")
    delay = ADVERSARY_DELAY_S[adversary]
    by_ws: dict[str, list[DeauthOutcome]] = {}
    for o in outcomes:
        by_ws.setdefault(o.workstation, []).append(o)
    for lst in by_ws.values():
        lst.sort(key=lambda o: o.departure_t)
    count = 0
    for t_exit, w in exits:
        candidates = [o for o in by_ws.get(w, []) if o.departure_t <= t_exit]
        if not candidates:
            continue
        outcome = candidates[-1]
        if outcome.deauth_t > t_exit + delay:
            count += 1
    return count


def vulnerable_time(outcomes: list[DeauthOutcome]) -> float:
    """Total seconds workstations sit unattended but authenticated."""
    return float(sum(max(0.0, o.elapsed) for o in outcomes))


@dataclass(frozen=True)
class CostReport:
    runs: int
    screensavers_mean: float
    screensavers_std: float
    deauths_mean: float
    deauths_std: float
    cost_s: float


def usability_sim(trace: RssiTrace, truth: GroundTruth, plan: FloorPlan,
                  script: MovementScript, config: Config,
                  classifier: WindowClassifier | None = None,
                  runs: int = 100, cost_ss: float = 3.0,
                  cost_deauth: float = 13.0, p: float = 0.78,
                  input_interval: float = 5.0, seed: int = 0,
                  detection: DetectionResult | None = None,
                  bootstrap_s: float = 120.0) -> CostReport:
    """Replay the controller under freshly drawn inputs and price the errors.

    A screen saver or deauthentication landing on a workstation whose user
    is seated at that moment is an error the user pays for (cost_ss and
    cost_deauth seconds respectively). Detection runs once; only the inputs
    differ across runs.
    """
    if runs < 1:
        raise ValidationError(f"runs must be >= 1, got {runs}")
    if detection is None:
        detection = MovementDetector(config, bootstrap_s).run(trace)
    if classifier is None:
        kept = [w for w in detection.windows if w.duration >= config.t_delta]
        samples, _ = labeled_samples(trace, kept, truth, config)
        classifier = train(samples, seed=seed)
    away = away_intervals(plan, script, trace.duration)
    workstations = sorted(away)
    decisions = detection.decision_at()
    child_seeds = np.random.SeedSequence(seed).generate_state(runs)
    ss_counts = np.empty(runs)
    deauth_counts = np.empty(runs)
    for r in range(runs):
        inputs = simulate_inputs(trace.duration, away, p, input_interval,
                                 seed=int(child_seeds[r]))
        log = run_controller(trace, decisions, inputs, classifier, config,
                             workstations)
        ss = deauth = 0
        for record in log:
            if record.action == SCREENSAVER_ON and \
                    is_seated(away[record.workstation], record.t):
                ss += 1
            elif record.action in (DEAUTHENTICATE, TIMEOUT_DEAUTH) and \
                    is_seated(away[record.workstation], record.t):
                deauth += 1
        ss_counts[r] = ss
        deauth_counts[r] = deauth
    ss_mean = float(ss_counts.mean())
    deauth_mean = float(deauth_counts.mean())
    return CostReport(runs, ss_mean, float(ss_counts.std()),
                      deauth_mean, float(deauth_counts.std()),
                      cost_ss * ss_mean + cost_deauth * deauth_mean)


def md_sensor_table(trace: RssiTrace, truth: GroundTruth, config: Config,
                    subsets: list[tuple[int, list[int]]] | None = None,
                    bootstrap_s: float = 120.0) -> list[dict]:
    """TP/FP/FN per sensor-count by masking device subsets of one trace."""
    if subsets is None:
        ids = trace.sensor_ids()
        subsets = [(k, ids[:k]) for k in range(3, len(ids) + 1)]
    rows = []
    for k, ids in subsets:
        masked = trace.select_sensors(ids)
        detection = MovementDetector(config, bootstrap_s).run(masked)
        counts = md_outcomes(detection.windows, truth, config.delta,
                             config.t_delta, masked.duration)
        rows.append({"sensors": k, "tp": counts.tp, "fp": counts.fp,
                     "fn": counts.fn, "precision": counts.precision,
                     "recall": counts.recall,
                     "f_measure": f_measure(counts.tp, counts.fp, counts.fn)})
    return rows


def learning_curve(samples: list[Sample], sizes=None, repeats: int = 10,
                   folds: int = 5, seed: int = 0) -> list[dict]:
    """Cross-validated accuracy vs training-set size, with a 95% CI.

    Per repeat the fold split is reshuffled; per fold the training pool is
    subsampled class-stratified to each size. The CI uses the t-distribution
    across repeats.
    """
    labels = np.array([s.label for s in samples])
    if sizes is None:
        max_pool = len(samples) - math.ceil(len(samples) / folds)
        sizes = list(range(5, max_pool + 1, 5))
    acc = np.full((len(sizes), repeats), np.nan)
    for r in range(repeats):
        rng = np.random.default_rng(seed + r)
        order = rng.permutation(len(samples))
        fold_chunks = np.array_split(order, folds)
        for si, size in enumerate(sizes):
            fold_accs = []
            for chunk in fold_chunks:
                test = chunk.tolist()
                pool = [i for i in order.tolist() if i not in set(test)]
                subset = _stratified_head(pool, labels, size)
                classes = {labels[i] for i in subset}
                counts = [sum(1 for i in subset if labels[i] == c) for c in classes]
                if len(classes) < 2 or min(counts) < 2:
                    continue
                model = train([samples[i] for i in subset], seed=seed)
                X = np.stack([samples[i].features for i in test])
                pred = model.predict(X)
                fold_accs.append(float((pred == labels[test]).mean()))
            if fold_accs:
                acc[si, r] = float(np.mean(fold_accs))
    rows = []
    t_crit = scipy_stats.t.ppf(0.975, repeats - 1) if repeats > 1 else 0.0
    for si, size in enumerate(sizes):
        vals = acc[si][~np.isnan(acc[si])]
        if vals.size == 0:
            continue
        mean = float(vals.mean())
        half = float(t_crit * vals.std(ddof=1) / math.sqrt(vals.size)) \
            if vals.size > 1 else 0.0
        rows.append({"train_size": size, "accuracy": mean,
                     "ci95_low": mean - half, "ci95_high": mean + half})
    return rows


def _stratified_head(pool: list[int], labels: np.ndarray, size: int) -> list[int]:
    """First ``size`` pool members, round-robin across classes."""
    by_class: dict[str, list[int]] = {}
    for i in pool:
        by_class.setdefault(str(labels[i]), []).append(i)
    queues = [by_class[c] for c in sorted(by_class)]
    subset: list[int] = []
    cursor = 0
    while len(subset) < min(size, len(pool)):
        queue = queues[cursor % len(queues)]
        if queue:
            subset.append(queue.pop(0))
        cursor += 1
        if all(not q for q in queues):
            break
    return subset
