"""Per-window feature samples and the workstation classifier.

A variation window's signature is, for every stream, the triple
(variance, entropy, lag-k autocorrelation) of the first ``t_delta`` seconds
of readings — the segment where exit paths have not yet converged on the
door. Samples are auto-labeled by correlating the window with workstation
idle times: exactly one idle workstation names the departure, none means
someone entered (w_0), and more than one is ambiguous and discarded.

The classifier is a one-vs-rest linear max-margin model trained by
full-batch regularized subgradient descent on standardized features. Ties in
the class scores resolve to the lowest class index.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .activity import IdleTracker
from .config import ENTRY_LABEL, Config, tick_of
from .detection import VariationWindow
from .errors import ModelFormatError, ParseError, ValidationError
from .simulate import RssiTrace

MODEL_FORMAT = "window-classifier/1"


@dataclass
class Sample:
    """Feature vector for one variation window, stream-major (var, ent, ac)."""

    features: np.ndarray
    t1: float
    label: str | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)


def feature_names(streams) -> list[str]:
    names = []
    for s in streams:
        for kind in ("var", "ent", "ac"):
            names.append(f"d{s.tx}-d{s.rx}-{kind}")
    return names


def window_variance(window: np.ndarray) -> float:
    """Population variance, sum((r - mu)^2) / n."""
    return float(np.var(window))


def window_entropy(window: np.ndarray, bin_width: float) -> float:
    """Shannon entropy (natural log) of the value histogram.

    Bin edges are anchored at the window minimum so a constant offset on a
    stream leaves the entropy unchanged.
    """
    idx = np.floor((window - window.min()) / bin_width).astype(int)
    counts = np.bincount(idx)
    p = counts[counts > 0] / window.size
    return float(-(p * np.log(p)).sum())


def window_autocorrelation(window: np.ndarray, lag: int) -> float:
    """Lag-k autocorrelation sum((r_j - mu)(r_{j+k} - mu)) / ((n - k) var).

    Defined as 0 for constant windows. The (n - k) normalization can push
    adversarial windows a hair past unit magnitude, so the value is clipped
    to [-1, 1].
    """
    n = window.size
    if lag >= n:
        return 0.0
    mu = window.mean()
    var = float(((window - mu) ** 2).mean())
    if var == 0.0:
        return 0.0
    dev = window - mu
    r = float((dev[:-lag] * dev[lag:]).sum() / ((n - lag) * var))
    return float(np.clip(r, -1.0, 1.0))


def extract_features(trace: RssiTrace, t1: float, t_delta: float,
                     config: Config) -> Sample:
    """Signature of the window [t1, t1 + t_delta) across all streams."""
    fs = trace.sample_rate_hz
    k1 = tick_of(t1, fs)
    n = tick_of(t_delta, fs)
    if k1 + n > trace.n_ticks:
        raise ValidationError(
            f"feature window [{t1}, {t1 + t_delta}) runs past the trace end")
    feats = np.empty(3 * len(trace.streams))
    for i in range(len(trace.streams)):
        w = trace.values[i, k1:k1 + n]
        feats[3 * i] = window_variance(w)
        feats[3 * i + 1] = window_entropy(w, config.entropy_bin_width)
        feats[3 * i + 2] = window_autocorrelation(w, config.ac_lag)
    return Sample(feats, t1)


def auto_label(window: VariationWindow, tracker: IdleTracker, t_delta: float,
               entry_hint: float | None = None) -> str | None:
    """Label a window from idle times; None means discarded as ambiguous.

    Queries the idle set at t1 + t_delta over the last t_delta seconds:
    exactly one idle workstation is the departure label, none is an entry
    (w_0), several is ambiguous. ``entry_hint``, when given and inside the
    window, short-circuits to w_0 for curated entry logs.
    """
    if entry_hint is not None and window.t1 <= entry_hint <= window.t2:
        return ENTRY_LABEL
    idle = tracker.idle_set(window.t1 + t_delta, t_delta)
    if len(idle) == 1:
        return next(iter(idle))
    if len(idle) == 0:
        return ENTRY_LABEL
    return None


class WindowClassifier(BaseEstimator, ClassifierMixin):
    """One-vs-rest linear hinge-loss classifier with feature standardization.

    Full-batch subgradient descent keeps training deterministic and
    invariant under duplicating the training set; ``seed`` is kept for API
    stability but the solver draws no randomness.
    """

    def __init__(self, l2: float = 1e-3, epochs: int = 200, seed: int = 0):
        self.l2 = l2
        self.epochs = epochs
        self.seed = seed

    def fit(self, X, y) -> "WindowClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValidationError(
                f"X {X.shape} and y {y.shape} are inconsistent")
        classes, counts = np.unique(y, return_counts=True)
        if classes.size < 2:
            raise ValidationError("training needs at least 2 classes")
        if counts.min() < 2:
            short = classes[counts.argmin()]
            raise ValidationError(
                f"class {short} has fewer than 2 training samples")
        if np.all(X == X[0]):
            raise ValidationError("degenerate training set: all feature rows equal")

        self.classes_ = classes
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        self.scale_ = scale
        Xs = (X - self.mean_) / self.scale_

        n, n_features = Xs.shape
        coef = np.zeros((classes.size, n_features))
        intercept = np.zeros(classes.size)
        max_norm = 1.0 / np.sqrt(self.l2)
        for ci, cls in enumerate(classes):
            target = np.where(y == cls, 1.0, -1.0)
            w = np.zeros(n_features)
            b = 0.0
            for step in range(1, self.epochs + 1):
                eta = 1.0 / (self.l2 * step)
                margins = target * (Xs @ w + b)
                viol = margins < 1.0
                grad_w = self.l2 * w
                grad_b = 0.0
                if viol.any():
                    grad_w = grad_w - (target[viol] @ Xs[viol]) / n
                    grad_b = -float(target[viol].sum()) / n
                w = w - eta * grad_w
                b = b - eta * grad_b
                norm = float(np.linalg.norm(w))
                if norm > max_norm:
                    w *= max_norm / norm
            coef[ci] = w
            intercept[ci] = b
        self.coef_ = coef
        self.intercept_ = intercept
        self.training_accuracy_ = float(
            (self.predict(X) == y).mean())
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("WindowClassifier.fit must run before predict")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.coef_.shape[1]:
            raise ValidationError(
                f"feature length {X.shape[1]} does not match the model's "
                f"{self.coef_.shape[1]}")
        Xs = (X - self.mean_) / self.scale_
        return Xs @ self.coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        # argmax returns the first maximum: ties go to the lowest class index
        return self.classes_[np.argmax(scores, axis=1)]


def train(samples: list[Sample], seed: int = 0, l2: float = 1e-3,
          epochs: int = 200) -> WindowClassifier:
    """Fit the classifier on labeled samples; unlabeled ones are rejected."""
    labeled = [s for s in samples if s.label is not None]
    if not labeled:
        raise ValidationError("no labeled samples to train on")
    X = np.stack([s.features for s in labeled])
    y = np.array([s.label for s in labeled])
    return WindowClassifier(l2=l2, epochs=epochs, seed=seed).fit(X, y)


def classify(model: WindowClassifier, sample: Sample) -> str:
    return str(model.predict(sample.features[None, :])[0])


def save_model(model: WindowClassifier, path) -> None:
    model._check_fitted()
    payload = {
        "format": MODEL_FORMAT,
        "classes": model.classes_.tolist(),
        "mean": model.mean_.tolist(),
        "scale": model.scale_.tolist(),
        "coef": model.coef_.tolist(),
        "intercept": model.intercept_.tolist(),
        "l2": model.l2,
        "epochs": model.epochs,
        "seed": model.seed,
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def load_model(path) -> WindowClassifier:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"model file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelFormatError(
            f"{path}: unknown model format {payload.get('format') if isinstance(payload, dict) else payload!r}")
    try:
        model = WindowClassifier(l2=payload["l2"], epochs=payload["epochs"],
                                 seed=payload["seed"])
        model.classes_ = np.array(payload["classes"])
        model.mean_ = np.array(payload["mean"], dtype=float)
        model.scale_ = np.array(payload["scale"], dtype=float)
        model.coef_ = np.array(payload["coef"], dtype=float)
        model.intercept_ = np.array(payload["intercept"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: missing or malformed field ({exc})") from None
    if model.coef_.ndim != 2 or model.coef_.shape[0] != model.classes_.size:
        raise ModelFormatError(f"{path}: inconsistent coefficient shape")
    return model


def write_samples(samples: list[Sample], path) -> None:
    """CSV export: label,f_0..f_{3S-1} (stream-major var/ent/ac ordering)."""
    if not samples:
        raise ValidationError("no samples to write")
    width = samples[0].features.size
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"f_{i}" for i in range(width)])
        for s in samples:
            writer.writerow([s.label if s.label is not None else ""]
                            + [repr(v) for v in s.features.tolist()])


def read_samples(path) -> list[Sample]:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"sample file not found: {path}")
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "label":
            raise ParseError(f"{path}:1: expected header label,f_0,...")
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(f"{path}:{rownum}: expected {len(header)} fields")
            try:
                feats = np.array([float(v) for v in row[1:]])
            except ValueError:
                raise ParseError(f"{path}:{rownum}: malformed row") from None
            out.append(Sample(feats, 0.0, row[0] or None))
    return out
