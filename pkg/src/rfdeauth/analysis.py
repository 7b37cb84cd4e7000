"""Feature diagnostics: pairwise correlations, relative mutual information
against the class label, and per-stream importance for floor-plan heatmaps.

RMI(x, y) = (H(x) - H(x|y)) / H(x) with empirical entropies over a 256-bin
equal-width quantization of the feature between its minimum and maximum.
Natural logs throughout; the ratio cancels the base anyway.
"""

from __future__ import annotations

import numpy as np

from .config import StreamId
from .errors import ValidationError

RMI_BINS = 256


def correlation_matrix(X, names: list[str]
                       ) -> tuple[np.ndarray, list[str], list[str]]:
    """Pearson correlations between feature columns.

    Zero-variance features cannot be correlated and are excluded; their
    names come back in the third element so callers can report them.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("need at least 2 samples for correlations")
    if X.shape[1] != len(names):
        raise ValidationError(
            f"{X.shape[1]} feature columns but {len(names)} names")
    variances = X.var(axis=0)
    keep = variances > 0.0
    dropped = [n for n, k in zip(names, keep) if not k]
    kept_names = [n for n, k in zip(names, keep) if k]
    if not kept_names:
        return np.zeros((0, 0)), [], dropped
    matrix = np.corrcoef(X[:, keep], rowvar=False)
    matrix = np.atleast_2d(matrix)
    np.fill_diagonal(matrix, 1.0)
    return matrix, kept_names, dropped


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def rmi(feature_values, labels, bins: int = RMI_BINS) -> float:
    """Share of a feature's entropy explained by the class label, in [0, 1]."""
    x = np.asarray(feature_values, dtype=float)
    y = np.asarray(labels)
    if x.size != y.size:
        raise ValidationError("feature and label lengths differ")
    if x.size < 2 or np.unique(y).size < 2:
        raise ValidationError("need >= 2 samples and >= 2 distinct labels")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return 0.0
    width = (hi - lo) / bins
    idx = np.minimum((np.floor((x - lo) / width)).astype(int), bins - 1)
    h_x = _entropy(np.bincount(idx, minlength=bins))
    if h_x == 0.0:
        return 0.0
    h_cond = 0.0
    for cls in np.unique(y):
        mask = y == cls
        h_cond += (mask.sum() / x.size) * _entropy(
            np.bincount(idx[mask], minlength=bins))
    return float(np.clip((h_x - h_cond) / h_x, 0.0, 1.0))


def rank_features(X, labels, names: list[str], bins: int = RMI_BINS) -> list[dict]:
    """Per-feature RMI, sorted descending: rank, feature, rmi."""
    X = np.asarray(X, dtype=float)
    scores = [(names[j], rmi(X[:, j], labels, bins)) for j in range(X.shape[1])]
    scores.sort(key=lambda item: (-item[1], item[0]))
    return [{"rank": i + 1, "feature": name, "rmi": value}
            for i, (name, value) in enumerate(scores)]


def filter_features(X, names: list[str], labels,
                    corr_threshold: float = 0.95,
                    rmi_threshold: float = 0.01,
                    bins: int = RMI_BINS) -> list[str]:
    """Drop near-duplicate (|r| > corr_threshold, keeping the first of each
    pair) and uninformative (RMI < rmi_threshold) features."""
    X = np.asarray(X, dtype=float)
    matrix, kept_names, _ = correlation_matrix(X, names)
    col = {n: names.index(n) for n in kept_names}
    survivors: list[str] = []
    for i, name in enumerate(kept_names):
        duplicate = any(abs(matrix[i, kept_names.index(prev)]) > corr_threshold
                        for prev in survivors)
        if duplicate:
            continue
        if rmi(X[:, col[name]], labels, bins) < rmi_threshold:
            continue
        survivors.append(name)
    return survivors


def stream_importance(rmi_table: list[dict], surviving: list[str],
                      plan) -> list[dict]:
    """Max surviving-feature RMI per stream, with geometry for plotting.

    Feature names follow d{tx}-d{rx}-{var|ent|ac}; each stream's importance
    attaches to its tx-rx segment endpoints. Streams with no surviving
    feature are omitted.
    """
    surviving_set = set(surviving)
    best: dict[StreamId, float] = {}
    for row in rmi_table:
        if row["feature"] not in surviving_set:
            continue
        stream = _stream_of(row["feature"])
        best[stream] = max(best.get(stream, 0.0), row["rmi"])
    spos = plan.sensor_pos()
    rows = []
    for stream in sorted(best):
        if stream.tx not in spos or stream.rx not in spos:
            raise ValidationError(f"stream {stream} not on the floor plan")
        (x1, y1), (x2, y2) = spos[stream.tx], spos[stream.rx]
        rows.append({"tx": stream.tx, "rx": stream.rx,
                     "importance": best[stream],
                     "x1": float(x1), "y1": float(y1),
                     "x2": float(x2), "y2": float(y2)})
    rows.sort(key=lambda r: -r["importance"])
    return rows


def _stream_of(feature_name: str) -> StreamId:
    try:
        tx_part, rx_part, _ = feature_name.split("-")
        return StreamId(int(tx_part[1:]), int(rx_part[1:]))
    except (ValueError, IndexError):
        raise ValidationError(f"malformed feature name {feature_name!r}") from None
