"""Exhaustive binary split search over midpoint thresholds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import midpoint

CRITERIA = ("sdr", "info-gain-ratio", "gini")

# a split must beat this gain to count as an improvement
GAIN_EPS = 1e-12
# gains within this (relative) distance of the best are ties
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SplitTest:
    """Route a run left iff ``value < threshold``."""

    variable: str
    threshold: float
    index: int = -1

    def goes_left(self, value: float) -> bool:
        return value < self.threshold

    def to_dict(self) -> dict:
        return {"variable": self.variable, "threshold": self.threshold}


def sample_sd(y: np.ndarray) -> float:
    """Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values."""
    if y.size < 2:
        return 0.0
    return float(np.std(y, ddof=1))


def entropy(counts: np.ndarray) -> np.ndarray:
    """Shannon entropy in bits of each row of a count matrix."""
    counts = np.atleast_2d(np.asarray(counts, dtype=np.float64))
    n = counts.sum(axis=1, keepdims=True)
    p = np.divide(counts, n, out=np.zeros_like(counts), where=n > 0)
    logs = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logs).sum(axis=1)


def gini(counts: np.ndarray) -> np.ndarray:
    counts = np.atleast_2d(np.asarray(counts, dtype=np.float64))
    n = counts.sum(axis=1, keepdims=True)
    p = np.divide(counts, n, out=np.zeros_like(counts), where=n > 0)
    return 1.0 - (p * p).sum(axis=1)


def pick_best(gains: np.ndarray) -> int | None:
    """Index of the first entry within tie tolerance of the maximum gain.

    ``gains`` must already be laid out in tie-break order (variable, then
    ascending threshold). Entries that are not strictly positive never win.
    """
    if gains.size == 0:
        return None
    best = gains.max()
    if not best > GAIN_EPS:
        return None
    return int(np.argmax(gains >= best - TIE_TOL * max(1.0, abs(best))))


def _class_gains(ys: np.ndarray, n_classes: int, criterion: str) -> np.ndarray:
    n = ys.size
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    total = left[-1] + onehot[-1]
    right = total - left
    n_left = np.arange(1, n, dtype=np.float64)
    w_left, w_right = n_left / n, (n - n_left) / n
    impurity = entropy if criterion == "info-gain-ratio" else gini
    parent = impurity(total)[0]
    gain = parent - w_left * impurity(left) - w_right * impurity(right)
    if criterion == "gini":
        return gain
    split_info = entropy(np.stack([n_left, n - n_left], axis=1))
    return np.where(gain > GAIN_EPS, gain / split_info, 0.0)


def _sdr_gains(ys: np.ndarray) -> np.ndarray:
    n = ys.size
    parent = sample_sd(ys)
    out = np.empty(n - 1)
    for t in range(1, n):
        out[t - 1] = parent - (t / n) * sample_sd(ys[:t]) - ((n - t) / n) * sample_sd(ys[t:])
    return out


def split_gains(x: np.ndarray, y: np.ndarray, criterion: str, n_classes: int | None = None):
    """Criterion value of every legal split of one variable.

    Returns ``(thresholds, gains)`` in ascending threshold order; both empty
    when the variable is constant over the rows.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return np.empty(0), np.empty(0)
    if criterion == "sdr":
        gains = _sdr_gains(ys.astype(np.float64))
    else:
        gains = _class_gains(ys, n_classes, criterion)
    thresholds = midpoint(xs[:-1], xs[1:])
    return thresholds[valid], gains[valid]


def best_split(X, y, criterion: str, variables=None, n_classes: int | None = None):
    """Best ``(SplitTest, gain)`` over all variables and midpoints, or None.

    Parameters
    ----------
    X : (n_rows, n_vars) array
        Variable values of the rows under consideration.
    y : (n_rows,) array
        Class indices for ``info-gain-ratio`` and ``gini``; class indices or
        continuous values for ``sdr``.
    criterion : {'sdr', 'info-gain-ratio', 'gini'}
    variables : sequence of str, optional
        Column names; defaults to ``v1..vN``.
    n_classes : int, optional
        Alphabet size for the class criteria; inferred from ``y`` if omitted.

    Ties go to the lower variable index, then the lower threshold. None is
    returned when no split has strictly positive gain.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("best_split needs a non-empty 2-d row subset")
    if y.shape != (X.shape[0],):
        raise ValueError("target length does not match rows")
    if criterion != "sdr":
        if not np.issubdtype(y.dtype, np.integer):
            raise ValueError(f"{criterion} needs integer class indices")
        if n_classes is None:
            n_classes = int(y.max()) + 1
    elif not np.issubdtype(y.dtype, np.number):
        raise ValueError("sdr needs a continuous or class-index-coded target")
    if variables is None:
        variables = [f"v{j + 1}" for j in range(X.shape[1])]

    all_vars, all_thr, all_gain = [], [], []
    for j in range(X.shape[1]):
        thr, gains = split_gains(X[:, j], y, criterion, n_classes)
        all_vars.append(np.full(thr.size, j))
        all_thr.append(thr)
        all_gain.append(gains)
    gains = np.concatenate(all_gain) if all_gain else np.empty(0)
    i = pick_best(gains)
    if i is None:
        return None
    j = int(np.concatenate(all_vars)[i])
    threshold = float(np.concatenate(all_thr)[i])
    return SplitTest(variables[j], threshold, j), float(gains[i])
