"""Multiclass alternating decision trees grown by LogitBoost."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..dataset import RunTable, midpoint
from .classic import training_target
from .model import GainRecord, ModelError, Node, TreeModel, softmax
from .splits import TIE_TOL, SplitTest


@dataclass(frozen=True)
class LadTreeParams:
    iterations: int = 10
    z_clip: float = 4.0
    weight_floor: float = 1e-12

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ModelError("iterations must be an integer >= 1")
        if not self.z_clip > 0:
            raise ModelError("z_clip must be > 0")
        if not self.weight_floor > 0:
            raise ModelError("weight_floor must be > 0")


def _instance_losses(F, y):
    Z = F - F.max(axis=1, keepdims=True)
    return np.log(np.exp(Z).sum(axis=1)) - Z[np.arange(y.size), y]


def log_loss(F: np.ndarray, y: np.ndarray) -> float:
    """Mean multiclass log-loss of score matrix ``F`` against class indices ``y``."""
    return float(np.mean(_instance_losses(F, y)))


class LadTreeBuilder:
    """Incremental LogitBoost growth; one :meth:`step` adds one splitter.

    Each iteration computes class probabilities from the current additive
    scores, forms clipped working responses and weights, and attaches the
    splitter (prediction node x variable x midpoint) with the largest
    weighted-least-squares fit over the rows reaching that prediction node.
    """

    MAX_HALVINGS = 30

    def __init__(self, X, y, k, variables, params: LadTreeParams):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.k = int(k)
        self.variables = tuple(variables)
        self.params = params
        n, p = self.X.shape
        self.order = np.argsort(self.X, axis=0, kind="stable").T  # (p, n)
        self.Y = np.zeros((n, self.k))
        self.Y[np.arange(n), self.y] = 1.0
        self.F = np.zeros((n, self.k))
        self.masks: list[np.ndarray] = []
        self.pred_ids: list[int] = []
        # rows of every prediction node sorted by each variable, laid end to end: (p, N)
        self._rows = np.empty((p, 0), dtype=np.int64)
        # legal splits, ordered by (prediction node, variable, threshold); a split at
        # column c puts segment columns [start, c) on the left and [c, end) on the right.
        # New nodes queue their pieces in _pending until the next search joins them.
        self._cand = {key: np.empty(0, dtype=np.float64 if key == "threshold" else np.int64)
                      for key in ("var", "col", "start", "end", "owner", "threshold")}
        self._pending: list[tuple[np.ndarray, dict]] = []
        self._width = 0
        self._probe_X = np.empty((0, p))
        self._probe_F = np.empty((0, self.k))
        self._probe_reach: list[np.ndarray] = []
        self._add_prediction_node(0, np.ones(n, dtype=bool))
        self.nodes: list[dict] = [{"id": 0, "kind": "prediction", "scores": [0.0] * self.k,
                                   "children": []}]
        self.log: list[GainRecord] = []
        self.losses = [log_loss(self.F, self.y)]
        self.damped: list[tuple[int, float, float]] = []

    def _add_prediction_node(self, node_id, mask):
        p = self.X.shape[1]
        size = int(mask.sum())
        rows = self.order[mask[self.order]].reshape(p, size)
        xs = np.take_along_axis(self.X.T, rows, axis=1)
        var, pos = np.nonzero(xs[:, 1:] > xs[:, :-1])
        offset = self._width
        self._width += size
        self._pending.append((rows, {
            "var": var, "col": offset + pos + 1, "start": np.full(var.size, offset),
            "end": np.full(var.size, offset + size), "owner": np.full(var.size, len(self.masks)),
            "threshold": midpoint(xs[var, pos], xs[var, pos + 1]),
        }))
        self.masks.append(mask)
        self.pred_ids.append(node_id)
        self._probe_reach.append(np.zeros(self._probe_X.shape[0], dtype=bool) if node_id else
                                 np.ones(self._probe_X.shape[0], dtype=bool))

    def track(self, X) -> None:
        """Register extra rows whose scores are updated as the tree grows.

        Must be called before the first :meth:`step`.
        """
        if self.log:
            raise ModelError("probes must be registered before growth starts")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self._probe_X = np.concatenate([self._probe_X, X])
        self._probe_F = np.zeros((self._probe_X.shape[0], self.k))
        self._probe_reach = [np.ones(self._probe_X.shape[0], dtype=bool)]

    def probe_proba(self) -> np.ndarray:
        """Class distributions of the tracked rows under the current tree."""
        return softmax(self._probe_F)

    @property
    def iterations_done(self) -> int:
        return len(self.log)

    def _working_response(self):
        P = softmax(self.F)
        W = np.maximum(P * (1.0 - P), self.params.weight_floor)
        Z = np.clip((self.Y - P) / W, -self.params.z_clip, self.params.z_clip)
        return W, W * Z

    def _flush(self):
        if self._pending:
            self._rows = np.concatenate([self._rows] + [rows for rows, _ in self._pending], axis=1)
            for key in self._cand:
                self._cand[key] = np.concatenate([self._cand[key]] + [c[key] for _, c in self._pending])
            self._pending.clear()

    def _search(self, W, WZ):
        self._flush()
        cand = self._cand
        if cand["var"].size == 0:
            return None
        k = self.k
        p, N = self._rows.shape
        # prefix sums per channel (k weight columns, then k weighted responses)
        C = np.zeros((2 * k, p, N + 1))
        np.cumsum(np.concatenate([W, WZ], axis=1).T[:, self._rows], axis=2, out=C[:, :, 1:])
        C = C.reshape(2 * k, p * (N + 1))
        v = cand["var"]
        base = v * (N + 1)
        at = np.take(C, base + cand["col"], axis=1)
        left = at - np.take(C, base + cand["start"], axis=1)
        right = np.take(C, base + cand["end"], axis=1) - at
        with np.errstate(divide="ignore", invalid="ignore"):
            fit = (left[k:] ** 2 / left[:k]).sum(axis=0) + (right[k:] ** 2 / right[:k]).sum(axis=0)
        best = fit.max()
        i = int(np.argmax(fit >= best - TIE_TOL * max(1.0, abs(best))))
        return int(cand["owner"][i]), int(v[i]), float(cand["threshold"][i]), float(best)

    def _centered(self, sw, swz):
        f = np.divide(swz, sw, out=np.zeros_like(swz), where=sw > 0)
        return (self.k - 1) / self.k * (f - f.mean())

    def _damped(self, rows, f):
        """Halve the step until the rows' log-loss does not increase.

        Clipped working responses can point a Newton step uphill; the full
        step is kept whenever it already decreases the loss.
        """
        F, y = self.F[rows], self.y[rows]
        before = _instance_losses(F, y).sum()
        scale = 1.0
        for _ in range(self.MAX_HALVINGS):
            if _instance_losses(F + scale * f, y).sum() <= before:
                return scale * f, scale
            scale *= 0.5
        return np.zeros_like(f), 0.0

    def step(self) -> bool:
        """Add one splitter; False when no legal split remains anywhere."""
        W, WZ = self._working_response()
        found = self._search(W, WZ)
        if found is None:
            return False
        a, j, threshold, fit = found
        parent = self.masks[a]
        below = self.X[:, j] < threshold
        yes, no = parent & below, parent & ~below
        f_yes, s_yes = self._damped(yes, self._centered(W[yes].sum(axis=0), WZ[yes].sum(axis=0)))
        f_no, s_no = self._damped(no, self._centered(W[no].sum(axis=0), WZ[no].sum(axis=0)))
        if s_yes < 1.0 or s_no < 1.0:
            self.damped.append((len(self.log) + 1, s_yes, s_no))
        self.F[yes] += f_yes
        self.F[no] += f_no
        if self._probe_X.shape[0]:
            reach = self._probe_reach[a]
            probe_below = self._probe_X[:, j] < threshold
            self._probe_F[reach & probe_below] += f_yes
            self._probe_F[reach & ~probe_below] += f_no

        it = len(self.log) + 1
        sid, yid, nid = 3 * it - 2, 3 * it - 1, 3 * it
        parent_id = self.pred_ids[a]
        self.nodes[parent_id]["children"].append(sid)
        self.nodes.append({"id": sid, "kind": "splitter",
                           "split": SplitTest(self.variables[j], float(threshold), int(j)),
                           "children": [yid, nid]})
        self.nodes.append({"id": yid, "kind": "prediction", "scores": f_yes.tolist(), "children": []})
        self.nodes.append({"id": nid, "kind": "prediction", "scores": f_no.tolist(), "children": []})
        self._add_prediction_node(yid, yes)
        self._add_prediction_node(nid, no)
        if self._probe_X.shape[0]:
            self._probe_reach[-2] = self._probe_reach[a] & probe_below
            self._probe_reach[-1] = self._probe_reach[a] & ~probe_below
        self.log.append(GainRecord(it, parent_id, self.variables[j], float(threshold), fit))
        self.losses.append(log_loss(self.F, self.y))
        return True

    def model(self, objective=None, alphabet=None) -> TreeModel:
        nodes = tuple(
            Node(d["id"], d["kind"], split=d.get("split"), children=tuple(d["children"]),
                 scores=tuple(d["scores"]) if "scores" in d else None)
            for d in self.nodes
        )
        alphabet = tuple(alphabet) if alphabet else tuple(str(i) for i in range(self.k))
        meta = {"objective": objective, "iterations_performed": self.iterations_done,
                "log_loss": list(self.losses), "damped_steps": [list(d) for d in self.damped]}
        return TreeModel("ladtree", asdict(self.params), self.variables, alphabet,
                         nodes, tuple(self.log), meta)


def train_ladtree(table: RunTable, objective: str, params: LadTreeParams | None = None) -> TreeModel:
    """Grow an alternating decision tree for a categorical objective.

    Growth stops early if no prediction node admits a legal split.
    """
    params = params or LadTreeParams()
    obj = training_target(table, objective)
    builder = LadTreeBuilder(table.data, obj.values, obj.k, table.variables, params)
    while builder.iterations_done < params.iterations and builder.step():
        pass
    return builder.model(objective, obj.alphabet)
