"""Run tables: loading, validation, emission and objective discretization.

A run table holds one row per simulation run. Input variables are continuous
columns; objectives are either continuous (raw simulation output) or
categorical (class labels after binning).
"""

from __future__ import annotations

import csv
import logging
import math
import re
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DatasetError",
    "Objective",
    "RunTable",
    "DiscretizationSpec",
    "default_labels",
    "load_csv",
    "write_csv",
    "load_arff",
    "write_arff",
    "discretize_objective",
    "bin_values",
    "midpoint",
]

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "?", "na", "nan", "null"})
METHODS = ("equal-width", "equal-frequency", "explicit-thresholds")


class DatasetError(ValueError):
    """Raised for malformed input files or invalid table operations."""


def _readonly(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Objective:
    """One objective column.

    ``values`` holds floats for a continuous objective and 0-based class
    indices into ``alphabet`` for a categorical one.
    """

    name: str
    values: np.ndarray
    alphabet: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.alphabet is None:
            values = np.asarray(self.values, dtype=np.float64)
            if not np.all(np.isfinite(values)):
                raise DatasetError(f"objective {self.name!r} has missing or non-finite values")
        else:
            alphabet = tuple(str(a) for a in self.alphabet)
            if len(alphabet) < 2:
                raise DatasetError(f"objective {self.name!r}: class alphabet needs at least 2 labels")
            if len(set(alphabet)) != len(alphabet):
                raise DatasetError(f"objective {self.name!r}: duplicate class labels")
            object.__setattr__(self, "alphabet", alphabet)
            values = np.asarray(self.values, dtype=np.int64)
            if values.size and (values.min() < 0 or values.max() >= len(alphabet)):
                raise DatasetError(f"objective {self.name!r}: class index out of range")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def categorical(self) -> bool:
        return self.alphabet is not None

    @property
    def k(self) -> int:
        return len(self.alphabet) if self.alphabet is not None else 0

    def labels(self) -> list[str]:
        if self.alphabet is None:
            raise DatasetError(f"objective {self.name!r} is continuous")
        return [self.alphabet[i] for i in self.values]

    def same_as(self, other: "Objective") -> bool:
        return (
            self.name == other.name
            and self.alphabet == other.alphabet
            and self.values.dtype == other.values.dtype
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class RunTable:
    """Immutable matrix of simulation runs.

    Parameters
    ----------
    variables : sequence of str
        Names of the continuous input columns, in order.
    data : (n_runs, n_vars) array
        Variable values.
    objectives : sequence of Objective
        Objective columns, in order.
    meta : mapping, optional
        Free-form metadata (discretization records, source relation name).
    """

    variables: tuple[str, ...]
    data: np.ndarray
    objectives: tuple[Objective, ...]
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        variables = tuple(str(v) for v in self.variables)
        objectives = tuple(self.objectives)
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != len(variables):
            raise DatasetError(
                f"data shape {data.shape} does not match {len(variables)} variables"
            )
        if len(set(variables)) != len(variables):
            raise DatasetError("variable names must be unique")
        obj_names = [o.name for o in objectives]
        if len(set(obj_names)) != len(obj_names):
            raise DatasetError("objective names must be unique")
        clash = set(obj_names) & set(variables)
        if clash:
            raise DatasetError(f"names used as both variable and objective: {sorted(clash)}")
        n = data.shape[0]
        if n < 2:
            raise DatasetError(f"a run table needs at least 2 runs, got {n}")
        for o in objectives:
            if o.values.shape != (n,):
                raise DatasetError(f"objective {o.name!r} has {o.values.shape[0]} entries, expected {n}")
        if not np.all(np.isfinite(data)):
            raise DatasetError("variable columns contain missing or non-finite values")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "objectives", objectives)
        object.__setattr__(self, "data", _readonly(data))
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def n_runs(self) -> int:
        return self.data.shape[0]

    @property
    def n_vars(self) -> int:
        return self.data.shape[1]

    @property
    def objective_names(self) -> list[str]:
        return [o.name for o in self.objectives]

    def objective(self, name: str) -> Objective:
        for o in self.objectives:
            if o.name == name:
                return o
        raise DatasetError(f"objective {name!r} not found")

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.variables.index(name)]

    def replace_objective(self, objective: Objective, meta: Mapping | None = None) -> "RunTable":
        self.objective(objective.name)
        objectives = tuple(objective if o.name == objective.name else o for o in self.objectives)
        return RunTable(self.variables, self.data, objectives, self.meta if meta is None else meta)

    def subset_variables(self, names: Iterable[str]) -> "RunTable":
        """Keep only ``names``, in the table's original column order."""
        keep = set(names)
        unknown = keep - set(self.variables)
        if unknown:
            raise DatasetError(f"unknown variables: {sorted(unknown)}")
        idx = [i for i, v in enumerate(self.variables) if v in keep]
        return RunTable(
            tuple(self.variables[i] for i in idx), self.data[:, idx], self.objectives, self.meta
        )

    def subset_runs(self, rows: Sequence[int] | np.ndarray) -> "RunTable":
        rows = np.asarray(rows)
        objectives = tuple(Objective(o.name, o.values[rows], o.alphabet) for o in self.objectives)
        return RunTable(self.variables, self.data[rows], objectives, self.meta)

    def same_content(self, other: "RunTable") -> bool:
        """Compare names, values and alphabets; metadata is ignored."""
        return (
            self.variables == other.variables
            and np.array_equal(self.data, other.data)
            and len(self.objectives) == len(other.objectives)
            and all(a.same_as(b) for a, b in zip(self.objectives, other.objectives))
        )

    def __repr__(self):
        kinds = ", ".join(
            f"{o.name}:{'categorical' if o.categorical else 'continuous'}" for o in self.objectives
        )
        return f"RunTable(n_runs={self.n_runs}, n_vars={self.n_vars}, objectives=[{kinds}])"


# ---------------------------------------------------------------- CSV


def _parse_float(token: str) -> float | None:
    t = token.strip()
    if t.lower() in MISSING_TOKENS:
        return None
    try:
        value = float(t)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _is_missing(token: str) -> bool:
    return token.strip().lower() in MISSING_TOKENS


def load_csv(path, objective_names: Sequence[str]) -> RunTable:
    """Load a header-first CSV file.

    Columns listed in ``objective_names`` become objectives, every other column
    is a variable. An objective column whose tokens are all numeric is
    continuous; otherwise it is categorical with a sorted label alphabet.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DatasetError(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        dup = sorted({h for h in header if header.count(h) > 1})
        raise DatasetError(f"{path}: duplicate column names {dup}")
    missing = [o for o in objective_names if o not in header]
    if missing:
        raise DatasetError(f"{path}: objective columns not found: {missing}")
    body = rows[1:]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DatasetError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
    columns = {h: [row[i] for row in body] for i, h in enumerate(header)}

    variables = [h for h in header if h not in objective_names]
    data = np.empty((len(body), len(variables)))
    for j, name in enumerate(variables):
        for i, token in enumerate(columns[name]):
            value = _parse_float(token)
            if value is None:
                kind = "missing value" if _is_missing(token) else f"non-numeric token {token!r}"
                raise DatasetError(f"{path}:{i + 2}: {kind} in variable column {name!r}")
            data[i, j] = value

    objectives = [_objective_from_tokens(name, columns[name], path) for name in objective_names]
    return RunTable(tuple(variables), data, tuple(objectives), {"source": str(path)})


def _objective_from_tokens(name, tokens, path) -> Objective:
    for i, t in enumerate(tokens):
        if _is_missing(t):
            raise DatasetError(f"{path}:{i + 2}: missing value in objective column {name!r}")
    numeric = [_parse_float(t) for t in tokens]
    if all(v is not None for v in numeric):
        return Objective(name, np.array(numeric, dtype=np.float64))
    labels = [t.strip() for t in tokens]
    alphabet = tuple(sorted(set(labels)))
    if len(alphabet) < 2:
        # a single observed class still needs a 2-letter alphabet to be a classification target
        raise DatasetError(f"{path}: categorical objective {name!r} has a single class {alphabet}")
    index = {a: i for i, a in enumerate(alphabet)}
    return Objective(name, np.array([index[t] for t in labels]), alphabet)


def _format_value(v) -> str:
    return repr(float(v))


def write_csv(table: RunTable, path) -> Path:
    """Emit ``table`` as CSV: variables first, then objectives."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(table.variables) + table.objective_names)
        obj_cols = [o.labels() if o.categorical else [_format_value(v) for v in o.values]
                    for o in table.objectives]
        for i in range(table.n_runs):
            row = [_format_value(v) for v in table.data[i]]
            row += [col[i] for col in obj_cols]
            writer.writerow(row)
    return path


# ---------------------------------------------------------------- ARFF

_NAME = r"(?:'(?:[^'\\]|\\.)*'|\"(?:[^\"\\]|\\.)*\"|[^\s{]+)"
_ATTR_RE = re.compile(r"^@attribute\s+(" + _NAME + r")\s+(.+)$", re.IGNORECASE)


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return re.sub(r"\\(.)", r"\1", token[1:-1])
    return token


def _split_fields(line: str) -> list[str]:
    return [_unquote(f) for f in next(csv.reader([line], skipinitialspace=True, quotechar="'"))]


def _quote(name: str) -> str:
    if re.fullmatch(r"[A-Za-z0-9_.\-]+", name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def load_arff(path, objective_names: Sequence[str] | None = None) -> RunTable:
    """Load an ARFF file.

    Numeric attributes become variables and nominal attributes become
    categorical objectives, unless ``objective_names`` is given, in which case
    exactly those attributes are objectives (numeric ones stay continuous).
    """
    path = Path(path)
    relation = None
    attrs: list[tuple[str, tuple[str, ...] | None]] = []
    data_rows: list[tuple[int, list[str]]] = []
    in_data = False
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if in_data:
                data_rows.append((lineno, _split_fields(line)))
                continue
            low = line.lower()
            if low.startswith("@relation"):
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise DatasetError(f"{path}:{lineno}: malformed @relation")
                relation = _unquote(parts[1])
            elif low.startswith("@attribute"):
                m = _ATTR_RE.match(line)
                if not m:
                    raise DatasetError(f"{path}:{lineno}: malformed @attribute line")
                name, typ = _unquote(m.group(1)), m.group(2).strip()
                if typ.startswith("{"):
                    if not typ.endswith("}"):
                        raise DatasetError(f"{path}:{lineno}: unterminated nominal list")
                    values = tuple(v for v in _split_fields(typ[1:-1]))
                    if not values or any(v == "" for v in values) or len(set(values)) != len(values):
                        raise DatasetError(f"{path}:{lineno}: bad nominal list for {name!r}")
                    attrs.append((name, values))
                elif typ.lower() in ("numeric", "real", "integer"):
                    attrs.append((name, None))
                else:
                    raise DatasetError(f"{path}:{lineno}: unsupported attribute type {typ!r}")
            elif low.startswith("@data"):
                in_data = True
            else:
                raise DatasetError(f"{path}:{lineno}: unexpected header line {line!r}")
    if relation is None:
        raise DatasetError(f"{path}: missing @relation")
    if not attrs:
        raise DatasetError(f"{path}: no @attribute declarations")
    if not in_data:
        raise DatasetError(f"{path}: missing @data section")
    names = [a[0] for a in attrs]
    if len(set(names)) != len(names):
        raise DatasetError(f"{path}: duplicate attribute names")
    if objective_names is None:
        objective_names = [n for n, nominal in attrs if nominal is not None]
    else:
        unknown = [o for o in objective_names if o not in names]
        if unknown:
            raise DatasetError(f"{path}: objective attributes not found: {unknown}")

    cols: list[list] = [[] for _ in attrs]
    for lineno, fields in data_rows:
        if len(fields) != len(attrs):
            raise DatasetError(f"{path}:{lineno}: expected {len(attrs)} values, got {len(fields)}")
        for j, ((name, nominal), token) in enumerate(zip(attrs, fields)):
            if _is_missing(token) and token.strip() in ("?", ""):
                raise DatasetError(f"{path}:{lineno}: missing value for {name!r}")
            if nominal is None:
                value = _parse_float(token)
                if value is None:
                    raise DatasetError(f"{path}:{lineno}: non-numeric value {token!r} for {name!r}")
                cols[j].append(value)
            else:
                if token not in nominal:
                    raise DatasetError(
                        f"{path}:{lineno}: undeclared nominal value {token!r} for {name!r}"
                    )
                cols[j].append(nominal.index(token))

    variables, var_cols, objectives = [], [], []
    for (name, nominal), col in zip(attrs, cols):
        if name in objective_names:
            continue
        if nominal is not None:
            raise DatasetError(f"{path}: nominal attribute {name!r} cannot be an input variable")
        variables.append(name)
        var_cols.append(col)
    for oname in objective_names:
        j = names.index(oname)
        nominal = attrs[j][1]
        if nominal is None:
            objectives.append(Objective(oname, np.array(cols[j], dtype=np.float64)))
        else:
            objectives.append(Objective(oname, np.array(cols[j], dtype=np.int64), nominal))
    data = np.array(var_cols, dtype=np.float64).T.reshape(len(data_rows), len(variables))
    return RunTable(tuple(variables), data, tuple(objectives), {"relation": relation, "source": str(path)})


def write_arff(table: RunTable, path, relation: str | None = None) -> Path:
    path = Path(path)
    relation = relation or table.meta.get("relation", "runs")
    lines = [f"@relation {_quote(relation)}", ""]
    for v in table.variables:
        lines.append(f"@attribute {_quote(v)} numeric")
    for o in table.objectives:
        if o.categorical:
            lines.append(f"@attribute {_quote(o.name)} {{{','.join(_quote(a) for a in o.alphabet)}}}")
        else:
            lines.append(f"@attribute {_quote(o.name)} numeric")
    lines += ["", "@data"]
    for i in range(table.n_runs):
        fields = [_format_value(x) for x in table.data[i]]
        for o in table.objectives:
            fields.append(_quote(o.alphabet[o.values[i]]) if o.categorical else _format_value(o.values[i]))
        lines.append(",".join(fields))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------- discretization


def default_labels(k: int) -> tuple[str, ...]:
    """``a, b, c, ...``; past 26 classes, ``c26, c27, ...``."""
    letters = string.ascii_lowercase
    return tuple(letters[i] if i < 26 else f"c{i}" for i in range(k))


@dataclass(frozen=True)
class DiscretizationSpec:
    """How to bin a continuous objective into classes.

    ``method`` is one of ``equal-width``, ``equal-frequency`` (both need
    ``k``) or ``explicit-thresholds`` (needs ascending ``thresholds``).
    """

    method: str
    k: int | None = None
    thresholds: tuple[float, ...] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DatasetError(f"unknown discretization method {self.method!r}; expected one of {METHODS}")
        if self.method == "explicit-thresholds":
            if not self.thresholds:
                raise DatasetError("explicit-thresholds needs at least one threshold")
            t = tuple(float(x) for x in self.thresholds)
            if any(b <= a for a, b in zip(t, t[1:])):
                raise DatasetError("thresholds must be strictly ascending")
            object.__setattr__(self, "thresholds", t)
            if self.k is not None and self.k != len(t) + 1:
                raise DatasetError("k disagrees with the number of thresholds")
            object.__setattr__(self, "k", len(t) + 1)
        else:
            if self.thresholds is not None:
                raise DatasetError(f"{self.method} takes k, not thresholds")
            if self.k is None or int(self.k) != self.k or self.k < 2:
                raise DatasetError("k must be an integer >= 2")
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.k:
                raise DatasetError(f"{len(labels)} labels given for {self.k} bins")
            if len(set(labels)) != len(labels):
                raise DatasetError("labels must be unique")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_dict(cls, d: Mapping) -> "DiscretizationSpec":
        unknown = set(d) - {"method", "k", "thresholds", "labels"}
        if unknown:
            raise DatasetError(f"unknown discretization keys: {sorted(unknown)}")
        return cls(
            method=d["method"],
            k=d.get("k"),
            thresholds=tuple(d["thresholds"]) if d.get("thresholds") is not None else None,
            labels=tuple(d["labels"]) if d.get("labels") is not None else None,
        )

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "thresholds": list(self.thresholds) if self.thresholds else None,
            "labels": list(self.labels) if self.labels else None,
        }


def _cut_points(values: np.ndarray, spec: DiscretizationSpec) -> np.ndarray:
    if spec.method == "explicit-thresholds":
        return np.array(spec.thresholds)
    k = spec.k
    if spec.method == "equal-width":
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:
            raise DatasetError("all values identical: equal-width bins would have zero width")
        width = (hi - lo) / k
        return np.array([lo + i * width for i in range(1, k)])
    n = values.size
    if k > n:
        raise DatasetError(f"equal-frequency needs k <= n_runs ({k} > {n})")
    s = np.sort(values)
    cuts = []
    for i in range(1, k):
        c = (i * n) // k
        cuts.append(float(midpoint(s[c - 1], s[c])))
    return np.array(cuts)


def midpoint(lo, hi):
    """Cut point between ``lo < hi`` that keeps ``lo`` below and ``hi`` at or above.

    The arithmetic midpoint, except for neighbouring floats where it rounds
    down onto ``lo``; ``hi`` itself is returned then. Works elementwise on arrays.
    """
    lo, hi = np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64)
    m = 0.5 * (lo + hi)
    return np.where(m > lo, m, hi)


def bin_values(values, thresholds) -> np.ndarray:
    """Class index of each value: the number of thresholds ``<= value``.

    A value equal to a threshold goes to the upper bin.
    """
    return np.searchsorted(np.asarray(thresholds, dtype=float), np.asarray(values, dtype=float), side="right")


def discretize_objective(table: RunTable, objective: str, spec: DiscretizationSpec) -> RunTable:
    """Replace a continuous objective with class labels.

    The cut points actually used, and any empty-class warnings, are recorded
    under ``table.meta["discretization"][objective]``.
    """
    obj = table.objective(objective)
    if obj.categorical:
        raise DatasetError(f"objective {objective!r} is already categorical")
    cuts = _cut_points(obj.values, spec)
    codes = bin_values(obj.values, cuts)
    labels = spec.labels or default_labels(spec.k)
    warnings_ = []
    counts = np.bincount(codes, minlength=spec.k)
    for i, c in enumerate(counts):
        if c == 0:
            msg = f"class {labels[i]!r} of {objective!r} is empty"
            warnings_.append(msg)
            logger.warning(msg)
    meta = dict(table.meta)
    disc = dict(meta.get("discretization", {}))
    disc[objective] = {
        "method": spec.method,
        "thresholds": [float(c) for c in cuts],
        "labels": list(labels),
        "warnings": warnings_,
    }
    meta["discretization"] = disc
    return table.replace_objective(Objective(objective, codes, labels), meta)
