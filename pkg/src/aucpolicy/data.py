"""Dataset containers, CSV I/O, splitting and feature standardization.

Two record layouts are supported. Full-information data pairs every context
with its true class; bandit data carries the displayed arm, the binary reward
and the logging propensity. Arms are 0-based everywhere in code.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

FULL = "full"
BANDIT = "bandit"

Column = Union[str, int]


class DataError(ValueError):
    """Raised for malformed, inconsistent or unreadable data."""


class SupervisedRecord(NamedTuple):
    context: np.ndarray
    label: int


class BanditRecord(NamedTuple):
    context: np.ndarray
    action: int
    reward: int
    propensity: float


@dataclass(frozen=True)
class Schema:
    """Column layout of a CSV file.

    Columns are given by header name, or by 0-based position when the file
    has no header. Any column not named here is a numeric feature. Setting
    ``label`` selects the full-information layout, otherwise the bandit
    layout (``action``, ``reward`` and an optional ``propensity``) is used.
    """

    label: Optional[Column] = None
    action: Column = "action"
    reward: Column = "reward"
    propensity: Optional[Column] = "propensity"
    header: bool = True
    num_arms: Optional[int] = None
    delimiter: str = ","

    @property
    def kind(self) -> str:
        return FULL if self.label is not None else BANDIT

    @classmethod
    def full(cls, label: Column = "label", **kw) -> "Schema":
        return cls(label=label, **kw)

    @classmethod
    def bandit(cls, **kw) -> "Schema":
        return cls(label=None, **kw)

    @classmethod
    def parse(cls, text: str) -> "Schema":
        """Parse a compact descriptor such as ``full:label=label`` or
        ``bandit:action=a,reward=r,propensity=p,num_arms=5``."""
        kind, _, rest = text.partition(":")
        kind = kind.strip().lower()
        if kind not in (FULL, BANDIT):
            raise DataError(f"schema kind must be 'full' or 'bandit', got {kind!r}")
        kw = {}
        for part in filter(None, (p.strip() for p in rest.split(","))):
            key, _, value = part.partition("=")
            key = key.strip()
            if key == "num_arms":
                kw[key] = int(value)
            elif key == "header":
                kw[key] = value.strip().lower() in ("1", "true", "yes")
            elif key in ("label", "action", "reward", "propensity"):
                v = value.strip()
                kw[key] = None if v.lower() in ("", "none") else (int(v) if v.lstrip("-").isdigit() else v)
            else:
                raise DataError(f"unknown schema key {key!r}")
        if kind == FULL:
            kw.setdefault("label", "label")
        else:
            kw["label"] = None
        return cls(**kw)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable, validated collection of records sharing dimension ``d``.

    ``X`` holds the contexts row-wise. Full-information sets fill ``labels``;
    bandit sets fill ``actions``, ``rewards`` and ``propensities``.
    """

    X: np.ndarray
    num_arms: int
    kind: str = FULL
    labels: Optional[np.ndarray] = None
    actions: Optional[np.ndarray] = None
    rewards: Optional[np.ndarray] = None
    propensities: Optional[np.ndarray] = None
    arm_names: Optional[tuple] = None
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise DataError(f"contexts must be a 2-D array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            bad = int(np.argwhere(~np.isfinite(X))[0, 0])
            raise DataError(f"non-finite feature value in record {bad}")
        if self.num_arms < 1:
            raise DataError("num_arms must be positive")
        n = X.shape[0]
        object.__setattr__(self, "X", X)
        if self.kind == FULL:
            if self.labels is None:
                raise DataError("full-information data needs labels")
            labels = self._int_column(self.labels, n, "labels")
            object.__setattr__(self, "labels", labels)
        elif self.kind == BANDIT:
            if self.actions is None or self.rewards is None:
                raise DataError("bandit data needs actions and rewards")
            actions = self._int_column(self.actions, n, "actions")
            rewards = np.asarray(self.rewards)
            if rewards.shape != (n,) or not np.all((rewards == 0) | (rewards == 1)):
                raise DataError("rewards must be a length-n vector of 0/1")
            props = self.propensities
            props = (np.full(n, 1.0 / self.num_arms) if props is None
                     else np.asarray(props, dtype=np.float64))
            # zero marks an unlogged record; estimators refuse it
            if props.shape != (n,) or not np.all((props >= 0) & (props <= 1)):
                raise DataError("propensities must lie in [0, 1]")
            object.__setattr__(self, "actions", actions)
            object.__setattr__(self, "rewards", rewards.astype(np.int64))
            object.__setattr__(self, "propensities", props)
        else:
            raise DataError(f"unknown dataset kind {self.kind!r}")
        if self.arm_names is None:
            object.__setattr__(self, "arm_names", tuple(str(a) for a in range(self.num_arms)))
        elif len(self.arm_names) != self.num_arms:
            raise DataError("arm_names must have num_arms entries")
        if self.feature_names is None:
            object.__setattr__(self, "feature_names", tuple(f"f{j}" for j in range(X.shape[1])))
        for arr in (self.X, self.labels, self.actions, self.rewards, self.propensities):
            if arr is not None:
                arr.setflags(write=False)

    def _int_column(self, values, n, name):
        arr = np.asarray(values)
        if arr.shape != (n,):
            raise DataError(f"{name} must have one entry per record")
        if arr.size and (not np.all(arr == np.round(arr)) or arr.min() < 0 or arr.max() >= self.num_arms):
            raise DataError(f"{name} must be integers in [0, {self.num_arms})")
        return arr.astype(np.int64)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    @property
    def is_bandit(self) -> bool:
        return self.kind == BANDIT

    def __len__(self):
        return self.n

    def records(self) -> Iterator[Union[SupervisedRecord, BanditRecord]]:
        for i in range(self.n):
            if self.kind == FULL:
                yield SupervisedRecord(self.X[i], int(self.labels[i]))
            else:
                yield BanditRecord(self.X[i], int(self.actions[i]), int(self.rewards[i]),
                                   float(self.propensities[i]))

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        take = lambda a: None if a is None else a[idx]  # noqa: E731
        return replace(self, X=self.X[idx], labels=take(self.labels), actions=take(self.actions),
                       rewards=take(self.rewards), propensities=take(self.propensities))

    def with_features(self, X: np.ndarray, feature_names: Optional[Sequence[str]] = None) -> "Dataset":
        return replace(self, X=X, feature_names=None if feature_names is None else tuple(feature_names))

    def target(self) -> np.ndarray:
        """Label for full-information data, reward for bandit data."""
        return self.labels if self.kind == FULL else self.rewards

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.kind}:{self.num_arms}:{self.X.shape}".encode())
        for arr in (self.X, self.labels, self.actions, self.rewards, self.propensities):
            if arr is not None:
                h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()[:16]


def _resolve(col: Column, header: Optional[list], width: int, what: str) -> int:
    if isinstance(col, int):
        idx = col if col >= 0 else width + col
        if not 0 <= idx < width:
            raise DataError(f"{what} column index {col} out of range for {width} columns")
        return idx
    if header is None:
        raise DataError(f"{what} column {col!r} given by name but the file has no header")
    if col not in header:
        raise DataError(f"unknown {what} column {col!r}; columns are {header}")
    return header.index(col)


def _label_order(values):
    uniq = set(values)
    try:
        return sorted(uniq, key=float)
    except ValueError:
        return sorted(uniq)


def load_dataset(path, schema: Optional[Schema] = None) -> Dataset:
    """Read a CSV file into a validated :class:`Dataset`.

    Full-information labels are remapped to contiguous 0-based arm indices in
    sorted order; the original labels are kept in ``arm_names``. Bandit
    actions must already be 0-based arm indices. A missing propensity column
    means uniform logging, 1/K.
    """
    schema = schema or Schema.full()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh, delimiter=schema.delimiter))
                if r and any(c.strip() for c in r)]
    header = None
    if schema.header and rows:
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no records")
    width = len(header) if header is not None else len(rows[0][1])

    if schema.kind == FULL:
        special = {"label": _resolve(schema.label, header, width, "label")}
    else:
        special = {"action": _resolve(schema.action, header, width, "action"),
                   "reward": _resolve(schema.reward, header, width, "reward")}
        if schema.propensity is not None:
            try:
                special["propensity"] = _resolve(schema.propensity, header, width, "propensity")
            except DataError:
                if not isinstance(schema.propensity, str) or header is None:
                    raise
    feat_cols = [j for j in range(width) if j not in special.values()]
    if not feat_cols:
        raise DataError(f"{path}: no feature columns")

    X = np.empty((len(rows), len(feat_cols)))
    raw = {k: [] for k in special}
    for r, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
        try:
            X[r] = [float(row[j]) for j in feat_cols]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric feature value") from None
        if not np.all(np.isfinite(X[r])):
            raise DataError(f"{path}:{lineno}: non-finite feature value")
        for k, j in special.items():
            raw[k].append(row[j].strip())

    names = tuple(header[j] for j in feat_cols) if header is not None else None
    if schema.kind == FULL:
        order = _label_order(raw["label"])
        index = {lab: a for a, lab in enumerate(order)}
        if schema.num_arms is not None and schema.num_arms < len(order):
            raise DataError(f"{path}: {len(order)} distinct labels exceed num_arms={schema.num_arms}")
        K = schema.num_arms or len(order)
        arm_names = tuple(order) + tuple(f"unused{a}" for a in range(len(order), K))
        return Dataset(X, K, FULL, labels=np.array([index[v] for v in raw["label"]]),
                       arm_names=arm_names, feature_names=names)

    def numeric(key, cast):
        out = []
        for (lineno, _), v in zip(rows, raw[key]):
            try:
                out.append(cast(v))
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad {key} value {v!r}") from None
        return np.array(out)

    actions = numeric("action", int)
    rewards = numeric("reward", lambda v: int(float(v)))
    K = schema.num_arms or int(actions.max()) + 1
    props = numeric("propensity", float) if "propensity" in raw else None
    try:
        return Dataset(X, K, BANDIT, actions=actions, rewards=rewards, propensities=props,
                       feature_names=names)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_dataset(data: Dataset, path) -> None:
    """Write ``data`` as CSV with a header row; floats are written with ``repr``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if data.kind == FULL:
            w.writerow(list(data.feature_names) + ["label"])
            for x, a in zip(data.X, data.labels):
                w.writerow([repr(float(v)) for v in x] + [data.arm_names[a]])
        else:
            w.writerow(list(data.feature_names) + ["action", "reward", "propensity"])
            for x, a, r, p in zip(data.X, data.actions, data.rewards, data.propensities):
                w.writerow([repr(float(v)) for v in x] + [int(a), int(r), repr(float(p))])


def split_train_test(data: Dataset, train_fraction: float, seed: int):
    """Seeded uniform partition into ``ceil(n * train_fraction)`` and the rest."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if data.n == 0:
        raise DataError("cannot split an empty dataset")
    # rounding guards against e.g. 10 * 0.7 == 7.000000000000001
    n_train = math.ceil(round(data.n * train_fraction, 9))
    perm = np.random.default_rng(seed).permutation(data.n)
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


@dataclass
class Standardizer:
    """Per-feature z-score fitted on training contexts.

    Constant features get unit scale so they map to zero instead of NaN.
    """

    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: np.ndarray = field(default_factory=lambda: np.ones(0))

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def apply(self, data: Dataset) -> Dataset:
        return data.with_features(self.transform(data.X), data.feature_names)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["scale"], dtype=np.float64))
