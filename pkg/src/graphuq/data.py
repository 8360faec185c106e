"""Synthetic data, label subsampling and CSV ingestion."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .models import Labels


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    truth: np.ndarray | None = None
    observed: Labels | None = None

    @property
    def n_nodes(self):
        return self.features.shape[0]


def two_moons(n=2000, dim=100, sigma=0.06, seed=0):
    """Two interleaved half circles of radius one embedded in ``R^dim``.

    The first ``ceil(n/2)`` points lie on the upper half circle centred at
    (0, 0) and get truth label +1; the rest lie on the lower half circle
    centred at (1, 0.5) with label -1.  Angles are uniform, and i.i.d.
    ``N(0, sigma^2)`` noise is added to all ``dim`` coordinates.
    """
    if dim < 2:
        raise ConfigError(f"dim must be at least 2, got {dim}")
    if sigma < 0:
        raise ConfigError(f"sigma must be nonnegative, got {sigma}")
    if n < 2:
        raise ConfigError(f"n must be at least 2, got {n}")
    rng = np.random.default_rng(seed)
    n1 = (n + 1) // 2
    n2 = n - n1
    t1 = rng.uniform(0.0, np.pi, n1)
    t2 = rng.uniform(0.0, np.pi, n2)
    X = np.zeros((n, dim))
    X[:n1, 0] = np.cos(t1)
    X[:n1, 1] = np.sin(t1)
    X[n1:, 0] = 1.0 - np.cos(t2)
    X[n1:, 1] = 0.5 - np.sin(t2)
    if sigma > 0:
        X += sigma * rng.standard_normal((n, dim))
    truth = np.concatenate([np.ones(n1, dtype=int), -np.ones(n2, dtype=int)])
    return LabeledDataset(X, truth)


def two_clusters(n=435, dim=16, separation=1.0, seed=0):
    """Two Gaussian blobs in ``R^dim``, a stand-in for small fully connected studies."""
    rng = np.random.default_rng(seed)
    n1 = (n + 1) // 2
    centre = np.zeros(dim)
    centre[0] = separation
    X = rng.standard_normal((n, dim))
    X[:n1] += centre
    X[n1:] -= centre
    truth = np.concatenate([np.ones(n1, dtype=int), -np.ones(n - n1, dtype=int)])
    return LabeledDataset(X, truth)


def subsample_labels(truth, fraction=None, count=None, per_class=None, flip=0.0,
                     gamma=0.1, seed=0):
    """Pick labelled nodes uniformly without replacement and read off their labels.

    Exactly one of ``fraction``, ``count`` or ``per_class`` selects the set
    size; ``per_class`` maps a class label to its quota.  Each observed label
    is flipped independently with probability ``flip``.
    """
    truth = np.asarray(truth)
    n = truth.size
    given = sum(x is not None for x in (fraction, count, per_class))
    if given != 1:
        raise ConfigError("give exactly one of fraction, count or per_class")
    if not 0.0 <= flip <= 1.0:
        raise ConfigError(f"flip probability must lie in [0, 1], got {flip}")
    rng = np.random.default_rng(seed)
    if per_class is not None:
        chosen = []
        for label, quota in sorted(per_class.items()):
            members = np.flatnonzero(truth == label)
            if quota > members.size:
                raise DataError(
                    f"quota {quota} for class {label} exceeds class size {members.size}")
            chosen.append(rng.choice(members, size=quota, replace=False))
        nodes = np.sort(np.concatenate(chosen))
    else:
        if fraction is not None:
            if not 0.0 < fraction <= 1.0:
                raise ConfigError(f"fraction must lie in (0, 1], got {fraction}")
            count = max(1, int(round(fraction * n)))
        if not 1 <= count <= n:
            raise ConfigError(f"label count must satisfy 1 <= J <= {n}, got {count}")
        nodes = np.sort(rng.choice(n, size=count, replace=False))
    values = truth[nodes].astype(float)
    if flip > 0:
        values = np.where(rng.random(nodes.size) < flip, -values, values)
    return Labels(nodes, values, gamma)


def _read_rows(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = [f.strip() for f in text.split(",")]
            try:
                rows.append((lineno, [float(f) for f in fields]))
            except ValueError:
                if not rows and lineno == 1:
                    continue  # header
                raise DataError(f"{path}:{lineno}: malformed row {text!r}") from None
    return rows


def load_features_csv(path):
    """Read an ``N x d`` feature matrix; an optional header line is skipped."""
    rows = _read_rows(path)
    if not rows:
        raise DataError(f"{path}: no feature rows")
    width = len(rows[0][1])
    for lineno, vals in rows:
        if len(vals) != width:
            raise DataError(f"{path}:{lineno}: expected {width} columns, got {len(vals)}")
    X = np.array([vals for _, vals in rows])
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite feature values")
    return X


def save_features_csv(path, X, header=None):
    np.savetxt(path, np.asarray(X, dtype=float), delimiter=",", fmt="%.17g",
               header=header or "", comments="")


def load_labels_csv(path, gamma=0.1, n_nodes=None):
    """Read ``node_index,label`` lines into :class:`~graphuq.models.Labels`."""
    rows = _read_rows(path)
    if not rows:
        raise DataError(f"{path}: Z' nonempty required: label file has no rows")
    nodes, values = [], []
    for lineno, vals in rows:
        if len(vals) != 2 or vals[0] != int(vals[0]):
            raise DataError(f"{path}:{lineno}: expected 'node_index,label'")
        idx = int(vals[0])
        if idx < 0 or (n_nodes is not None and idx >= n_nodes):
            raise DataError(f"{path}:{lineno}: node index {idx} out of range for N={n_nodes}")
        nodes.append(idx)
        values.append(vals[1])
    return Labels(np.array(nodes), np.array(values), gamma)


def save_labels_csv(path, labels):
    with open(path, "w", newline="\n") as fh:
        fh.write("node_index,label\n")
        for j, y in zip(labels.nodes, labels.values):
            fh.write(f"{j},{int(y) if y == int(y) else repr(float(y))}\n")


def load_truth_csv(path):
    """Read a single column of +-1 ground-truth labels."""
    rows = _read_rows(path)
    return np.array([int(v[0]) for _, v in rows])
