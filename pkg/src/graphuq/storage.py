"""On-disk formats for graphs, chains and summaries.

Raw chains are little-endian: an 8-byte magic, then ``N``, ``M`` and the seed
as unsigned 64-bit integers, then ``M x N`` float64 values in row-major order.
"""

import json
import struct

import numpy as np
from scipy import sparse

from .errors import DataError

CHAIN_MAGIC = b"GUQCHAIN"
_HEADER = struct.Struct("<8sQQQ")


def save_weights(path, graph):
    """Dense CSV for dense graphs; ``i,j,w`` coordinate lines for sparse ones."""
    W = graph.weights
    if sparse.issparse(W):
        coo = W.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# n_nodes={W.shape[0]}\n")
            for i, j, w in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{i},{j},{float(w)!r}\n")
    else:
        np.savetxt(path, W, delimiter=",", fmt="%.17g")


def load_weights(path):
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("# n_nodes="):
        n = int(first.split("=", 1)[1])
        table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        rows, cols = table[:, 0].astype(int), table[:, 1].astype(int)
        if rows.size and (rows.max() >= n or cols.max() >= n or min(rows.min(), cols.min()) < 0):
            raise DataError(f"{path}: coordinate index out of range for N={n}")
        return sparse.csr_matrix((table[:, 2], (rows, cols)), shape=(n, n))
    return np.loadtxt(path, delimiter=",", ndmin=2)


def save_chain(path, samples, seed=0):
    samples = np.ascontiguousarray(samples, dtype="<f8")
    if samples.ndim != 2:
        raise DataError("chain samples must be an M x N array")
    m, n = samples.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CHAIN_MAGIC, n, m, int(seed) & (2 ** 64 - 1)))
        fh.write(samples.tobytes(order="C"))


def load_chain(path):
    """Return ``(samples, seed)`` from a raw chain file."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DataError(f"{path}: truncated chain header")
        magic, n, m, seed = _HEADER.unpack(head)
        if magic != CHAIN_MAGIC:
            raise DataError(f"{path}: not a chain file (bad magic)")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * m:
        raise DataError(f"{path}: expected {n * m} values, found {data.size}")
    return data.reshape(m, n).astype(float), seed


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, payload):
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def chain_summary_payload(chain, summary):
    return {
        "model": chain.model,
        "seed": chain.seed,
        "n_nodes": chain.n_nodes,
        "n_iterations": chain.n_iterations,
        "burn_in": chain.burn_in,
        "n_kept": chain.n_kept,
        "beta": chain.beta,
        "acceptance_rate": chain.acceptance_rate,
        "converged_at": chain.converged_at,
        "mean_variance": summary.mean_variance,
        "scores": summary.scores,
        "node_variance": summary.node_variance,
    }


def write_summary_csv(path, summary):
    with open(path, "w", newline="\n") as fh:
        fh.write("node,score,variance,hard_label\n")
        for j, (s, v, h) in enumerate(zip(summary.scores, summary.node_variance,
                                          summary.hard_labels)):
            fh.write(f"{j},{float(s)!r},{float(v)!r},{int(h)}\n")


def read_summary_csv(path):
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {"scores": table[:, 1], "node_variance": table[:, 2],
            "hard_labels": table[:, 3].astype(int)}
