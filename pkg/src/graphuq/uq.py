"""Posterior summaries in label space."""

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .models import threshold


@dataclass(frozen=True)
class UQSummary:
    scores: np.ndarray
    node_variance: np.ndarray
    mean_variance: float
    hard_labels: np.ndarray
    uncertainty_order: np.ndarray
    raw_variance: np.ndarray | None = None


def posterior_label_mean(chain):
    """Confidence scores ``s_j`` from a chain result.

    For the latent-variable models this is ``2 P(u_j >= 0) - 1``; for
    Ginzburg-Landau the relaxed label ``v`` is averaged directly.
    """
    stats = chain.stats
    if stats.count == 0:
        raise DataError("chain holds no kept samples")
    if chain.model == "gl":
        return stats.mean
    return stats.sign_mean


def node_variance(chain):
    """Label variance per node, ``1 - E[S(u_j)]^2``.

    For Ginzburg-Landau the variance of ``S(v_j)`` is used so all models
    report on the same {-1, +1} scale.
    """
    if chain.stats.count == 0:
        raise DataError("chain holds no kept samples")
    return 1.0 - chain.stats.sign_mean ** 2


def mean_posterior_variance(scores):
    """Node-averaged ``1 - s_j^2``; equals 1 when every score is 0."""
    s = np.asarray(scores, dtype=float)
    return float(np.mean(1.0 - s * s))


def rank_by_uncertainty(scores):
    """Node indices ordered from least to most confident (``|s_j|`` ascending)."""
    return np.argsort(np.abs(np.asarray(scores, dtype=float)), kind="stable")


def uncertain_nodes(scores, theta=0.4):
    """Indices with ``|s_j| < theta``."""
    return np.flatnonzero(np.abs(np.asarray(scores, dtype=float)) < theta)


def classify(scores):
    return threshold(scores)


def accuracy(labels, truth):
    """Fraction of nodes where ``labels`` matches ``truth``."""
    labels, truth = np.asarray(labels), np.asarray(truth)
    if labels.shape != truth.shape:
        raise DataError(f"shape mismatch: {labels.shape} vs {truth.shape}")
    return float(np.mean(labels == truth))


def swap_invariant_accuracy(labels, truth):
    acc = accuracy(labels, truth)
    return max(acc, 1.0 - acc)


def summarize_stats(stats, model="probit"):
    """Summary from running sums; ``model`` selects the score definition."""
    if stats.count == 0:
        raise DataError("chain holds no kept samples")
    scores = stats.mean if model == "gl" else stats.sign_mean
    var = 1.0 - stats.sign_mean ** 2
    return UQSummary(
        scores=scores,
        node_variance=var,
        mean_variance=float(np.mean(var)),
        hard_labels=classify(scores),
        uncertainty_order=rank_by_uncertainty(scores),
        raw_variance=stats.variance if model == "gl" else None,
    )


def summarize(chain):
    return summarize_stats(chain.stats, chain.model)
