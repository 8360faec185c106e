import numpy as np
import pytest

from graphuq import uq
from graphuq.sampler import ChainStats


def test_scores_and_variance():
    U = np.array([[1.0, -1.0, 0.0], [2.0, 1.0, -3.0], [0.5, -2.0, 1.0], [3.0, 4.0, -1.0]])
    stats = ChainStats.from_samples(U)
    summary = uq.summarize_stats(stats, "probit")
    np.testing.assert_array_equal(summary.scores, [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(summary.node_variance, 1 - summary.scores ** 2)
    gl = uq.summarize_stats(stats, "gl")
    np.testing.assert_allclose(gl.scores, U.mean(axis=0))
    assert gl.raw_variance is not None


def test_mean_posterior_variance():
    assert uq.mean_posterior_variance(np.zeros(7)) == 1.0
    assert uq.mean_posterior_variance(np.array([1.0, -1.0, 1.0])) == 0.0


def test_ranking_and_filter():
    s = np.array([0.9, -0.1, 0.5])
    np.testing.assert_array_equal(uq.rank_by_uncertainty(s) + 1, [2, 3, 1])
    np.testing.assert_array_equal(uq.uncertain_nodes(s, 0.4), [1])
    np.testing.assert_array_equal(uq.rank_by_uncertainty(np.array([0.3, -0.3, 0.3])), [0, 1, 2])


def test_accuracy():
    truth = np.array([1, -1, 1, 1, -1])
    assert uq.accuracy(uq.classify(truth.astype(float)), truth) == 1.0
    assert uq.accuracy(-truth, truth) == 0.0
    assert uq.swap_invariant_accuracy(-truth, truth) == 1.0
    r = np.random.default_rng(0)
    big = np.repeat([1, -1], 5000)
    assert uq.accuracy(uq.classify(r.standard_normal(10_000)), big) == pytest.approx(0.5, abs=0.02)
