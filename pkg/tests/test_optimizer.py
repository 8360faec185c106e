import numpy as np
import pytest

from graphuq import data
from graphuq.errors import ConfigError
from graphuq.models import GinzburgLandauModel, LevelSetModel, NullModel, ProbitModel
from graphuq.optimizer import FlowConfig, map_estimate


@pytest.fixture(scope="module")
def labels(moons_small):
    return data.subsample_labels(moons_small[0].truth, count=10, seed=0, gamma=0.1)


def test_null_misfit_decays_geometrically(moons_small):
    s = moons_small[3]
    u0 = s.eigenvectors[:, 1:] @ np.linspace(1, 2, s.m - 1)
    res = map_estimate(NullModel(), s, FlowConfig(step=0.5, max_iters=5, grad_tol=1e-300), u0=u0)
    c = s.scaling("projected")
    a0 = s.eigenvectors[:, 1:].T @ u0
    expected = s.eigenvectors[:, 1:] @ (a0 / (1 + 0.5 * s.eigenvalues[1:] / c) ** 5)
    np.testing.assert_allclose(res.u, expected, atol=1e-12)


def test_probit_descent_is_monotone(moons_small, labels):
    # small enough for the explicit half of the step to be a descent step
    res = map_estimate(ProbitModel(labels), moons_small[3],
                       FlowConfig(step=0.004, max_iters=3000))
    assert res.history[-1] < res.history[0]
    assert np.all(np.diff(res.history) <= 1e-12)


def test_probit_unique_minimum(moons_small, labels):
    s = moons_small[3].truncate(40)
    vals = [map_estimate(ProbitModel(labels), s, FlowConfig(seed=k, grad_tol=1e-10)).objective
            for k in range(3)]
    assert max(vals) - min(vals) <= 1e-6 * abs(min(vals))


def test_level_set_has_no_map(moons_small, labels):
    with pytest.raises(ConfigError, match="not attained"):
        map_estimate(LevelSetModel(labels), moons_small[3])


def test_gl_and_explicit_initial_state(moons_small, labels):
    s = moons_small[3].truncate(40)
    warm = map_estimate(ProbitModel(labels), s).u
    res = map_estimate(GinzburgLandauModel(labels.with_gamma(1.0), 1.0), s, u0=warm)
    assert res.converged and np.isfinite(res.objective)
    zero = map_estimate(GinzburgLandauModel(labels.with_gamma(1.0), 1.0), s,
                        FlowConfig(init="zero"))
    assert zero.converged


def test_flow_config_validation():
    with pytest.raises(ConfigError) as err:
        FlowConfig(step=-1, init="bogus")
    assert len(err.value.problems) == 2
    with pytest.raises(ConfigError):
        FlowConfig(max_iters=0)


def test_file_init_needs_state(moons_small):
    with pytest.raises(ConfigError, match="explicit initial state"):
        map_estimate(NullModel(), moons_small[3], FlowConfig(init="file"))
