import numpy as np
import pytest

from graphuq import spectrum
from graphuq.errors import ConfigError
from graphuq.prior import PriorSampler, pcn_proposal
from graphuq.spectrum import LaplacianSpectrum


@pytest.mark.parametrize("mode,ell", [("full", None), ("projected", 30), ("approximated", 30)])
def test_mean_energy_is_one(moons_small, rng, mode, ell):
    p = PriorSampler(moons_small[3], mode, ell)
    U = p.sample(rng, 10_000)
    assert np.mean(np.sum(U * U, axis=1)) / p.n_nodes == pytest.approx(1.0, abs=0.02)


def test_support_and_truncation(moons_small, rng):
    s = moons_small[3]
    Q = s.eigenvectors
    U = PriorSampler(s, "full").sample(rng, 50)
    assert np.abs(U @ Q[:, 0]).max() < 1e-10
    U = PriorSampler(s, "projected", 20).sample(rng, 50)
    assert np.abs(U @ Q[:, 20:]).max() < 1e-10
    U = PriorSampler(s, "approximated", 20).sample(rng, 50)
    assert np.abs(U @ Q[:, 0]).max() < 1e-10


def test_coefficient_variances(moons_small, rng):
    s = moons_small[3]
    p = PriorSampler(s, "full")
    U = p.sample(rng, 20_000)
    coef = U @ s.eigenvectors[:, 1:3]
    expected = p.scale / s.eigenvalues[1:3]
    np.testing.assert_allclose(coef.var(axis=0), expected, rtol=0.05)


def test_projected_at_full_level_equals_full(moons_small):
    s = moons_small[3]
    a = PriorSampler(s, "full").sample(np.random.default_rng(1), 3)
    b = PriorSampler(s, "projected", s.m).sample(np.random.default_rng(1), 3)
    np.testing.assert_array_equal(a, b)


def test_tail_orthogonal_to_head(moons_small, rng):
    s = moons_small[3]
    p = PriorSampler(s, "approximated", 10)
    z = p.draw_latent(rng, 20)
    z[:, :p.latent_dim - p.n_nodes] = 0.0  # keep only the tail part
    U = p.to_nodes(z)
    assert np.abs(U @ s.eigenvectors[:, :10]).max() < 1e-10


def test_flat_spectrum_degenerate_case(rng):
    n = 6
    Q = np.linalg.qr(np.random.default_rng(0).standard_normal((n, n)))[0]
    lam = np.r_[0.0, np.full(n - 1, 0.8)]
    s = LaplacianSpectrum(lam, Q, n)
    p = PriorSampler(s.truncate(1), "approximated", saturation=0.8)
    assert p.scale == pytest.approx(n / ((n - 1) / 0.8))
    C = p.covariance()
    P = np.eye(n) - np.outer(Q[:, 0], Q[:, 0])
    np.testing.assert_allclose(C, p.scale / 0.8 * P, atol=1e-12)
    assert np.trace(C) == pytest.approx(n)


def test_per_node_variance_approximated(moons_small, rng):
    p = PriorSampler(moons_small[3], "approximated", 15)
    U = p.sample(rng, 10_000)
    assert np.mean(U.var(axis=0)) == pytest.approx(1.0, abs=0.02)


def test_covariance_matches_samples(moons_small, rng):
    p = PriorSampler(moons_small[3], "projected", 8)
    U = p.sample(rng, 40_000)
    C = p.covariance()
    assert np.abs(np.cov(U.T, bias=True) - C).max() < 0.1


def test_proposal_edge_cases(moons_small):
    p = PriorSampler(moons_small[3], "full")
    u = p.sample(np.random.default_rng(0))
    np.testing.assert_array_equal(pcn_proposal(u, 0.0, p, np.random.default_rng(1)), u)
    w = pcn_proposal(u, 1.0, p, np.random.default_rng(1))
    np.testing.assert_allclose(w, p.sample(np.random.default_rng(1)))
    with pytest.raises(ConfigError):
        pcn_proposal(u, 1.5, p, np.random.default_rng(1))


def test_proposal_preserves_prior(moons_small, rng):
    p = PriorSampler(moons_small[3], "projected", 6)
    U = p.sample(rng, 10_000)
    W = np.array([pcn_proposal(u, 0.4, p, rng) for u in U])
    C = p.covariance()
    assert np.abs(np.cov(W.T, bias=True) - C).max() < 0.12


def test_invalid_modes(moons_small):
    s = moons_small[3]
    with pytest.raises(ConfigError):
        PriorSampler(s, "nope")
    with pytest.raises(ConfigError):
        PriorSampler(s.truncate(5), "full")
    assert PriorSampler(s, "approximated", 12).spectrum.saturation == \
        spectrum.saturation_level(s, 12)
