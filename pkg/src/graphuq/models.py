"""Likelihood models: probit, Bayesian level-set and Ginzburg-Landau.

Each model exposes a misfit ``phi`` (negative log-likelihood, or for
Ginzburg-Landau the non-Gaussian part of the negative log-posterior), and
for the smooth models its gradient.  ``support`` lists the nodes ``phi``
depends on (``None`` meaning all of them), which the sampler uses to avoid
touching unobserved nodes.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .errors import ConfigError, DataError

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Labels:
    """Observed labels ``y(j)`` on the fidelity set with noise level ``gamma``."""

    nodes: np.ndarray
    values: np.ndarray
    gamma: float = 0.1

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.int64).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if nodes.size == 0:
            raise DataError("Z' nonempty required: no labelled nodes")
        if nodes.size != values.size:
            raise DataError(f"{nodes.size} nodes but {values.size} label values")
        if np.unique(nodes).size != nodes.size:
            raise DataError("labelled node indices must be unique")
        if np.any(nodes < 0):
            raise DataError("labelled node indices must be nonnegative")
        if not np.all(np.isfinite(values)):
            raise DataError("label values must be finite")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "gamma", float(self.gamma))

    def __len__(self):
        return self.nodes.size

    @property
    def is_binary(self):
        return bool(np.all(np.abs(self.values) == 1.0))

    def check(self, n_nodes):
        if self.nodes.max() >= n_nodes:
            raise DataError(
                f"labelled node index {int(self.nodes.max())} out of range for N={n_nodes}")
        return self

    def with_gamma(self, gamma):
        return Labels(self.nodes, self.values, gamma)


def threshold(u):
    """Sign map with ``S(0) = +1``."""
    return np.where(np.asarray(u) >= 0, 1, -1)


def double_well(v, epsilon):
    """``(v^2 - 1)^2 / (4 epsilon)``."""
    v = np.asarray(v, dtype=float)
    return (v * v - 1.0) ** 2 / (4.0 * epsilon)


def relaxed_threshold(u, epsilon):
    """Time-one value of the double-well gradient flow started at ``u``.

    ``s = v^2`` obeys a logistic equation, giving
    ``s(1) = s0 / (s0 + (1 - s0) exp(-2 / epsilon))``; the sign of ``u`` is kept.
    """
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    u = np.asarray(u, dtype=float)
    s0 = u * u
    decay = np.exp(-2.0 / epsilon)
    with np.errstate(invalid="ignore", divide="ignore"):
        s1 = np.where(s0 > 0, s0 / (s0 + (1.0 - s0) * decay), 0.0)
    return np.sign(u) * np.sqrt(s1)


def probit_cdf(v, gamma):
    """CDF of ``N(0, gamma^2)`` at ``v``."""
    if not gamma > 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    return ndtr(np.asarray(v, dtype=float) / gamma)


def log_probit_cdf(v, gamma):
    """``log Psi(v; gamma)``, accurate deep into the lower tail."""
    if not gamma > 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    return log_ndtr(np.asarray(v, dtype=float) / gamma)


def _inverse_mills(x, gamma):
    """``psi(x) / Psi(x)`` for the ``N(0, gamma^2)`` density and CDF."""
    t = x / gamma
    log_pdf = -0.5 * t * t - _LOG_SQRT_2PI - np.log(gamma)
    return np.exp(log_pdf - log_ndtr(t))


def _check_vector(u, n=None):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise DataError(f"expected a vector, got shape {u.shape}")
    if n is not None and u.size != n:
        raise DataError(f"vector of length {n} expected, got {u.size}")
    return u


def phi_probit(u, labels):
    """``-sum_j log Psi(y_j u_j; gamma)`` over labelled nodes."""
    u = _check_vector(u)
    y = labels.values
    return float(-np.sum(log_probit_cdf(y * u[labels.nodes], labels.gamma)))


def grad_phi_probit(u, labels):
    u = _check_vector(u)
    y = labels.values
    g = np.zeros_like(u)
    g[labels.nodes] = -y * _inverse_mills(y * u[labels.nodes], labels.gamma)
    return g


def phi_bls(u, labels):
    """``sum_j |y_j - S(u_j)|^2 / (2 gamma^2)`` over labelled nodes."""
    u = _check_vector(u)
    r = labels.values - threshold(u[labels.nodes])
    return float(np.sum(r * r) / (2.0 * labels.gamma ** 2))


def phi_gl(v, labels, epsilon):
    """Double-well mass on every node plus Gaussian misfit on labelled nodes."""
    v = _check_vector(v)
    r = labels.values - v[labels.nodes]
    return float(np.sum(double_well(v, epsilon)) + np.sum(r * r) / (2.0 * labels.gamma ** 2))


def grad_phi_gl(v, labels, epsilon):
    v = _check_vector(v)
    g = (v ** 3 - v) / epsilon
    g[labels.nodes] += (v[labels.nodes] - labels.values) / labels.gamma ** 2
    return g


class Model:
    """Base class; subclasses define ``phi_at`` on the values at ``support``."""

    kind = None
    differentiable = False

    def __init__(self, labels):
        self.labels = labels

    @property
    def support(self):
        return self.labels.nodes

    def phi_at(self, values):
        raise NotImplementedError

    def phi(self, u):
        u = _check_vector(u)
        return self.phi_at(u if self.support is None else u[self.support])

    def gradient(self, u):
        raise ConfigError(f"the {self.kind} misfit is not differentiable")

    def check(self, n_nodes):
        self.labels.check(n_nodes)
        return self


class ProbitModel(Model):
    kind = "probit"
    differentiable = True

    def __init__(self, labels):
        if not labels.is_binary:
            raise DataError("probit labels must be in {-1, +1}")
        super().__init__(labels)

    def phi_at(self, values):
        return float(-np.sum(log_probit_cdf(self.labels.values * values, self.labels.gamma)))

    def gradient(self, u):
        return grad_phi_probit(u, self.labels)


class LevelSetModel(Model):
    kind = "bls"

    def __init__(self, labels):
        if not labels.is_binary:
            raise DataError("level-set labels must be in {-1, +1}")
        super().__init__(labels)

    def phi_at(self, values):
        r = self.labels.values - np.where(values >= 0, 1.0, -1.0)
        return float(np.sum(r * r) / (2.0 * self.labels.gamma ** 2))


class GinzburgLandauModel(Model):
    kind = "gl"
    differentiable = True

    def __init__(self, labels, epsilon):
        if epsilon is None or not epsilon > 0:
            raise ConfigError(f"Ginzburg-Landau needs epsilon > 0, got {epsilon}")
        super().__init__(labels)
        self.epsilon = float(epsilon)

    @property
    def support(self):
        return None

    def phi_at(self, values):
        return phi_gl(values, self.labels, self.epsilon)

    def gradient(self, u):
        return grad_phi_gl(u, self.labels, self.epsilon)


class NullModel(Model):
    """``phi == 0``: the posterior is the prior.  Used for checks and tuning tests."""

    kind = "null"
    differentiable = True

    def __init__(self):
        super().__init__(None)

    @property
    def support(self):
        return np.zeros(0, dtype=np.int64)

    def phi_at(self, values):
        return 0.0

    def gradient(self, u):
        return np.zeros_like(_check_vector(u))

    def check(self, n_nodes):
        return self


MODEL_KINDS = ("probit", "bls", "gl")


def make_model(kind, labels, epsilon=None):
    if kind == "probit":
        return ProbitModel(labels)
    if kind in ("bls", "level-set", "levelset"):
        return LevelSetModel(labels)
    if kind == "gl":
        return GinzburgLandauModel(labels, epsilon)
    raise ConfigError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def quadratic_term(w, spectrum, scale=None):
    """``<w, P w> / 2`` with ``P = L / c``, evaluated on the stored eigenpairs."""
    w = _check_vector(w, spectrum.n_nodes)
    if scale is None:
        scale = spectrum.scaling()
    coef = spectrum.eigenvectors.T @ w
    return 0.5 * float(np.sum(spectrum.eigenvalues * coef * coef)) / scale


def objective(w, model, spectrum, scale=None):
    """MAP objective ``J(w) = <w, P w> / 2 + phi(w)``."""
    return quadratic_term(w, spectrum, scale) + model.phi(w)
