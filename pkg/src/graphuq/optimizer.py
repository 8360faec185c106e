"""MAP estimation by a linearly-implicit gradient flow in the eigenbasis.

Each step takes an explicit gradient step on the misfit and an implicit step
on the quadratic prior term, which is diagonal in the eigenbasis:

    a_j <- (a_j - beta <grad phi(u), q_j>) / (1 + beta lambda_j / c)

for the coefficients ``a_j = <u, q_j>``, ``j = 1 .. m-1``.  Components outside
the retained eigenvectors are identically zero.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .prior import PriorSampler

log = logging.getLogger(__name__)

INIT_CHOICES = ("prior", "zero", "file", "probit-map")


@dataclass
class FlowConfig:
    """Settings for :func:`map_estimate`.

    ``grad_tol`` bounds the stationarity residual ``|P_m u + Pi_m grad phi(u)|``
    at termination, which in turn bounds the last step by ``step * grad_tol``.
    """

    step: float = 0.1
    max_iters: int = 20_000
    grad_tol: float = 1e-8
    init: str = "prior"
    seed: int = 0
    patience: int = 50
    max_halvings: int = 30

    def __post_init__(self):
        problems = []
        if not self.step > 0:
            problems.append(f"step must be positive, got {self.step}")
        if not self.grad_tol > 0:
            problems.append(f"grad_tol must be positive, got {self.grad_tol}")
        if self.max_iters < 1:
            problems.append(f"max_iters must be >= 1, got {self.max_iters}")
        if self.init not in INIT_CHOICES:
            problems.append(f"init must be one of {INIT_CHOICES}, got {self.init!r}")
        if problems:
            raise ConfigError("invalid flow config: " + "; ".join(problems), problems)


@dataclass
class MapResult:
    u: np.ndarray
    objective: float
    iterations: int
    converged: bool
    residual: float
    step: float
    history: np.ndarray


def map_estimate(model, spectrum, config=None, u0=None):
    """Minimise ``J(u) = <u, P_m u>/2 + phi(u)`` over span(q_1, ..., q_{m-1}).

    ``u0`` overrides ``config.init``; it is projected onto the retained
    eigenvectors.  If the objective rises for ``patience`` consecutive steps
    the step size is halved and the flow restarts from the best iterate.
    """
    config = config or FlowConfig()
    if model.kind == "bls":
        raise ConfigError(
            "the level-set model has no MAP estimator: its objective decreases "
            "along u -> t*u as t -> 0 but the infimum is not attained; sample it instead")
    if not model.differentiable:
        raise ConfigError(f"MAP estimation needs a differentiable misfit, not {model.kind!r}")
    model.check(spectrum.n_nodes)

    Q = spectrum.eigenvectors[:, 1:]
    if Q.shape[1] == 0:
        raise ConfigError("MAP estimation needs at least two eigenpairs")
    c = spectrum.scaling("projected")
    d = spectrum.eigenvalues[1:] / c

    if u0 is not None:
        u0 = np.asarray(u0, dtype=float)
        if u0.shape != (spectrum.n_nodes,):
            raise ConfigError(f"initial state must have length {spectrum.n_nodes}")
        a = Q.T @ u0
    elif config.init == "zero":
        a = np.zeros(Q.shape[1])
    elif config.init == "prior":
        rng = np.random.default_rng(config.seed)
        a = Q.T @ PriorSampler(spectrum, "projected").sample(rng)
    else:
        raise ConfigError(f"init={config.init!r} requires an explicit initial state")

    def evaluate(a):
        u = Q @ a
        return u, 0.5 * float(np.sum(d * a * a)) + model.phi(u)

    beta = config.step
    u, J = evaluate(a)
    best = (J, a)
    history = [J]
    rises = halvings = 0
    converged = False
    residual = np.inf
    it = 0
    while it < config.max_iters:
        g = Q.T @ model.gradient(u)
        residual = float(np.linalg.norm(d * a + g))
        if residual <= config.grad_tol:
            converged = True
            break
        a = (a - beta * g) / (1.0 + beta * d)
        u, J_new = evaluate(a)
        it += 1
        if not np.isfinite(J_new):
            raise NumericalError(f"objective became {J_new} at iteration {it}; reduce the step",
                                 state={"iteration": it, "step": beta})
        rises = rises + 1 if J_new > J else 0
        J = J_new
        history.append(J)
        if J < best[0]:
            best = (J, a)
        if rises >= config.patience:
            halvings += 1
            if halvings > config.max_halvings:
                raise NumericalError(
                    f"gradient flow diverging after {halvings - 1} step halvings; "
                    "use a smaller step", state={"iteration": it, "step": beta})
            beta *= 0.5
            log.info("objective rose %d times in a row; halving step to %.3g", rises, beta)
            J, a = best
            u, J = evaluate(a)
            rises = 0
    return MapResult(u=u, objective=J, iterations=it, converged=converged,
                     residual=residual, step=beta, history=np.array(history))
