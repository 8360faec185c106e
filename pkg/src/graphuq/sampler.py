"""Preconditioned Crank-Nicolson Metropolis-Hastings for graph posteriors.

One driver covers the full, spectrally projected and spectrally approximated
priors; the difference lives entirely in the :class:`~graphuq.prior.PriorSampler`.

The chain is advanced in the prior's latent coordinates: a proposal
``w = rho u + beta xi`` with ``xi = B z`` is accepted as ``a <- rho a + beta z``.
Only the node values the misfit reads (the labelled nodes for probit and
level-set) are formed at every step.  Full node vectors are rebuilt in
batches for the distinct accepted states, weighted by how long the chain
stayed in each, which is what the label statistics need.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericalError

log = logging.getLogger(__name__)

STORE_LIMIT = 50_000_000
BETA_MIN, BETA_MAX = 1e-4, 1.0
TUNE_FACTOR = 1.1


@dataclass
class ChainConfig:
    """Settings for one pCN chain.

    ``n_samples`` is the total number of iterations M, of which the first
    ``burn_in`` (default M/10) are discarded from every summary.  With
    ``tune`` set, beta is adapted during burn-in only and then frozen.
    """

    beta: float = 0.3
    n_samples: int = 10_000
    burn_in: int | None = None
    seed: int = 0
    check_period: int = 5000
    tol: float = 1e-3
    tune: bool = False
    tune_target: float = 0.5
    tune_interval: int = 100
    stop_on_convergence: bool = False
    store_samples: bool | None = None
    block_size: int = 256

    def __post_init__(self):
        if self.burn_in is None:
            self.burn_in = self.n_samples // 10
        problems = self.problems()
        if problems:
            raise ConfigError("invalid chain config: " + "; ".join(problems), problems)

    def problems(self):
        out = []
        if not 0.0 <= self.beta <= 1.0:
            out.append(f"beta must lie in [0, 1], got {self.beta}")
        if self.n_samples < 1:
            out.append(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0 <= self.burn_in < self.n_samples:
            out.append(f"burn_in must satisfy 0 <= burn_in < n_samples, got {self.burn_in}")
        if self.check_period < 1:
            out.append(f"check_period must be >= 1, got {self.check_period}")
        if not self.tol > 0:
            out.append(f"tol must be positive, got {self.tol}")
        if not 0.0 < self.tune_target <= 1.0:
            out.append(f"tune_target must lie in (0, 1], got {self.tune_target}")
        if self.tune_interval < 1:
            out.append(f"tune_interval must be >= 1, got {self.tune_interval}")
        if self.block_size < 1:
            out.append(f"block_size must be >= 1, got {self.block_size}")
        return out


@dataclass
class ChainStats:
    """Mergeable running sums over kept samples."""

    count: int
    nonneg: np.ndarray
    total: np.ndarray
    total_sq: np.ndarray

    @classmethod
    def empty(cls, n_nodes):
        z = np.zeros(n_nodes)
        return cls(0, z.copy(), z.copy(), z.copy())

    @classmethod
    def from_samples(cls, samples):
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        stats = cls.empty(samples.shape[1])
        stats.update(samples, np.ones(samples.shape[0]))
        return stats

    def update(self, U, weights):
        weights = np.asarray(weights, dtype=float)
        self.count += int(weights.sum())
        self.nonneg += weights @ (U >= 0)
        self.total += weights @ U
        self.total_sq += weights @ (U * U)

    def merge(self, other):
        return ChainStats(self.count + other.count, self.nonneg + other.nonneg,
                          self.total + other.total, self.total_sq + other.total_sq)

    @property
    def mean(self):
        return self.total / self.count

    @property
    def sign_mean(self):
        """Posterior mean of ``S(u_j)`` with ``S(0) = +1``."""
        return 2.0 * self.nonneg / self.count - 1.0

    @property
    def variance(self):
        return np.maximum(self.total_sq / self.count - self.mean ** 2, 0.0)


@dataclass
class ChainResult:
    stats: ChainStats
    acceptance_rate: float
    beta: float
    n_iterations: int
    burn_in: int
    seed: int
    model: str
    converged_at: int | None = None
    checkpoints: list = field(default_factory=list)
    cumulative_means: list = field(default_factory=list)
    samples: np.ndarray | None = None

    @property
    def n_nodes(self):
        return self.stats.nonneg.size

    @property
    def n_kept(self):
        return self.stats.count


def convergence_check(current, previous, tol):
    """True when consecutive cumulative means are within ``tol`` (Euclidean)."""
    return bool(np.linalg.norm(np.asarray(current) - np.asarray(previous)) <= tol)


def _initial_state(prior, u0, rng):
    if u0 is None:
        return prior.draw_latent(rng), 0.0, np.zeros(prior.n_nodes)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (prior.n_nodes,) or not np.all(np.isfinite(u0)):
        raise ConfigError(f"initial state must be a finite vector of length {prior.n_nodes}")
    q0 = prior.spectrum.eigenvectors[:, 0]
    if abs(q0 @ u0) > 1e-8 * max(1.0, np.linalg.norm(u0)):
        raise ConfigError("initial state must be orthogonal to the null vector q_0")
    return np.zeros(prior.latent_dim), 1.0, u0


class _Recorder:
    """Turns (latent state, dwell count) pairs into node-space statistics."""

    def __init__(self, prior, base, store, flush_rows=256):
        self.prior = prior
        self.base = base
        self.stats = ChainStats.empty(prior.n_nodes)
        self.store = [] if store else None
        self.flush_rows = flush_rows
        self._lat, self._w0, self._mult = [], [], []
        self.sum_latent = np.zeros(prior.latent_dim)
        self.sum_w0 = 0.0

    def push(self, a, w0, mult):
        if mult == 0:
            return
        self._lat.append(a)
        self._w0.append(w0)
        self._mult.append(mult)
        self.sum_latent += mult * a
        self.sum_w0 += mult * w0
        if len(self._lat) >= self.flush_rows:
            self.flush()

    def flush(self):
        if not self._lat:
            return
        U = self.prior.to_nodes(np.array(self._lat))
        w0 = np.array(self._w0)
        if w0.any():
            U = U + np.outer(w0, self.base)
        mult = np.array(self._mult, dtype=float)
        self.stats.update(U, mult)
        if self.store is not None:
            self.store.append(np.repeat(U, self._mult, axis=0))
        self._lat, self._w0, self._mult = [], [], []

    def cumulative_mean(self, a, w0, pending, k):
        lat = self.sum_latent + pending * a
        return (self.prior.to_nodes(lat) + (self.sum_w0 + pending * w0) * self.base) / k


def pcn(model, prior, config, u0=None):
    """Run one pCN chain and return its :class:`ChainResult`.

    ``u0`` defaults to a fresh prior draw.  Acceptance uses
    ``min(1, exp(phi(u) - phi(w)))``; the rate reported is over kept samples
    (all iterations when nothing is kept).
    """
    n = prior.n_nodes
    model.check(n)
    seq = np.random.SeedSequence(config.seed)
    prop_seq, acc_seq = seq.spawn(2)
    rng_prop = np.random.default_rng(prop_seq)
    rng_acc = np.random.default_rng(acc_seq)

    M, burn = config.n_samples, config.burn_in
    kept = M - burn
    store = config.store_samples
    if store is None:
        store = n * kept <= STORE_LIMIT

    rows = model.support
    a, w0, base = _initial_state(prior, u0, rng_prop)
    u_rows = prior.to_nodes(a, rows)
    if w0:
        u_rows = u_rows + (base if rows is None else base[rows])
    phi_u = model.phi_at(u_rows)
    if not np.isfinite(phi_u):
        raise NumericalError(f"misfit at the initial state is {phi_u}", state={"phi": phi_u})

    rec = _Recorder(prior, base, store)
    beta = float(config.beta)
    rho = np.sqrt(1.0 - beta * beta)
    accepted_kept = accepted_total = 0
    window_acc = 0
    mult = 0
    checkpoints, cum_means = [], []
    converged_at = None
    T = config.check_period

    k = 0
    done = False
    while k < M and not done:
        B = min(config.block_size, M - k)
        Z = prior.draw_latent(rng_prop, B)
        Xi = prior.to_nodes(Z, rows)
        log_u = np.log(rng_acc.random(B))
        for i in range(B):
            w_rows = rho * u_rows + beta * Xi[i]
            phi_w = model.phi_at(w_rows)
            if not np.isfinite(phi_w):
                raise NumericalError(
                    f"non-finite misfit {phi_w} at iteration {k}",
                    state={"iteration": k, "phi_current": phi_u, "phi_proposal": phi_w,
                           "beta": beta, "proposal_support_values": w_rows})
            accept = phi_w <= phi_u or log_u[i] < phi_u - phi_w
            if accept:
                rec.push(a, w0, mult)
                mult = 0
                a = rho * a + beta * Z[i]
                w0 = rho * w0
                u_rows, phi_u = w_rows, phi_w
            k += 1
            accepted_total += accept
            if k > burn:
                mult += 1
                accepted_kept += accept
                n_kept = k - burn
                if n_kept % T == 0:
                    checkpoints.append(n_kept)
                    cum_means.append(rec.cumulative_mean(a, w0, mult, n_kept))
                    if (converged_at is None and len(cum_means) >= 2
                            and convergence_check(cum_means[-1], cum_means[-2], config.tol)):
                        converged_at = n_kept
                        if config.stop_on_convergence:
                            done = True
                            break
            else:
                window_acc += accept
                if config.tune and k % config.tune_interval == 0:
                    rate = window_acc / config.tune_interval
                    if rate > config.tune_target:
                        beta = min(beta * TUNE_FACTOR, BETA_MAX)
                    elif rate < config.tune_target:
                        beta = max(beta / TUNE_FACTOR, BETA_MIN)
                    rho = np.sqrt(1.0 - beta * beta)
                    window_acc = 0
    rec.push(a, w0, mult)
    rec.flush()

    n_kept = k - burn
    acc_rate = accepted_kept / n_kept if n_kept > 0 else accepted_total / k
    samples = np.concatenate(rec.store) if rec.store else None
    log.debug("chain seed=%d: %d iterations, acceptance %.3f, beta %.4g",
              config.seed, k, acc_rate, beta)
    return ChainResult(
        stats=rec.stats, acceptance_rate=acc_rate, beta=beta, n_iterations=k,
        burn_in=burn, seed=config.seed, model=model.kind, converged_at=converged_at,
        checkpoints=checkpoints, cumulative_means=cum_means, samples=samples)


def tune_beta(model, prior, config, u0=None):
    """Adapt beta over ``config.burn_in`` iterations and return the frozen value.

    Every ``tune_interval`` steps beta is multiplied by 1.1 when the windowed
    acceptance exceeds ``tune_target`` and divided by 1.1 when it falls
    short, clamped to ``[1e-4, 1]``.
    """
    if config.burn_in < config.tune_interval:
        raise ConfigError("burn_in must cover at least one tuning interval")
    cfg = replace(config, tune=True, n_samples=config.burn_in + 1, store_samples=False)
    return pcn(model, prior, cfg, u0).beta


def _chain_job(args):
    model, prior, config, u0 = args
    return pcn(model, prior, config, u0)


def chain_seeds(seed, n_chains):
    """Independent, reproducible per-chain seeds derived from one base seed."""
    children = np.random.SeedSequence(seed).spawn(n_chains)
    return [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]


def run_chains(model, prior, config, n_chains=1, jobs=1, u0=None):
    """Run independent chains and merge their statistics in chain order."""
    if n_chains == 1:
        return [pcn(model, prior, config, u0)]
    configs = [replace(config, seed=s) for s in chain_seeds(config.seed, n_chains)]
    args = [(model, prior, c, u0) for c in configs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_chain_job, args))
    return [_chain_job(x) for x in args]


def merge_stats(results):
    stats = results[0].stats
    for r in results[1:]:
        stats = stats.merge(r.stats)
    return stats
