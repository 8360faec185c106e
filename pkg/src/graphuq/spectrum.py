"""Eigendecomposition of the normalized Laplacian and prior scaling constants."""

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .errors import ConfigError, GraphError, NumericalError

MODES = ("full", "projected", "approximated")
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Leading eigenpairs of ``L`` in ascending order.

    ``eigenvectors`` has one column per eigenvalue.  ``n_nodes`` is the
    ambient dimension N even when only ``m < N`` pairs are stored.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_nodes: int
    saturation: float | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        Q = np.asarray(self.eigenvectors, dtype=float)
        if Q.ndim != 2 or Q.shape != (self.n_nodes, lam.size):
            raise ConfigError(
                f"eigenvectors must be ({self.n_nodes}, {lam.size}), got {Q.shape}")
        if lam.size < 1:
            raise ConfigError("spectrum must hold at least one eigenpair")
        if np.any(np.diff(lam) < 0):
            raise ConfigError("eigenvalues must be sorted ascending")
        if self.saturation is not None and not self.saturation > 0:
            raise ConfigError(f"saturation level must be positive, got {self.saturation}")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", Q)

    @property
    def m(self):
        """Number of stored eigenpairs (the truncation level)."""
        return self.eigenvalues.size

    @property
    def is_full(self):
        return self.m == self.n_nodes

    def truncate(self, ell):
        if not 1 <= ell <= self.m:
            raise ConfigError(f"truncation level must be in [1, {self.m}], got {ell}")
        return replace(self, eigenvalues=self.eigenvalues[:ell],
                       eigenvectors=self.eigenvectors[:, :ell])

    def with_saturation(self, level):
        return replace(self, saturation=float(level))

    def scaling(self, mode=None):
        if mode is None:
            mode = "full" if self.is_full else "projected"
        return scaling_constant(self, mode)


def _fix_signs(Q):
    idx = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[idx, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return Q * signs


def eigendecompose(L, ell=None, method="dense"):
    """Smallest ``ell`` eigenpairs of ``L`` (all of them when ``ell`` is None).

    ``method="dense"`` uses LAPACK on a dense copy; ``method="lanczos"`` uses
    ARPACK on ``2I - L`` and is only sensible for ``ell`` much smaller than N.
    Eigenvector signs are fixed so the largest-magnitude entry is positive.
    """
    n = L.shape[0]
    if ell is None or ell == "full":
        ell = n
    ell = int(ell)
    if not 1 <= ell <= n:
        raise ConfigError(f"ell must be in [1, {n}], got {ell}")

    if method == "dense":
        Ld = L.toarray() if sparse.issparse(L) else np.asarray(L, dtype=float)
        if ell == n:
            lam, Q = scipy.linalg.eigh(Ld, driver="evd")
        else:
            lam, Q = scipy.linalg.eigh(Ld, subset_by_index=[0, ell - 1])
    elif method == "lanczos":
        if ell >= n - 1:
            return eigendecompose(L, ell, method="dense")
        shifted = splinalg.aslinearoperator(L)
        op = splinalg.LinearOperator(
            (n, n), matvec=lambda x: 2.0 * x - shifted.matvec(x), dtype=float)
        mu, Q = splinalg.eigsh(op, k=ell, which="LA", tol=1e-12)
        lam = 2.0 - mu
        order = np.argsort(lam, kind="stable")
        lam, Q = lam[order], Q[:, order]
    else:
        raise ConfigError(f"unknown eigensolver method {method!r}")

    Q = _fix_signs(Q)
    resid = np.linalg.norm(L @ Q - Q * lam, axis=0)
    worst = float(resid.max())
    if not np.isfinite(worst) or worst > RESIDUAL_TOL * max(1.0, float(np.abs(lam).max())):
        raise NumericalError(
            f"eigensolver did not converge: max residual {worst:.3e} "
            f"(eigenpair {int(resid.argmax())})",
            state={"residuals": resid})

    # Clamp round-off on the null eigenvalue so downstream checks see exact zero.
    if abs(lam[0]) < 1e-10 * max(1.0, abs(lam[-1])):
        lam = lam.copy()
        lam[0] = 0.0
    if ell >= 2 and lam[1] <= 1e-10 * max(1.0, abs(lam[-1])):
        raise GraphError("second eigenvalue vanishes: graph not connected")
    return LaplacianSpectrum(lam, Q, n)


def scaling_constant(spectrum, mode="full"):
    """Scale ``c`` making the prior's per-node variance equal one on average.

    * ``full``: ``N / sum_{j>=1} 1/lambda_j`` over all N-1 nonzero eigenvalues.
    * ``projected``: same sum truncated at the stored level.
    * ``approximated``: tail eigenvalues ``j >= m`` replaced by the saturation
      level, contributing ``(N - m) / saturation``.
    """
    lam = spectrum.eigenvalues
    if lam.size > 1 and lam[1] <= 0:
        raise GraphError("lambda_1 <= 0: graph is disconnected")
    head = float(np.sum(1.0 / lam[1:]))
    n, m = spectrum.n_nodes, spectrum.m
    if mode == "full":
        if m != n:
            raise ConfigError(f"full scaling needs all {n} eigenpairs, have {m}")
        total = head
    elif mode == "projected":
        total = head
    elif mode == "approximated":
        if spectrum.saturation is None:
            raise ConfigError("approximated scaling needs a saturation level")
        total = head + (n - m) / spectrum.saturation
    else:
        raise ConfigError(f"unknown prior mode {mode!r}; expected one of {MODES}")
    if total <= 0:
        raise ConfigError("scaling undefined: no nonzero eigenvalues retained")
    return n / total


def saturation_level(spectrum, ell):
    """Largest eigenvalue among the first ``ell`` eigenpairs."""
    if not 1 <= ell <= spectrum.m:
        raise ConfigError(f"ell must be in [1, {spectrum.m}], got {ell}")
    return float(np.max(spectrum.eigenvalues[:ell]))


def save_spectrum(spectrum, path):
    """Persist to ``.npz`` (bitwise) or ``.csv`` (eigenvalue row, then N rows)."""
    path = str(path)
    if path.endswith(".csv"):
        table = np.vstack([spectrum.eigenvalues[None, :], spectrum.eigenvectors])
        header = "" if spectrum.saturation is None else f"saturation={spectrum.saturation!r}"
        np.savetxt(path, table, delimiter=",", fmt="%.17g", header=header)
    else:
        sat = np.nan if spectrum.saturation is None else spectrum.saturation
        with open(path, "wb") as fh:
            np.savez(fh, eigenvalues=spectrum.eigenvalues,
                     eigenvectors=spectrum.eigenvectors,
                     n_nodes=spectrum.n_nodes, saturation=sat)


def load_spectrum(path):
    path = str(path)
    if path.endswith(".csv"):
        saturation = None
        with open(path) as fh:
            first = fh.readline()
        if first.startswith("# saturation="):
            saturation = float(first.split("=", 1)[1])
        table = np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#"))
        return LaplacianSpectrum(table[0], table[1:], table.shape[0] - 1, saturation)
    with np.load(path) as data:
        sat = float(data["saturation"])
        return LaplacianSpectrum(data["eigenvalues"], data["eigenvectors"],
                                 int(data["n_nodes"]), None if np.isnan(sat) else sat)
