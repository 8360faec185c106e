"""Graph-Gaussian prior N(0, C) with C = c Q diag(0, 1/lambda_1, ...) Q^T.

Samples are produced from a standard-normal *latent* vector through a fixed
linear map (the Karhunen-Loeve synthesis), which lets the pCN driver move in
latent space and only materialise node values it actually needs.
"""

import numpy as np

from .errors import ConfigError
from .spectrum import MODES, saturation_level


class PriorSampler:
    """Sampler for the full, spectrally projected or spectrally approximated prior.

    Parameters
    ----------
    spectrum : LaplacianSpectrum
        Eigenpairs of the normalized Laplacian.  ``mode="full"`` needs all N.
    mode : {"full", "projected", "approximated"}
    ell : int, optional
        Truncation level; the spectrum is cut to its first ``ell`` pairs.
    saturation : float, optional
        Tail eigenvalue used by ``"approximated"``.  Defaults to the
        spectrum's stored level, else the largest retained eigenvalue.
    """

    def __init__(self, spectrum, mode="full", ell=None, saturation=None):
        if mode not in MODES:
            raise ConfigError(f"unknown prior mode {mode!r}; expected one of {MODES}")
        if ell is not None:
            spectrum = spectrum.truncate(int(ell))
        if mode == "full" and not spectrum.is_full:
            raise ConfigError(
                f"full prior needs all {spectrum.n_nodes} eigenpairs, have {spectrum.m}")
        if mode == "approximated":
            if saturation is None:
                saturation = spectrum.saturation
            if saturation is None:
                saturation = saturation_level(spectrum, spectrum.m)
            spectrum = spectrum.with_saturation(saturation)
        self.spectrum = spectrum
        self.mode = mode
        self.scale = spectrum.scaling(mode)

        lam = spectrum.eigenvalues[1:]
        self._basis = spectrum.eigenvectors[:, 1:]
        self._coef_std = np.sqrt(self.scale / lam)
        self._head_dim = lam.size
        self._tail_std = 0.0
        if mode == "approximated":
            self._tail_std = np.sqrt(self.scale / spectrum.saturation)

    @property
    def n_nodes(self):
        return self.spectrum.n_nodes

    @property
    def latent_dim(self):
        """Length of the standard-normal vector consumed per sample."""
        if self.mode == "approximated":
            return self._head_dim + self.n_nodes
        return self._head_dim

    @property
    def coefficient_variances(self):
        """Prior variance ``c / lambda_j`` of ``<u, q_j>`` for ``j = 1..m-1``."""
        return self._coef_std ** 2

    def draw_latent(self, rng, size=None):
        shape = (self.latent_dim,) if size is None else (size, self.latent_dim)
        return rng.standard_normal(shape)

    def to_nodes(self, z, rows=None):
        """Map latent vector(s) ``z`` to node values (optionally only ``rows``)."""
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        Z = np.atleast_2d(z)
        Qh = self._basis if rows is None else self._basis[rows]
        out = (Z[:, :self._head_dim] * self._coef_std) @ Qh.T
        if self.mode == "approximated":
            zbar = Z[:, self._head_dim:]
            # Project white noise off span(q_0, ..., q_{m-1}) so samples stay in U.
            Q = self.spectrum.eigenvectors
            Qr = Q if rows is None else Q[rows]
            zr = zbar if rows is None else zbar[:, rows]
            out = out + self._tail_std * (zr - (zbar @ Q) @ Qr.T)
        return out[0] if single else out

    def sample(self, rng, size=None):
        """Draw prior sample(s); shape ``(N,)`` or ``(size, N)``."""
        return self.to_nodes(self.draw_latent(rng, size))

    def covariance(self):
        """Dense covariance matrix of the sampled Gaussian (testing aid)."""
        Q = self._basis
        C = (Q * self._coef_std ** 2) @ Q.T
        if self.mode == "approximated":
            Qa = self.spectrum.eigenvectors
            C = C + self._tail_std ** 2 * (np.eye(self.n_nodes) - Qa @ Qa.T)
        return C


def pcn_proposal(u, beta, sampler, rng):
    """Crank-Nicolson move ``sqrt(1 - beta^2) u + beta xi`` with ``xi`` a prior draw."""
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta must lie in [0, 1], got {beta}")
    xi = sampler.sample(rng)
    return np.sqrt(1.0 - beta * beta) * np.asarray(u, dtype=float) + beta * xi
