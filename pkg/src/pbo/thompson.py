"""Continuous approximate posterior samples via random Fourier features.

A finite trigonometric basis whose frequencies are drawn from the spectral
measure of the squared-exponential kernel approximates draws from the GP.
A posterior sample is built in two stages: draw a joint Gaussian sample of
the latent at the training duels from the Laplace posterior, then ridge-fit
basis weights so the continuous path interpolates that draw.  With no
observations the weights are drawn from the standard normal prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky

from .gp import KernelParams, LaplacePosterior
from .numerics import sigmoid

RIDGE_LAMBDA = 1e-6
DEFAULT_FEATURES = 500


class PathSampleError(RuntimeError):
    pass


@dataclass(frozen=True)
class FourierBasis:
    """Random cosine features matching the SE kernel's spectral measure."""

    frequencies: np.ndarray  # (F, 2q), rows ~ N(0, diag(1/lengthscale^2))
    phases: np.ndarray       # (F,) uniform on [0, 2pi)
    amplitude: float         # sqrt(2 * signal_variance / F)
    seed: int | None = None

    @property
    def n_features(self) -> int:
        return self.frequencies.shape[0]

    def features(self, Z: np.ndarray) -> np.ndarray:
        """Feature matrix (m, F) at duel vectors Z (m, 2q)."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return self.amplitude * np.cos(Z @ self.frequencies.T + self.phases)


def sample_basis(params: KernelParams, n_features: int, rng) -> FourierBasis:
    """Draw a Fourier basis; deterministic given the stream state and params."""
    if n_features < 1:
        raise ValueError("need at least one feature")
    seed = None
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    freqs = rng.normal(size=(n_features, params.lengthscales.size)) / params.lengthscales
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_features)
    amplitude = float(np.sqrt(2.0 * params.signal_variance / n_features))
    return FourierBasis(freqs, phases, amplitude, seed)


@dataclass(frozen=True)
class SampledPath:
    """One continuous sample of the latent duel reward."""

    basis: FourierBasis
    weights: np.ndarray  # (F,)

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        return self.basis.features(Z) @ self.weights

    def pair_values(self, cand: np.ndarray, land: np.ndarray) -> np.ndarray:
        """Path values at all duels [cand_i, land_j] as a (G, M) matrix.

        cos(u + v) = cos u cos v - sin u sin v lets the G x M evaluation run
        as two rank-F matrix products instead of G*M full feature maps.
        """
        q = cand.shape[1]
        wf = (self.weights * self.basis.amplitude).astype(np.float32)
        U = (cand @ self.basis.frequencies[:, :q].T).astype(np.float32)
        V = (land @ self.basis.frequencies[:, q:].T + self.basis.phases).astype(np.float32)
        return (np.cos(U) * wf) @ np.cos(V).T - (np.sin(U) * wf) @ np.sin(V).T


def sample_latent_path(
    posterior: LaplacePosterior | None, basis: FourierBasis, rng: np.random.Generator
) -> SampledPath:
    """Draw one continuous posterior (or prior) sample of the latent reward."""
    if posterior is None or posterior.n == 0:
        return SampledPath(basis, rng.standard_normal(basis.n_features))
    cov = posterior.posterior_cov().copy()
    nugget = 1e-10 * posterior.params.signal_variance
    cov[np.diag_indices_from(cov)] += nugget
    try:
        chol = cholesky(cov, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise PathSampleError(f"posterior covariance factorization failed: {exc}") from exc
    f_sample = posterior.f_hat + chol @ rng.standard_normal(posterior.n)

    Phi = basis.features(posterior.dataset.X)  # (N, F)
    gram = Phi @ Phi.T
    gram[np.diag_indices_from(gram)] += RIDGE_LAMBDA
    try:
        weights = Phi.T @ cho_solve(cho_factor(gram, lower=True), f_sample)
    except np.linalg.LinAlgError as exc:
        raise PathSampleError(f"rank-deficient feature system: {exc}") from exc
    return SampledPath(basis, weights)


def sampled_copeland_scores(path, candidates, landmarks) -> np.ndarray:
    """Per-candidate landmark average of sigmoid(path([x, x_k]))."""
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    land = np.atleast_2d(np.asarray(landmarks, dtype=float))
    if isinstance(path, SampledPath):
        vals = path.pair_values(cand, land)
        return sigmoid(vals).mean(axis=1, dtype=np.float64)
    g, m = cand.shape[0], land.shape[0]
    q = cand.shape[1]
    scores = np.empty(g)
    block = max(1, int(500_000 // max(m, 1)))
    for i0 in range(0, g, block):
        i1 = min(i0 + block, g)
        b = i1 - i0
        Z = np.empty((b * m, 2 * q))
        Z[:, :q] = np.repeat(cand[i0:i1], m, axis=0)
        Z[:, q:] = np.tile(land, (b, 1))
        scores[i0:i1] = sigmoid(path(Z)).reshape(b, m).mean(axis=1)
    return scores


def sampled_copeland_argmax(path, candidates, landmarks, *, return_index: bool = False):
    """Candidate maximizing the sampled soft-Copeland score (lowest index on ties)."""
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    land = landmarks.points if hasattr(landmarks, "points") else landmarks
    scores = sampled_copeland_scores(path, cand, land)
    idx = int(np.argmax(scores))
    if return_index:
        return cand[idx], idx
    return cand[idx]
