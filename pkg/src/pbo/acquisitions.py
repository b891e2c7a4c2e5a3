"""Duel-selection policies: pure exploration, Copeland expected improvement,
and dueling-Thompson sampling.

All three return an :class:`AcquisitionChoice` whose duel members come from
the candidate grid, with ties broken toward the lowest candidate index.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import Duel
from .copeland import condorcet_winner, pair_preference_sweep
from .gp import (
    DuelDataset,
    KernelParams,
    LaplacePosterior,
    NewtonConvergenceError,
    fit_preference_model,
    predict_preference_batch,
)
from .thompson import sample_basis, sample_latent_path, sampled_copeland_argmax

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AcquisitionChoice:
    duel: Duel
    score: float
    policy: str
    diagnostics: dict = field(default_factory=dict)


def _duel_from_joint(joint: np.ndarray) -> Duel:
    q = joint.size // 2
    return Duel(tuple(joint[:q]), tuple(joint[q:]))


def all_ordered_pairs(grid: np.ndarray) -> np.ndarray:
    """All ordered grid pairs as (G*G, 2q) joint vectors, row-major in (i, j)."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    g, q = grid.shape
    Z = np.empty((g * g, 2 * q))
    Z[:, :q] = np.repeat(grid, g, axis=0)
    Z[:, q:] = np.tile(grid, (g, 1))
    return Z


def acq_pure_exploration(
    posterior: LaplacePosterior,
    candidate_duels: np.ndarray | None = None,
    *,
    grid: np.ndarray | None = None,
) -> AcquisitionChoice:
    """The duel with the largest predictive variance of sigmoid(f*).

    Either an explicit (P, 2q) candidate duel array or a grid whose ordered
    pairs are enumerated row-major; both use the same tie-break.
    """
    if (candidate_duels is None) == (grid is None):
        raise ValueError("provide exactly one of candidate_duels or grid")
    if grid is not None:
        grid = np.atleast_2d(np.asarray(grid, dtype=float))
        _, var_sigma = pair_preference_sweep(posterior, grid, grid, want_var_sigma=True)
        flat = np.asarray(var_sigma, dtype=float).ravel()
        idx = int(np.argmax(flat))
        g = grid.shape[0]
        joint = np.concatenate([grid[idx // g], grid[idx % g]])
        score = float(flat[idx])
    else:
        Z = np.atleast_2d(np.asarray(candidate_duels, dtype=float))
        scores = np.empty(Z.shape[0])
        block = 200_000
        for i0 in range(0, Z.shape[0], block):
            _, vs, _, _, _ = predict_preference_batch(posterior, Z[i0 : i0 + block])
            scores[i0 : i0 + block] = vs
        idx = int(np.argmax(scores))
        joint = Z[idx]
        score = float(scores[idx])
    return AcquisitionChoice(_duel_from_joint(joint), score, "pe", {"index": idx})


def condorcet_value(posterior: LaplacePosterior, candidates, landmarks) -> float:
    """Soft-Copeland score of the current Condorcet winner."""
    return condorcet_winner(posterior, candidates, landmarks).winner_score


class _FantasyEngine:
    """Shared machinery for CEI's per-candidate fantasy refits.

    A fantasy dataset differs from the incumbent by one appended duel (plus
    its mirror), so its Gram matrix and the candidate-sweep cross-kernel are
    the incumbent's matrices extended by two rows/columns; assembling them
    in place instead of rebuilding cuts the per-candidate cost severalfold
    without changing a single value.
    """

    def __init__(self, posterior, dataset, params, candidates, landmarks):
        from .copeland import _landmark_points
        from .gp import _PROB_EPS, fit_laplace, kernel_matrix
        from .numerics import sigmoid_gauss_moments

        self._fit_laplace = fit_laplace
        self._kernel_matrix = kernel_matrix
        self._moments = sigmoid_gauss_moments
        self._prob_eps = _PROB_EPS
        self.params = params
        self.posterior = posterior
        self.dataset = dataset
        n = dataset.n
        self.n_raw = n
        cand = np.atleast_2d(np.asarray(candidates, dtype=float))
        land = _landmark_points(landmarks)
        g, m = cand.shape[0], land.shape[0]
        q = cand.shape[1]
        self.score_shape = (g, m)
        Z = np.empty((g * m, 2 * q))
        Z[:, :q] = np.repeat(cand, m, axis=0)
        Z[:, q:] = np.tile(land, (g, 1))
        self.Z = Z
        X = posterior.dataset.X  # augmented: originals then mirrors
        self.H = kernel_matrix(params, Z, X)
        self.warm = np.concatenate(
            [posterior.alpha[:n], [0.0], posterior.alpha[n:], [0.0]]
        )
        # fantasy index order mirrors augment_symmetric(raw + new):
        # [raw, new, mirror(raw), mirror(new)]
        self.old_pos = np.concatenate([np.arange(n), np.arange(n + 1, 2 * n + 1)])
        self.new_pos = np.array([n, 2 * n + 1])
        size = 2 * n + 2
        self.gram = np.empty((size, size))
        self.gram[np.ix_(self.old_pos, self.old_pos)] = posterior.K
        self.Ks = np.empty((g * m, size))
        self.Ks[:, self.old_pos] = self.H
        self.X_old = X
        self.q = q

    def fantasy_value(self, joint: np.ndarray, y: int) -> float:
        """Condorcet value after refitting on the fantasy outcome."""
        q = self.q
        mirror = np.concatenate([joint[q:], joint[:q]])
        new2 = np.vstack([joint, mirror])
        fantasy = DuelDataset(
            np.vstack([self.dataset.X, joint[None, :]]),
            np.append(self.dataset.y, float(y)),
        )
        from .gp import augment_symmetric

        aug = augment_symmetric(fantasy)
        kx = self._kernel_matrix(self.params, self.X_old, new2)
        kxx = self._kernel_matrix(self.params, new2)
        self.gram[np.ix_(self.old_pos, self.new_pos)] = kx
        self.gram[np.ix_(self.new_pos, self.old_pos)] = kx.T
        self.gram[np.ix_(self.new_pos, self.new_pos)] = kxx
        post = self._fit_laplace(
            aug, self.params, warm_alpha=self.warm, gram=self.gram.copy()
        )
        self.Ks[:, self.new_pos] = self._kernel_matrix(self.params, self.Z, new2)
        mean = self.Ks @ post.grad_loglik
        from .gp import _tri_solve

        v = _tri_solve(post.L, (self.Ks * post.sqrt_W).T)
        var = np.maximum(
            self.params.signal_variance - np.einsum("ij,ij->j", v, v), 0.0
        )
        m1, _ = self._moments(mean, var)
        prob = np.clip(m1, self._prob_eps, 1.0 - self._prob_eps)
        scores = prob.reshape(self.score_shape).mean(axis=1)
        return float(scores.max())


def acq_cei(
    posterior: LaplacePosterior,
    dataset: DuelDataset,
    params: KernelParams,
    candidate_duels: np.ndarray,
    candidates,
    landmarks,
) -> AcquisitionChoice:
    """One-lookahead Copeland expected improvement over candidate duels.

    For each candidate duel both outcomes are fantasized, the model is refit
    at fixed hyperparameters on the symmetrically augmented fantasy data
    (warm-started from the incumbent mode), and the positive gains of the
    fantasy Condorcet values over the incumbent one are combined with the
    predicted outcome probabilities.  Candidates whose fantasy refit fails
    to converge are skipped.
    """
    Z = np.atleast_2d(np.asarray(candidate_duels, dtype=float))
    c_star = condorcet_value(posterior, candidates, landmarks)
    probs, _, _, _, _ = predict_preference_batch(posterior, Z)
    engine = _FantasyEngine(posterior, dataset, params, candidates, landmarks)

    best_idx, best_score, best_diag = -1, -np.inf, {}
    skipped = 0
    for i in range(Z.shape[0]):
        try:
            c_win = engine.fantasy_value(Z[i], 1)
            c_lose = engine.fantasy_value(Z[i], 0)
        except NewtonConvergenceError as exc:
            skipped += 1
            logger.warning("skipping CEI candidate %d: %s", i, exc)
            continue
        gain = probs[i] * max(0.0, c_win - c_star) + (1.0 - probs[i]) * max(
            0.0, c_lose - c_star
        )
        if gain > best_score:
            best_idx, best_score = i, float(gain)
            best_diag = {"prob_left": float(probs[i]), "c_win": c_win, "c_lose": c_lose}
    if best_idx < 0:
        raise NewtonConvergenceError(np.nan, 0)
    best_diag.update({"c_star": c_star, "index": best_idx, "skipped": skipped})
    return AcquisitionChoice(_duel_from_joint(Z[best_idx]), best_score, "cei", best_diag)


def cei_values(
    posterior: LaplacePosterior,
    dataset: DuelDataset,
    params: KernelParams,
    candidate_duels: np.ndarray,
    candidates,
    landmarks,
) -> np.ndarray:
    """CEI score of every candidate duel (diagnostic / test surface)."""
    Z = np.atleast_2d(np.asarray(candidate_duels, dtype=float))
    c_star = condorcet_value(posterior, candidates, landmarks)
    probs, _, _, _, _ = predict_preference_batch(posterior, Z)
    engine = _FantasyEngine(posterior, dataset, params, candidates, landmarks)
    out = np.empty(Z.shape[0])
    for i in range(Z.shape[0]):
        c1 = engine.fantasy_value(Z[i], 1)
        c0 = engine.fantasy_value(Z[i], 0)
        out[i] = probs[i] * max(0.0, c1 - c_star) + (1.0 - probs[i]) * max(0.0, c0 - c_star)
    return out


def acq_dts(
    posterior: LaplacePosterior,
    params: KernelParams,
    n_features: int,
    candidates,
    landmarks,
    rng: np.random.Generator,
) -> AcquisitionChoice:
    """Dueling-Thompson sampling.

    Step 1 draws a continuous sample of the latent reward and takes the
    argmax of its sampled soft-Copeland score as the left member; step 2
    picks the right member maximizing the variance of sigmoid(f*) along the
    slice through the left member, excluding the self-duel.
    """
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    basis = sample_basis(params, n_features, rng)
    path = sample_latent_path(posterior, basis, rng)
    land = landmarks.points if hasattr(landmarks, "points") else landmarks
    x_next, idx = sampled_copeland_argmax(path, cand, land, return_index=True)

    q = cand.shape[1]
    Z = np.empty((cand.shape[0], 2 * q))
    Z[:, :q] = x_next
    Z[:, q:] = cand
    _, var_sigma, _, _, _ = predict_preference_batch(posterior, Z)
    var_sigma = var_sigma.copy()
    var_sigma[idx] = -np.inf
    j = int(np.argmax(var_sigma))
    return AcquisitionChoice(
        Duel(tuple(x_next), tuple(cand[j])),
        float(var_sigma[j]),
        "dts",
        {"sampled_argmax_index": idx, "partner_index": j},
    )
