"""Shared numerical primitives: the logistic link and its Gaussian moments.

The logistic function is evaluated through ``tanh`` rather than ``exp``:
on this libm the vectorized tanh is several times faster than exp, and
``tanh`` being odd makes sigmoid(0) == 0.5 exact.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.hermite import hermgauss

GH_NODES = 20

# Gauss-Hermite rule for E[h(Z)], Z ~ N(mean, var):
#   E[h] = sum_k  W[k] * h(mean + sqrt(2 var) * T[k])
# Weights are normalized to sum exactly to 1 so that a zero-variance input
# reproduces h(mean) bitwise.
_T, _W = hermgauss(GH_NODES)
GH_POINTS = _T * np.sqrt(2.0)
GH_WEIGHTS = _W / _W.sum()


def sigmoid(z):
    """Logistic function 1 / (1 + exp(-z)), vectorized."""
    z = np.asarray(z)
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def log_sigmoid(z):
    """log(sigmoid(z)), stable for large negative z."""
    return -np.logaddexp(0.0, -np.asarray(z, dtype=float))


def preference_probability(delta: float) -> float:
    """sigmoid(delta) with the exact swap identity p(d) + p(-d) == 1.

    Negative inputs are routed through the positive branch so the two
    orientations of a duel always sum to exactly 1.0 in floating point.
    """
    d = float(delta)
    if d < 0.0:
        return 1.0 - preference_probability(-d)
    return float(0.5 * (1.0 + np.tanh(0.5 * d)))


def sigmoid_gauss_moments(mean, var):
    """First two moments of sigmoid(F) for F ~ N(mean, var), elementwise.

    Gauss-Hermite with GH_NODES nodes; inputs broadcast, ``var`` must be
    nonnegative.  Returns (E[sigmoid], E[sigmoid^2]).
    """
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    scale = np.sqrt(np.maximum(var, 0.0))
    z = mean[..., None] + scale[..., None] * GH_POINTS
    s = sigmoid(z)
    m1 = s @ GH_WEIGHTS
    m2 = (s * s) @ GH_WEIGHTS
    return m1, m2
