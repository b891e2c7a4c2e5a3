"""Benchmark objectives, domains/grids, and the simulated Bernoulli duel oracle.

Four standard minimization benchmarks are frozen here with their canonical
domains: Forrester on [0, 1]; six-hump camel on [-2, 2] x [-1, 1];
Goldstein-Price on [-2, 2]^2; Levy on [-10, 10]^2.  A duel between two
points x and x' is won by the left point with probability
sigmoid(g(x') - g(x)), i.e. the lower-valued point is the likelier winner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import preference_probability


@dataclass(frozen=True)
class Domain:
    """A box domain: per-dimension (lower, upper) bounds and optional grid size."""

    bounds: tuple[tuple[float, float], ...]
    grid_per_dim: int | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        )
        if not self.bounds:
            raise ValueError("domain needs at least one dimension")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"invalid bounds ({lo}, {hi}): lower must be < upper")
        if self.grid_per_dim is not None and self.grid_per_dim < 2:
            raise ValueError("grid_per_dim must be >= 2")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            return False
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return bool(np.all(x >= lo) and np.all(x <= hi))


@dataclass(frozen=True)
class Duel:
    """An ordered pair of domain points; the model sees the concatenated vector."""

    left: tuple[float, ...]
    right: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "left", tuple(float(v) for v in np.atleast_1d(self.left)))
        object.__setattr__(self, "right", tuple(float(v) for v in np.atleast_1d(self.right)))
        if len(self.left) != len(self.right):
            raise ValueError("duel members must have equal dimension")

    @property
    def joint(self) -> np.ndarray:
        """The 2q-vector [x, x']."""
        return np.array(self.left + self.right, dtype=float)

    def swapped(self) -> "Duel":
        return Duel(self.right, self.left)


@dataclass(frozen=True)
class DuelOutcome:
    """A duel plus its binary outcome: y = 1 means the left point won."""

    duel: Duel
    y: int

    def __post_init__(self):
        if self.y not in (0, 1):
            raise ValueError(f"outcome label must be 0 or 1, got {self.y}")


class UnknownBenchmarkError(KeyError):
    pass


class OutOfDomainError(ValueError):
    pass


def _forrester(x: np.ndarray) -> float:
    t = 6.0 * x[0] - 2.0
    return float(t * t * np.sin(12.0 * x[0] - 4.0))


def _six_hump_camel(x: np.ndarray) -> float:
    x1, x2 = x[0], x[1]
    return float(
        (4.0 - 2.1 * x1**2 + x1**4 / 3.0) * x1**2
        + x1 * x2
        + (-4.0 + 4.0 * x2**2) * x2**2
    )


def _goldstein_price(x: np.ndarray) -> float:
    x1, x2 = x[0], x[1]
    a = 1.0 + (x1 + x2 + 1.0) ** 2 * (
        19.0 - 14.0 * x1 + 3.0 * x1**2 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2**2
    )
    b = 30.0 + (2.0 * x1 - 3.0 * x2) ** 2 * (
        18.0 - 32.0 * x1 + 12.0 * x1**2 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2**2
    )
    return float(a * b)


def _levy(x: np.ndarray) -> float:
    w = 1.0 + (np.asarray(x, dtype=float) - 1.0) / 4.0
    head = np.sin(np.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:-1] + 1.0) ** 2))
    tail = (w[-1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[-1]) ** 2)
    return float(head + mid + tail)


@dataclass(frozen=True)
class Benchmark:
    fn_id: str
    fn: callable = field(repr=False)
    bounds: tuple[tuple[float, float], ...]

    def domain(self, grid_per_dim: int | None = 33) -> Domain:
        return Domain(self.bounds, grid_per_dim)


BENCHMARKS: dict[str, Benchmark] = {
    b.fn_id: b
    for b in (
        Benchmark("forrester", _forrester, ((0.0, 1.0),)),
        Benchmark("six-hump-camel", _six_hump_camel, ((-2.0, 2.0), (-1.0, 1.0))),
        Benchmark("goldstein-price", _goldstein_price, ((-2.0, 2.0), (-2.0, 2.0))),
        Benchmark("levy", _levy, ((-10.0, 10.0), (-10.0, 10.0))),
    )
}


def get_benchmark(fn_id: str) -> Benchmark:
    try:
        return BENCHMARKS[fn_id]
    except KeyError:
        raise UnknownBenchmarkError(
            f"unknown benchmark {fn_id!r}; known: {sorted(BENCHMARKS)}"
        ) from None


def eval_objective(fn_id: str, x) -> float:
    """Deterministic objective value g(x) for a benchmark point."""
    bench = get_benchmark(fn_id)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not bench.domain(None).contains(x):
        raise OutOfDomainError(f"point {x.tolist()} outside domain of {fn_id!r}")
    return bench.fn(x)


def make_grid(domain: Domain) -> np.ndarray:
    """Row-major Cartesian grid over the domain, endpoints included.

    Returns an (n^q, q) array; the last coordinate varies fastest, so
    "lowest index" tie-breaking is reproducible.
    """
    if domain.grid_per_dim is None:
        raise ValueError("domain has no grid_per_dim set")
    n = domain.grid_per_dim
    if n ** domain.dim > 50_000_000:
        raise ValueError(f"grid of {n}^{domain.dim} points is too large")
    axes = [np.linspace(lo, hi, n) for lo, hi in domain.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def true_preference_prob(fn_id: str, duel: Duel) -> float:
    """Probability that the left member wins: sigmoid(g(right) - g(left))."""
    g_left = eval_objective(fn_id, duel.left)
    g_right = eval_objective(fn_id, duel.right)
    return preference_probability(g_right - g_left)


def sample_duel_outcome(fn_id: str, duel: Duel, rng: np.random.Generator) -> DuelOutcome:
    """Draw the Bernoulli duel outcome from the simulated oracle.

    Consumes exactly one uniform variate from ``rng``, so a replayed stream
    reproduces the outcome sequence.
    """
    p = true_preference_prob(fn_id, duel)
    y = 1 if rng.random() < p else 0
    return DuelOutcome(duel, y)
