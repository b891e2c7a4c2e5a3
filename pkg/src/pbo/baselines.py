"""Non-GP comparison policies: uniform-random duels and the Sparring reduction.

Sparring plays two independent UCB1 agents, one per duel slot, over the
grid points as arms.  The left agent is rewarded with the duel outcome y,
the right agent with 1 - y.  Unpulled arms carry an infinite exploration
bonus, so each agent visits every arm once (lowest index first) before the
confidence bound starts discriminating.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .benchmarks import Duel


def random_duel(grid: np.ndarray, rng: np.random.Generator) -> Duel:
    """Both members drawn independently and uniformly from the grid."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] < 1:
        raise ValueError("grid must be nonempty")
    i = int(rng.integers(grid.shape[0]))
    j = int(rng.integers(grid.shape[0]))
    return Duel(tuple(grid[i]), tuple(grid[j]))


@dataclass
class SparringState:
    """Counts, reward sums and round counter of the two UCB agents."""

    n_arms: int
    counts: np.ndarray = field(init=False)   # (2, K) pulls per agent
    rewards: np.ndarray = field(init=False)  # (2, K) summed rewards per agent
    t: int = field(init=False, default=0)

    def __post_init__(self):
        if self.n_arms < 1:
            raise ValueError("need at least one arm")
        self.counts = np.zeros((2, self.n_arms), dtype=np.int64)
        self.rewards = np.zeros((2, self.n_arms), dtype=float)

    def means(self, agent: int) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.where(self.counts[agent] > 0, self.rewards[agent] / self.counts[agent], 0.0)


def _ucb_pick(state: SparringState, agent: int) -> int:
    unpulled = np.flatnonzero(state.counts[agent] == 0)
    if unpulled.size:
        return int(unpulled[0])
    t = max(state.t, 1)
    bonus = np.sqrt(2.0 * np.log(t) / state.counts[agent])
    return int(np.argmax(state.means(agent) + bonus))


def sparring_select(state: SparringState) -> tuple[int, int]:
    """Each agent independently picks its UCB-maximizing arm."""
    return _ucb_pick(state, 0), _ucb_pick(state, 1)


def sparring_update(state: SparringState, arm_left: int, arm_right: int, y: int) -> SparringState:
    """Credit the outcome: left agent receives y, right agent 1 - y."""
    if not (0 <= arm_left < state.n_arms and 0 <= arm_right < state.n_arms):
        raise IndexError("arm index out of range")
    if y not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    state.counts[0, arm_left] += 1
    state.rewards[0, arm_left] += y
    state.counts[1, arm_right] += 1
    state.rewards[1, arm_right] += 1 - y
    state.t += 1
    return state


def sparring_recommend(state: SparringState) -> int:
    """The left agent's most-pulled arm, lowest index on ties."""
    if state.t < 1:
        raise ValueError("no rounds played yet")
    return int(np.argmax(state.counts[0]))


@dataclass
class WinCountState:
    """Empirical win counts per grid index, for the random policy's report."""

    n_arms: int
    wins: np.ndarray = field(init=False)
    total: int = field(init=False, default=0)

    def __post_init__(self):
        self.wins = np.zeros(self.n_arms, dtype=np.int64)

    def update(self, arm_left: int, arm_right: int, y: int) -> None:
        self.wins[arm_left if y == 1 else arm_right] += 1
        self.total += 1

    def recommend(self) -> int:
        """Arm with the most observed duel wins, lowest index on ties."""
        if self.total < 1:
            raise ValueError("no outcomes observed yet")
        return int(np.argmax(self.wins))
