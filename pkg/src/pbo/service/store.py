"""Event-sourced session state.

Each session persists as an append-only JSON-lines log (`events/<id>.jsonl`)
with a strictly increasing ``seq`` per event; replaying the log reproduces
the live state exactly (dataset, pending duel, and therefore the winner).
Mutations of one session are serialized by a per-session lock; the model is
refit lazily when a proposal or winner query needs it, never while an
outcome is being recorded.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np

from ..acquisitions import acq_cei, acq_dts, acq_pure_exploration, all_ordered_pairs
from ..baselines import random_duel
from ..benchmarks import BENCHMARKS, Domain, Duel, make_grid
from ..copeland import LandmarkSet, condorcet_winner
from ..gp import DuelDataset, augment_symmetric, fit_preference_model, optimize_hyperparams
from ..harness import (
    CEI_SUBSAMPLE_2D,
    HYPEROPT_EVERY_AFTER,
    HYPEROPT_FULL_UNTIL,
    _should_reoptimize,
    default_hyperbounds,
    default_kernel_params,
)
from ..rng import substream

SESSION_POLICIES = ("pe", "cei", "dts", "random")


class SessionError(Exception):
    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


@dataclass
class SessionConfig:
    seed: int = 0
    n_init: int = 5
    n_features: int = 500
    landmarks: str = "grid"
    simulated: str | None = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_init": self.n_init,
            "n_features": self.n_features,
            "landmarks": self.landmarks,
            "simulated": self.simulated,
        }


@dataclass
class Session:
    session_id: str
    domain: Domain
    policy: str
    config: SessionConfig
    log_path: str
    grid: np.ndarray = field(init=False)
    landmarks: LandmarkSet = field(init=False)
    lefts: list = field(default_factory=list)
    rights: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    pending: Duel | None = None
    seq: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.grid = make_grid(self.domain)
        if self.config.landmarks == "grid":
            self.landmarks = LandmarkSet.from_grid(self.grid)
        else:
            self.landmarks = LandmarkSet.sampled(self.domain, seed=self.config.seed)
        self._params = default_kernel_params(self.domain)
        self._bounds = default_hyperbounds(self.domain)
        self._posterior = None
        self._fitted_at = -1
        self._params_at = -1

    @property
    def size(self) -> int:
        return len(self.labels)

    def dataset(self) -> DuelDataset:
        if not self.labels:
            return DuelDataset.empty(self.domain.dim)
        return DuelDataset.from_pairs(self.lefts, self.rights, self.labels)

    # -- event log ---------------------------------------------------------

    def _append_event(self, event: dict) -> None:
        event = {"seq": self.seq, **event}
        with open(self.log_path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(event, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.seq += 1

    def apply_event(self, event: dict) -> None:
        """Replay one logged event into in-memory state (no re-logging)."""
        kind = event["type"]
        if kind == "created":
            pass
        elif kind == "proposed":
            self.pending = Duel(tuple(event["left"]), tuple(event["right"]))
        elif kind == "outcome":
            if self.pending is None:
                raise SessionError("corrupt_log", "outcome event without pending duel", 500)
            self.lefts.append(list(self.pending.left))
            self.rights.append(list(self.pending.right))
            self.labels.append(int(event["y"]))
            self.pending = None
        else:
            raise SessionError("corrupt_log", f"unknown event type {kind!r}", 500)
        self.seq = event["seq"] + 1

    # -- model -------------------------------------------------------------

    def _ensure_fit(self):
        n = self.size
        if n < 1:
            raise SessionError("no_data", "no outcomes recorded yet", 409)
        if self._posterior is not None and self._fitted_at == n:
            return self._posterior
        ds = self.dataset()
        # Hyperparameters must be a pure function of the event log so that
        # replaying a session reproduces the winner exactly: re-optimize
        # from the defaults over the first n_opt outcomes, where n_opt is
        # the latest schedule point, never from the in-memory incumbent.
        n_opt = n if _should_reoptimize(n) else max(
            HYPEROPT_FULL_UNTIL, n - n % HYPEROPT_EVERY_AFTER
        )
        if self._params_at != n_opt:
            sub = DuelDataset(ds.X[:n_opt], ds.y[:n_opt])
            self._params = optimize_hyperparams(
                augment_symmetric(sub),
                default_kernel_params(self.domain),
                self._bounds,
                seed=self.config.seed,
            )
            self._params_at = n_opt
        self._posterior = fit_preference_model(ds, self._params)
        self._fitted_at = n
        return self._posterior

    # -- operations (call under self.lock) ----------------------------------

    def next_duel(self) -> tuple[Duel, int]:
        """The pending duel, proposing a fresh one if none is outstanding."""
        if self.pending is not None:
            return self.pending, self.size
        k = self.size
        if k < self.config.n_init:
            duel = random_duel(self.grid, substream(self.config.seed, "session-init", k))
        else:
            duel = self._propose(k)
        self._append_event(
            {"type": "proposed", "left": list(duel.left), "right": list(duel.right)}
        )
        self.pending = duel
        return duel, k

    def _propose(self, k: int) -> Duel:
        post = self._ensure_fit()
        rng = substream(self.config.seed, "session-policy", k)
        if self.policy == "random":
            return random_duel(self.grid, rng)
        if self.policy == "pe":
            if self.domain.dim == 1:
                return acq_pure_exploration(post, all_ordered_pairs(self.grid)).duel
            return acq_pure_exploration(post, grid=self.grid).duel
        if self.policy == "cei":
            if self.domain.dim == 1:
                pairs = all_ordered_pairs(self.grid)
            else:
                g = self.grid.shape[0]
                idx = rng.integers(0, g, size=(CEI_SUBSAMPLE_2D, 2))
                pairs = np.hstack([self.grid[idx[:, 0]], self.grid[idx[:, 1]]])
            return acq_cei(
                post, self.dataset(), self._params, pairs, self.grid, self.landmarks
            ).duel
        return acq_dts(
            post, self._params, self.config.n_features, self.grid, self.landmarks, rng
        ).duel

    def record_outcome(self, y: int) -> int:
        if self.pending is None:
            raise SessionError("no_pending_duel", "propose a duel before recording", 409)
        if y not in (0, 1):
            raise SessionError("invalid_outcome", "outcome must be 0 or 1", 422)
        self._append_event({"type": "outcome", "y": int(y)})
        self.lefts.append(list(self.pending.left))
        self.rights.append(list(self.pending.right))
        self.labels.append(int(y))
        self.pending = None
        return self.size

    def winner(self) -> dict:
        post = self._ensure_fit()
        est = condorcet_winner(post, self.grid, self.landmarks)
        return {
            "point": [float(v) for v in est.winner],
            "score": float(est.winner_score),
            "table": {
                "points": [[float(v) for v in p] for p in self.grid],
                "scores": [float(s) for s in est.scores],
            },
        }

    def public_state(self) -> dict:
        return {
            "id": self.session_id,
            "domain": {
                "bounds": [list(b) for b in self.domain.bounds],
                "grid_per_dim": self.domain.grid_per_dim,
            },
            "policy": self.policy,
            "config": self.config.to_dict(),
            "size": self.size,
            "pending": None
            if self.pending is None
            else {
                "left": list(self.pending.left),
                "right": list(self.pending.right),
                "iteration": self.size + 1,
            },
            "history": [
                {"left": l, "right": r, "y": y}
                for l, r, y in zip(self.lefts, self.rights, self.labels)
            ],
        }


class SessionStore:
    """All live sessions plus their on-disk event logs."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        self.events_dir = os.path.join(data_dir, "events")
        os.makedirs(self.events_dir, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _log_path(self, session_id: str) -> str:
        return os.path.join(self.events_dir, f"{session_id}.jsonl")

    def create(self, domain: Domain, policy: str, config: SessionConfig) -> Session:
        if policy not in SESSION_POLICIES:
            raise SessionError(
                "unknown_policy", f"policy must be one of {SESSION_POLICIES}", 422
            )
        if policy == "cei" and domain.dim > 1:
            raise SessionError(
                "unsupported_policy",
                "cei is limited to 1-D sessions (fantasy refits over a "
                "multi-dimensional grid are too expensive for interactive use)",
                422,
            )
        if config.landmarks not in ("grid", "sample"):
            raise SessionError("invalid_config", "landmarks must be 'grid' or 'sample'", 422)
        if config.n_init < 1:
            raise SessionError("invalid_config", "n_init must be >= 1", 422)
        if config.simulated is not None and config.simulated not in BENCHMARKS:
            raise SessionError(
                "unknown_benchmark",
                f"simulated objective must be one of {sorted(BENCHMARKS)}",
                422,
            )
        session_id = uuid.uuid4().hex[:16]
        session = Session(
            session_id, domain, policy, config, self._log_path(session_id)
        )
        session._append_event(
            {
                "type": "created",
                "domain": {
                    "bounds": [list(b) for b in domain.bounds],
                    "grid_per_dim": domain.grid_per_dim,
                },
                "policy": policy,
                "config": config.to_dict(),
            }
        )
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        session = self._replay(session_id)
        with self._lock:
            return self._sessions.setdefault(session_id, session)

    def _replay(self, session_id: str) -> Session:
        path = self._log_path(session_id)
        if not os.path.exists(path):
            raise SessionError("unknown_session", f"no session {session_id!r}", 404)
        with open(path, encoding="utf-8") as fh:
            events = [json.loads(line) for line in fh if line.strip()]
        if not events or events[0]["type"] != "created":
            raise SessionError("corrupt_log", "event log does not start with creation", 500)
        head = events[0]
        domain = Domain(
            tuple(tuple(b) for b in head["domain"]["bounds"]),
            head["domain"]["grid_per_dim"],
        )
        config = SessionConfig(**head["config"])
        session = Session(session_id, domain, head["policy"], config, path)
        for event in events:
            session.apply_event(event)
        return session

    def ids(self) -> list[str]:
        seen = set(self._sessions)
        for name in os.listdir(self.events_dir):
            if name.endswith(".jsonl"):
                seen.add(name[: -len(".jsonl")])
        return sorted(seen)
