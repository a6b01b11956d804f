"""Action-selection policies sharing one select/observe contract.

``vcl_ucb`` is the varying-confidence-level UCB rule; ``oful`` uses a fixed
confidence radius; ``greedy`` plays the ridge estimate; ``random`` plays a
uniformly drawn action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import estimator
from .action_sets import ActionSet, BonusIndex, ConvexOptReport, maximize_linear, maximize_ucb, ucb_objective, uniform_sphere
from .estimator import ConfidenceSchedule, SpdState

KINDS = ("vcl_ucb", "oful", "greedy", "random")


@dataclass(frozen=True)
class PolicyConfig:
    kind: str
    schedule: ConfidenceSchedule
    bonus_constant: float = 1.0
    oful_delta: float = 0.1
    argmax_slack: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {KINDS}")
        if not self.bonus_constant > 0:
            raise ValueError("bonus_constant must be positive")
        if not 0 < self.oful_delta < 1:
            raise ValueError("oful_delta must lie in (0, 1)")
        if self.argmax_slack is not None and not self.argmax_slack >= 0:
            raise ValueError("argmax_slack must be nonnegative")

    @property
    def slack(self) -> float:
        """Maximization tolerance; defaults to ``sqrt(1/T)``."""
        if self.argmax_slack is None:
            return math.sqrt(1.0 / self.schedule.horizon)
        return self.argmax_slack


@dataclass
class Policy:
    config: PolicyConfig
    state: SpdState
    rng: np.random.Generator
    last_report: ConvexOptReport | None = field(default=None, repr=False)
    _last_action: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.state.dim

    def ucb_index(self, action, smooth: bool | None = None):
        """Optimistic index of ``action`` (scalar) or each row of an array."""
        if smooth is None:
            smooth = self.config.schedule.smooth
        fn = ucb_objective(self.state, self.config.schedule, self.config.bonus_constant, smooth)
        return fn(_check(self, action))[0]

    def oful_radius(self) -> float:
        d, t = self.dim, self.state.t
        return math.sqrt(d * math.log((1 + t) / self.config.oful_delta)) + 1.0

    def oful_index(self, action):
        return self._oful_objective()(_check(self, action))[0]

    def _oful_objective(self) -> BonusIndex:
        return BonusIndex(self.state.estimate, self.state.gram_inv, self.oful_radius(), 1.0, mode="constant")

    def select(self, action_set: ActionSet) -> np.ndarray:
        """Choose an action from ``action_set``; the optimizer report lands in ``last_report``."""
        if action_set.dim != self.dim:
            raise ValueError(f"action set dimension {action_set.dim} != policy dimension {self.dim}")
        kind = self.config.kind
        self.last_report = None
        if kind == "random":
            x = action_set.sample(self.rng)
        elif kind == "greedy":
            direction = self.state.estimate
            if not action_set.is_finite and not np.any(direction):
                # every member ties; a random direction keeps the action informative
                direction = uniform_sphere(self.rng, self.dim)
            x, _ = maximize_linear(action_set, direction)
            val = float(x @ self.state.estimate)
            self.last_report = ConvexOptReport(0, val, 0.0, True)
        else:
            if kind == "vcl_ucb":
                smooth = not action_set.is_finite or self.config.schedule.smooth
                index = ucb_objective(self.state, self.config.schedule, self.config.bonus_constant, smooth)
            else:
                index = self._oful_objective()
            starts = []
            if np.any(self.state.estimate):
                starts.append(self.state.estimate / np.linalg.norm(self.state.estimate))
            if self._last_action is not None:
                starts.append(self._last_action)
            x, self.last_report = maximize_ucb(
                action_set, index, self.config.slack, rng=self.rng, starts=starts or None
            )
        self._last_action = x
        return x

    def observe(self, action, reward: float) -> "Policy":
        estimator.update(self.state, action, reward)
        return self


def make_policy(config: PolicyConfig, rng: np.random.Generator | None = None) -> Policy:
    rng = np.random.default_rng() if rng is None else rng
    return Policy(config, estimator.init_state(config.schedule.dim), rng)


def _check(policy: Policy, action) -> np.ndarray:
    x = np.asarray(action, dtype=float)
    if x.shape[-1] != policy.dim:
        raise ValueError(f"action dimension {x.shape[-1]} != policy dimension {policy.dim}")
    return x
