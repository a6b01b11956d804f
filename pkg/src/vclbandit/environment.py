"""Synthetic linear bandit instances and the episode loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .action_sets import ActionSet, maximize_linear, uniform_ball, uniform_sphere
from .estimator import alpha, width
from .policies import PolicyConfig, make_policy

NOISE_KINDS = ("gaussian_unit", "rademacher", "uniform_pm1", "zero")
NOISE_ALIASES = {"gaussian": "gaussian_unit", "uniform": "uniform_pm1"}
SET_KINDS = ("fixed_finite", "iid_sphere_finite", "unit_ball", "clipped_ball")
THETA_MODES = ("fixed", "uniform_sphere", "uniform_ball")
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class SetGenerator:
    """Oblivious action-set generator.

    ``fixed_finite`` draws ``size`` sphere points once per episode;
    ``iid_sphere_finite`` redraws them every round; ``clipped_ball`` draws
    ``size`` halfspaces ``<a, x> <= b`` (``a`` on the sphere, ``b`` uniform on
    ``[0.1, 0.6]``) once per episode; ``unit_ball`` ignores ``size``.
    ``points`` pins an explicit finite set for ``fixed_finite``.
    """

    kind: str = "unit_ball"
    size: int = 10
    points: tuple | None = None

    def __post_init__(self):
        if self.kind not in SET_KINDS:
            raise ValueError(f"unknown action-set generator {self.kind!r}; expected one of {SET_KINDS}")
        if self.size < 1:
            raise ValueError("generator size must be positive")

    def start(self, dim: int, rng: np.random.Generator):
        """Return a per-episode callable ``round -> ActionSet``."""
        if self.kind == "unit_ball":
            ball = ActionSet.unit_ball(dim)
            return lambda t: ball
        if self.kind == "fixed_finite":
            pts = np.asarray(self.points, dtype=float) if self.points is not None else uniform_sphere(rng, dim, self.size)
            fixed = ActionSet.finite(pts)
            return lambda t: fixed
        if self.kind == "iid_sphere_finite":
            return lambda t: ActionSet.finite(uniform_sphere(rng, dim, self.size))
        A = uniform_sphere(rng, dim, self.size)
        b = rng.uniform(0.1, 0.6, self.size)
        clipped = ActionSet.clipped_ball(A, b, interior=np.zeros(dim))
        return lambda t: clipped


@dataclass(frozen=True)
class Instance:
    theta: np.ndarray
    noise_kind: str
    horizon: int
    generator: SetGenerator
    seed: int

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 1:
            raise ValueError("theta must be a vector")
        if theta @ theta > (1.0 + 1e-12) ** 2:
            raise ValueError(f"|theta| = {np.linalg.norm(theta):.6g} exceeds 1")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.noise_kind!r}; expected one of {NOISE_KINDS}")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        object.__setattr__(self, "theta", theta)

    @property
    def dim(self) -> int:
        return self.theta.size


@dataclass
class RoundRecord:
    t: int
    action: np.ndarray = field(repr=False)
    reward: float
    omega: float
    alpha: float
    opt_converged: bool
    instant_regret: float
    cumulative_regret: float


def streams(seed: int) -> dict:
    """Independent generators for one episode, keyed by purpose."""
    children = np.random.SeedSequence(seed).spawn(4)
    names = ("theta", "sets", "noise", "policy")
    return {n: np.random.default_rng(c) for n, c in zip(names, children)}


def make_instance(
    dim: int,
    horizon: int,
    seed: int,
    *,
    theta_mode: str = "uniform_sphere",
    theta=None,
    noise: str = "gaussian_unit",
    generator: SetGenerator | None = None,
) -> Instance:
    noise = NOISE_ALIASES.get(noise, noise)
    if theta_mode == "fixed":
        if theta is None:
            raise ValueError("theta_mode 'fixed' needs a theta vector")
        th = np.asarray(theta, dtype=float)
    elif theta_mode == "uniform_sphere":
        th = uniform_sphere(streams(seed)["theta"], dim)
    elif theta_mode == "uniform_ball":
        th = uniform_ball(streams(seed)["theta"], dim)
    else:
        raise ValueError(f"unknown theta mode {theta_mode!r}; expected one of {THETA_MODES}")
    if th.shape != (dim,):
        raise ValueError(f"theta has shape {th.shape}, expected ({dim},)")
    return Instance(th, noise, horizon, generator or SetGenerator(), seed)


def draw_noise(instance: Instance, rng: np.random.Generator) -> float:
    kind = instance.noise_kind
    if kind == "gaussian_unit":
        return float(rng.standard_normal())
    if kind == "rademacher":
        return float(2 * rng.integers(2) - 1)
    if kind == "uniform_pm1":
        return float(rng.uniform(-1.0, 1.0))
    return 0.0


def reward(instance: Instance, action) -> float:
    """Mean reward ``<action, theta>``."""
    x = np.asarray(action, dtype=float)
    if x.shape != instance.theta.shape:
        raise ValueError(f"action has shape {x.shape}, expected {instance.theta.shape}")
    return float(x @ instance.theta)


def instant_regret(instance: Instance, action_set: ActionSet, action) -> float:
    x = np.asarray(action, dtype=float)
    if not action_set.contains(x, FEASIBILITY_TOL):
        raise ValueError("action lies outside the action set")
    _, best = maximize_linear(action_set, instance.theta)
    return best - reward(instance, x)


def run_episode(instance: Instance, policy_config: PolicyConfig) -> list[RoundRecord]:
    """Play ``instance.horizon`` rounds with a fresh policy built from ``policy_config``.

    All randomness comes from ``instance.seed``: action sets, noise and the
    policy's own draws use separate streams, so two policies run on the same
    instance face identical sets and noise sequences.
    """
    if policy_config.schedule.dim != instance.dim:
        raise ValueError("policy and instance dimensions differ")
    rngs = streams(instance.seed)
    sets = instance.generator.start(instance.dim, rngs["sets"])
    policy = make_policy(policy_config, rngs["policy"])
    schedule = policy_config.schedule
    records = []
    cum = 0.0
    for t in range(1, instance.horizon + 1):
        D = sets(t)
        x = policy.select(D)
        omega = width(policy.state, x)
        smooth = not D.is_finite or schedule.smooth
        lvl = alpha(schedule, omega, smooth=smooth) if omega > 0 else 1.0
        r = reward(instance, x) + draw_noise(instance, rngs["noise"])
        reg = instant_regret(instance, D, x)
        policy.observe(x, r)
        cum += reg
        report = policy.last_report
        records.append(
            RoundRecord(t, x, r, omega, lvl, True if report is None else report.converged, reg, cum)
        )
    return records

