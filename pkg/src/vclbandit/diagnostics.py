"""Empirical checks of the potential inequality, the estimator tail and regret scaling.

Every diagnostic returns a report with a ``passed`` flag and a ``lines()``
rendering.  Thresholds are desk-scale calibration constants passed in by the
caller (defaults live in the harness config), not theoretical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import estimator
from .action_sets import uniform_ball, uniform_sphere
from .environment import NOISE_ALIASES, Instance, SetGenerator, draw_noise, make_instance, run_episode
from .estimator import ConfidenceSchedule
from .harness import map_tasks, normalizer, replication_seed
from .policies import PolicyConfig


def elliptical_potential(vectors) -> tuple[float, float]:
    """Return ``(sum_t w_{t-1}(y_t)^2, 2 ln det(gram_T))`` for the given sequence."""
    Y = np.atleast_2d(np.asarray(vectors, dtype=float))
    state = estimator.init_state(Y.shape[1])
    lhs = 0.0
    for y in Y:
        lhs += estimator.width(state, y) ** 2
        estimator.update(state, y, 0.0)
    return lhs, 2.0 * estimator.log_det(state)


@dataclass
class EllipticalReport:
    trials: int
    horizon: int
    dim: int
    seed: int
    max_ratio: float
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def lines(self):
        yield f"elliptical: trials={self.trials} T={self.horizon} d={self.dim} seed={self.seed}"
        yield f"  max lhs/rhs = {self.max_ratio:.6f}, violations = {len(self.violations)}"
        for s in self.violations:
            yield f"  violation at trial seed {s}"


def diagnostic_elliptical(trials: int, horizon: int, dim: int, seed: int, tol: float = 1e-9) -> EllipticalReport:
    if min(trials, horizon, dim) < 1:
        raise ValueError("trials, horizon and dim must be positive")
    max_ratio = 0.0
    bad = []
    for i in range(1, trials + 1):
        s = replication_seed(seed, i)
        lhs, rhs = elliptical_potential(uniform_ball(np.random.default_rng(s), dim, horizon))
        if lhs > rhs + tol:
            bad.append(s)
        if rhs > 0:
            max_ratio = max(max_ratio, lhs / rhs)
    return EllipticalReport(trials, horizon, dim, seed, max_ratio, bad)


@dataclass
class TailReport:
    delta: float
    reps: int
    t: int
    dim: int
    seed: int
    noise: str
    quantile: float
    ratio: float
    threshold: float
    errors: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.ratio <= self.threshold

    def lines(self):
        yield f"tail: d={self.dim} t={self.t} delta={self.delta} reps={self.reps} noise={self.noise} seed={self.seed}"
        yield f"  (1-delta) quantile of |theta_hat - theta|_gram = {self.quantile:.6f}"
        yield f"  ratio to sqrt(d) + sqrt(ln(1/delta)) = {self.ratio:.6f} (threshold {self.threshold})"


def self_normalized_error(state, theta) -> float:
    """``|theta_hat - theta|`` in the ``gram`` norm, the sup over x of the width-normalized error."""
    e = state.estimate - theta
    return math.sqrt(max(float(e @ state.gram @ e), 0.0))


def _tail_task(args):
    seed, t, dim, noise = args
    rng_theta, rng_x, rng_noise = (np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(3))
    theta = uniform_sphere(rng_theta, dim)
    inst = Instance(theta, NOISE_ALIASES.get(noise, noise), max(t, 1), SetGenerator(), seed)
    state = estimator.init_state(dim)
    # The error at round t uses the estimate built from the first t-1 rounds.
    for x in uniform_sphere(rng_x, dim, max(t - 1, 0)):
        estimator.update(state, x, float(x @ theta) + draw_noise(inst, rng_noise))
    return self_normalized_error(state, theta)


def diagnostic_tail_bound(
    delta: float,
    reps: int,
    t: int,
    dim: int,
    seed: int,
    noise: str = "gaussian_unit",
    threshold: float = 4.0,
    workers: int = 1,
) -> TailReport:
    if not 0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    if reps < 100:
        raise ValueError("reps must be at least 100")
    if t < 1 or dim < 1:
        raise ValueError("t and dim must be positive")
    tasks = [(replication_seed(seed, r), t, dim, noise) for r in range(1, reps + 1)]
    errs = np.array(map_tasks(_tail_task, tasks, workers))
    q = float(np.quantile(errs, 1.0 - delta))
    ratio = q / (math.sqrt(dim) + math.sqrt(math.log(1.0 / delta)))
    return TailReport(delta, reps, t, dim, seed, noise, q, ratio, threshold, errs)


@dataclass
class ScalingReport:
    dims: tuple
    horizons: tuple
    replications: int
    seed: int
    constant: float
    threshold: float
    control_threshold: float
    #: rho[kind][d] is a list of median R_T / sqrt(d^2 T ln T), one per horizon.
    rho: dict
    finals: dict = field(repr=False, default_factory=dict)

    def ratio(self, kind: str, dim: int) -> float:
        r = self.rho[kind][dim]
        return r[-1] / r[0]

    def passes(self, kind: str, dim: int) -> bool:
        if kind == "vcl_ucb":
            return self.ratio(kind, dim) <= self.threshold
        return self.ratio(kind, dim) > self.control_threshold

    @property
    def passed(self) -> bool:
        return all(self.passes(k, d) for k in self.rho for d in self.dims)

    def lines(self):
        yield (
            f"scaling: dims={list(self.dims)} horizons={list(self.horizons)} R={self.replications} "
            f"C={self.constant} seed={self.seed}"
        )
        for kind, by_dim in self.rho.items():
            bound = f"<= {self.threshold}" if kind == "vcl_ucb" else f"> {self.control_threshold}"
            for d, rs in by_dim.items():
                vals = " ".join(f"{v:.4f}" for v in rs)
                verdict = "ok" if self.passes(kind, d) else "FAIL"
                yield f"  {kind:8s} d={d}: rho(T) = {vals}; ratio {self.ratio(kind, d):.3f} (want {bound}) {verdict}"


def _scaling_task(args):
    kind, dim, horizon, seed, constant = args
    inst = make_instance(dim, horizon, seed)
    cfg = PolicyConfig(kind, ConfidenceSchedule(horizon, dim), bonus_constant=constant)
    return run_episode(inst, cfg)[-1].cumulative_regret


def _check_geometric(horizons):
    if len(horizons) < 3:
        raise ValueError("scaling needs at least 3 horizons")
    q = horizons[1] / horizons[0]
    if q <= 1 or any(not math.isclose(b / a, q, rel_tol=1e-9) for a, b in zip(horizons, horizons[1:])):
        raise ValueError(f"horizons {list(horizons)} are not an increasing geometric progression")


def scaling_report(
    dims,
    horizons,
    replications: int,
    seed: int,
    kinds=("vcl_ucb", "random"),
    constant: float = 1.0,
    threshold: float = 1.5,
    control_threshold: float = 3.0,
    workers: int = 1,
) -> ScalingReport:
    """Median normalized regret across a (d, T) grid for each policy kind.

    Replication ``r`` at every grid point uses seed ``seed ^ r`` so that the
    policies share instances and noise.
    """
    dims = tuple(int(d) for d in dims)
    horizons = tuple(int(T) for T in horizons)
    _check_geometric(horizons)
    if replications < 1:
        raise ValueError("replications must be positive")
    grid = [(k, d, T) for k in kinds for d in dims for T in horizons]
    tasks = [(k, d, T, replication_seed(seed, r), constant) for k, d, T in grid for r in range(1, replications + 1)]
    finals = np.array(map_tasks(_scaling_task, tasks, workers)).reshape(len(grid), replications)
    rho = {k: {d: [] for d in dims} for k in kinds}
    out = {}
    for (k, d, T), row in zip(grid, finals):
        rho[k][d].append(float(np.median(row)) / normalizer(d, T))
        out[(k, d, T)] = row
    return ScalingReport(dims, horizons, replications, seed, constant, threshold, control_threshold, rho, out)


__all__ = [
    "elliptical_potential", "diagnostic_elliptical", "diagnostic_tail_bound", "scaling_report",
    "self_normalized_error", "EllipticalReport", "TailReport", "ScalingReport",
]
