"""Online ridge state and the confidence quantities built on it.

The state keeps the regularized Gram matrix ``I + sum x x^T``, its inverse
(maintained by rank-one updates), the reward-weighted moment ``sum r x`` and
the ridge estimate.  ``width`` and ``alpha`` give the per-action confidence
width and varying confidence level used by the UCB index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Full re-factorization period for the maintained inverse.
REFACTOR_EVERY = 512
#: Max-entry deviation of ``gram @ gram_inv`` from identity that triggers a refactor.
INVERSE_TOL = 1e-8
#: Quadratic forms in ``[-NEG_TOL, 0]`` are clamped to zero.
NEG_TOL = 1e-12
#: Slack allowed on the unit-ball norm of an update action.
NORM_TOL = 1e-12


class StateCorruptionError(ArithmeticError):
    """Raised when the Gram matrix or its inverse has lost positive definiteness."""


@dataclass
class SpdState:
    dim: int
    t: int
    gram: np.ndarray
    gram_inv: np.ndarray
    moment: np.ndarray
    estimate: np.ndarray
    #: ln det(gram), accumulated as ln(1 + w^2) per update.
    logdet: float = 0.0
    since_refactor: int = field(default=0, repr=False)

    def copy(self) -> "SpdState":
        return SpdState(
            self.dim,
            self.t,
            self.gram.copy(),
            self.gram_inv.copy(),
            self.moment.copy(),
            self.estimate.copy(),
            self.logdet,
            self.since_refactor,
        )

    def inverse_deviation(self) -> float:
        """Max-entry deviation of ``gram @ gram_inv`` from the identity."""
        return float(np.max(np.abs(self.gram @ self.gram_inv - np.eye(self.dim))))


@dataclass(frozen=True)
class ConfidenceSchedule:
    """Horizon and dimension as they enter the confidence level.

    ``smooth`` selects the smoothed level ``sqrt(ln(e + ln+ z))`` instead of
    ``sqrt(max(1, ln z))``, where ``z = (T ln T) w^2 / d``.
    """

    horizon: int
    dim: int
    smooth: bool = False

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 2:
            raise ValueError(f"horizon must be an integer >= 2, got {self.horizon!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")

    @property
    def scale(self) -> float:
        """``T ln T / d``; the confidence level depends on ``scale * w^2``."""
        return self.horizon * math.log(self.horizon) / self.dim


def init_state(dim: int) -> SpdState:
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    dim = int(dim)
    return SpdState(
        dim=dim,
        t=0,
        gram=np.eye(dim),
        gram_inv=np.eye(dim),
        moment=np.zeros(dim),
        estimate=np.zeros(dim),
    )


def _as_action(state: SpdState, action) -> np.ndarray:
    x = np.asarray(action, dtype=float)
    if x.shape != (state.dim,):
        raise ValueError(f"action has shape {x.shape}, expected ({state.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("action has non-finite entries")
    return x


def refactor(state: SpdState) -> SpdState:
    """Recompute ``gram_inv`` and ``estimate`` from ``gram`` by Cholesky."""
    try:
        chol = np.linalg.cholesky(state.gram)
    except np.linalg.LinAlgError as exc:
        raise StateCorruptionError("gram matrix is not positive definite") from exc
    linv = np.linalg.inv(chol)
    inv = linv.T @ linv
    state.gram_inv = 0.5 * (inv + inv.T)
    state.estimate = state.gram_inv @ state.moment
    state.since_refactor = 0
    return state


def update(state: SpdState, action, reward: float) -> SpdState:
    """Apply one (action, reward) observation in place and return the state.

    The inverse is updated with the Sherman-Morrison formula; it is rebuilt
    from scratch every ``REFACTOR_EVERY`` updates, or earlier when a probe
    ``gram @ (gram_inv @ x) - x`` drifts past ``INVERSE_TOL``.
    """
    x = _as_action(state, action)
    r = float(reward)
    if not math.isfinite(r):
        raise ValueError("reward is not finite")
    if float(x @ x) > (1.0 + NORM_TOL) ** 2:
        raise ValueError(f"action norm {np.linalg.norm(x):.6g} exceeds 1")

    v = state.gram_inv @ x
    w2 = float(x @ v)
    if w2 < -NEG_TOL:
        raise StateCorruptionError(f"negative quadratic form {w2:.3e}")
    w2 = max(w2, 0.0)

    state.gram += np.outer(x, x)
    state.gram_inv -= np.outer(v, v) / (1.0 + w2)
    state.moment += r * x
    state.logdet += math.log1p(w2)
    state.t += 1
    state.since_refactor += 1

    if state.since_refactor >= REFACTOR_EVERY:
        refactor(state)
    else:
        probe = state.gram @ (state.gram_inv @ x) - x
        if w2 > 0.0 and float(np.max(np.abs(probe))) > INVERSE_TOL:
            refactor(state)
        else:
            state.estimate = state.gram_inv @ state.moment
    return state


def width(state: SpdState, action) -> float:
    """Confidence width ``sqrt(x^T gram^-1 x)``."""
    x = _as_action(state, action)
    q = float(x @ state.gram_inv @ x)
    if q < -NEG_TOL:
        raise StateCorruptionError(f"negative quadratic form {q:.3e}")
    return math.sqrt(max(q, 0.0))


def widths(state: SpdState, actions) -> np.ndarray:
    """Vectorized ``width`` over the rows of ``actions``."""
    X = np.atleast_2d(np.asarray(actions, dtype=float))
    q = np.einsum("ij,jk,ik->i", X, state.gram_inv, X)
    if np.any(q < -NEG_TOL):
        raise StateCorruptionError(f"negative quadratic form {q.min():.3e}")
    return np.sqrt(np.maximum(q, 0.0))


def alpha(schedule: ConfidenceSchedule, omega, smooth: bool | None = None):
    """Varying confidence level for width ``omega`` (scalar or array).

    Max form ``sqrt(max(1, ln z))``; smooth form ``sqrt(ln(e + max(0, ln z)))``
    with ``z = (T ln T) omega^2 / d``.  Both equal 1 while ``z <= 1`` and are
    nondecreasing in ``omega``.
    """
    if smooth is None:
        smooth = schedule.smooth
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise ValueError("alpha is only defined for omega > 0")
    log_z = math.log(schedule.scale) + 2.0 * np.log(w)
    if smooth:
        out = np.sqrt(np.log(math.e + np.maximum(log_z, 0.0)))
    else:
        out = np.sqrt(np.maximum(log_z, 1.0))
    return float(out) if out.ndim == 0 else out


def log_det(state: SpdState) -> float:
    """``ln det(gram)`` from a Cholesky factorization."""
    try:
        chol = np.linalg.cholesky(state.gram)
    except np.linalg.LinAlgError as exc:
        raise StateCorruptionError("gram matrix is not positive definite") from exc
    return float(2.0 * np.sum(np.log(np.diag(chol))))
