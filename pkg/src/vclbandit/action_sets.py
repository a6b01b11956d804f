"""Per-round action sets and the maximizations run over them.

Three variants are supported: a finite list of actions, the closed unit ball,
and the unit ball clipped by halfspaces ``<a_i, x> <= b_i``.  Linear
maximization is exact for every variant.  UCB-index maximization is an
exhaustive scan for finite sets and projected gradient ascent with restarts
for the convex variants.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .estimator import ConfidenceSchedule, SpdState

NORM_TOL = 1e-12
PROJECTION_TOL = 1e-10
#: Largest number of halfspace active sets enumerated by ``maximize_linear``.
MAX_ACTIVE_SETS = 50_000
#: Offset applied to zero-width starting points of the UCB ascent.
KINK_STEP = 1e-6

#: Vectorized index: maps an ``(n, d)`` array to values ``(n,)`` and gradients ``(n, d)``.
IndexFn = Callable[[np.ndarray], "tuple[np.ndarray, np.ndarray]"]


class EmptyActionSetError(ValueError):
    pass


@dataclass(frozen=True)
class ActionSet:
    kind: str
    dim: int
    points: np.ndarray | None = None
    normals: np.ndarray | None = None
    offsets: np.ndarray | None = None
    interior: np.ndarray | None = None

    @classmethod
    def finite(cls, points) -> "ActionSet":
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.size == 0:
            raise EmptyActionSetError("finite action set has no members")
        norms = np.linalg.norm(P, axis=1)
        if np.any(norms > 1.0 + NORM_TOL):
            raise ValueError(f"finite action of norm {norms.max():.6g} lies outside the unit ball")
        P.setflags(write=False)
        return cls("finite", P.shape[1], points=P)

    @classmethod
    def unit_ball(cls, dim: int) -> "ActionSet":
        if dim < 1:
            raise ValueError("dim must be positive")
        return cls("unit_ball", int(dim), interior=np.zeros(dim))

    @classmethod
    def clipped_ball(cls, normals, offsets, interior=None) -> "ActionSet":
        """Unit ball intersected with ``{x : normals @ x <= offsets}``.

        When ``interior`` is omitted a strictly feasible point is found by a
        Chebyshev-centre linear program over the inscribed cube; the set is
        rejected if none exists.
        """
        A = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.atleast_1d(np.asarray(offsets, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ValueError("normals and offsets disagree on the constraint count")
        dim = A.shape[1]
        if interior is None:
            interior = _chebyshev_interior(A, b)
        z = np.asarray(interior, dtype=float)
        if not (np.all(A @ z < b) and z @ z < 1.0):
            raise ValueError("interior point is not strictly feasible")
        for arr in (A, b, z):
            arr.setflags(write=False)
        return cls("clipped_ball", dim, normals=A, offsets=b, interior=z)

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def diameter(self) -> float:
        return 2.0

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind == "finite":
            return bool(np.any(np.max(np.abs(self.points - x), axis=1) <= tol))
        if x @ x > (1.0 + tol) ** 2:
            return False
        if self.kind == "clipped_ball":
            return bool(np.all(self.normals @ x <= self.offsets + tol))
        return True

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A random member: uniform over a finite set, else uniform in the ball then projected."""
        if self.kind == "finite":
            return self.points[rng.integers(len(self.points))].copy()
        return project(self, uniform_ball(rng, self.dim))


@dataclass
class ConvexOptReport:
    iterations: int
    objective: float
    slack: float
    converged: bool


def uniform_sphere(rng: np.random.Generator, dim: int, size: int | None = None) -> np.ndarray:
    shape = (dim,) if size is None else (size, dim)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def uniform_ball(rng: np.random.Generator, dim: int, size: int | None = None) -> np.ndarray:
    u = uniform_sphere(rng, dim, size)
    r = rng.random(() if size is None else (size, 1)) ** (1.0 / dim)
    return u * r


def _chebyshev_interior(A, b):
    from scipy.optimize import linprog

    m, d = A.shape
    # maximize s subject to a_i.x + s |a_i| <= b_i and |x_j| + s <= 1/sqrt(d)
    cap = 1.0 / math.sqrt(d)
    A_ub = np.hstack([A, np.linalg.norm(A, axis=1, keepdims=True)])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(-cap, cap)] * d + [(0.0, cap)]
    box = np.hstack([np.vstack([np.eye(d), -np.eye(d)]), np.ones((2 * d, 1))])
    res = linprog(
        c,
        A_ub=np.vstack([A_ub, box]),
        b_ub=np.concatenate([b, np.full(2 * d, cap)]),
        bounds=bounds,
        method="highs",
    )
    if res.status != 0 or res.x[-1] <= 1e-9:
        raise EmptyActionSetError("clipped ball has empty interior")
    return res.x[:d]


def _project_ball(X: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(X, axis=-1, keepdims=True)
    return X / np.maximum(n, 1.0)


def _dykstra(action_set: ActionSet, p: np.ndarray, tol: float = PROJECTION_TOL, max_cycles: int = 1_000_000):
    from ._compiled import dykstra

    x, _ = dykstra(np.ascontiguousarray(p, dtype=float), action_set.normals, action_set.offsets, tol, max_cycles)
    return x


def project(action_set: ActionSet, point) -> np.ndarray:
    """Euclidean projection onto a convex action set (rows projected independently)."""
    p = np.asarray(point, dtype=float)
    if action_set.kind == "finite":
        raise ValueError("projection is only defined for convex action sets")
    if p.shape[-1] != action_set.dim:
        raise ValueError(f"point dimension {p.shape[-1]} != {action_set.dim}")
    ball = _project_ball(p)
    if action_set.kind == "unit_ball":
        return ball
    if p.ndim == 2:
        return np.stack([project(action_set, row) for row in p])
    A, b = action_set.normals, action_set.offsets
    if np.all(A @ ball <= b):
        return ball
    return _dykstra(action_set, p)


def _face_candidate(A_S, b_S, c):
    """Maximizer of <c, x> over {A_S x = b_S, |x| <= 1}, with its KKT multipliers."""
    gram = A_S @ A_S.T
    try:
        coef = np.linalg.solve(gram, b_S)
    except np.linalg.LinAlgError:
        return None
    x0 = A_S.T @ coef
    r2 = float(x0 @ x0)
    if r2 > 1.0 + NORM_TOL:
        return None
    u = c - A_S.T @ np.linalg.solve(gram, A_S @ c)
    un = float(np.linalg.norm(u))
    if un > 1e-14 and r2 < 1.0:
        rad = math.sqrt(1.0 - r2)
        x = x0 + rad * u / un
        nu = un / rad
    else:
        x, nu = x0, 0.0
    mu = np.linalg.solve(gram, A_S @ (c - nu * x))
    return x, mu


def _maximize_linear_clipped(action_set: ActionSet, c: np.ndarray):
    A, b = action_set.normals, action_set.offsets
    m, d = A.shape
    x = c / np.linalg.norm(c)
    if np.all(A @ x <= b):
        return x, float(c @ x), 0.0
    n_sets = sum(math.comb(m, k) for k in range(1, min(m, d) + 1))
    if n_sets > MAX_ACTIVE_SETS:
        raise ValueError(f"too many halfspaces ({m}) for exact linear maximization")
    best, best_val, best_gap = None, -math.inf, math.inf
    for k in range(1, min(m, d) + 1):
        for S in itertools.combinations(range(m), k):
            S = list(S)
            cand = _face_candidate(A[S], b[S], c)
            if cand is None:
                continue
            xs, mu = cand
            if not (np.all(A @ xs <= b + 1e-12) and xs @ xs <= 1.0 + 1e-12):
                continue
            val = float(c @ xs)
            if val > best_val + 1e-15:
                # dual bound b.mu + |c - A^T mu| holds for any mu >= 0
                mu = np.maximum(mu, 0.0)
                dual = float(b[S] @ mu + np.linalg.norm(c - A[S].T @ mu))
                best, best_val, best_gap = xs, val, max(dual - val, 0.0)
    if best is None:
        raise EmptyActionSetError("no feasible point found for clipped ball")
    return best, best_val, best_gap


def maximize_linear(action_set: ActionSet, direction):
    """Return ``(x*, <x*, direction>)`` with ``x*`` maximizing the inner product."""
    c = np.asarray(direction, dtype=float)
    if c.shape != (action_set.dim,):
        raise ValueError(f"direction has shape {c.shape}, expected ({action_set.dim},)")
    if action_set.kind == "finite":
        vals = action_set.points @ c
        i = int(np.argmax(vals))
        return action_set.points[i].copy(), float(vals[i])
    cn = float(np.linalg.norm(c))
    if cn == 0.0:
        return action_set.interior.copy(), 0.0
    if action_set.kind == "unit_ball":
        x = c / cn
        return x, cn
    x, val, _gap = _maximize_linear_clipped(action_set, c)
    return x, val


def linear_certificate(action_set: ActionSet, direction) -> float:
    """Duality gap of the clipped-ball linear maximizer (0 for other variants)."""
    c = np.asarray(direction, dtype=float)
    if action_set.kind != "clipped_ball" or not np.any(c):
        return 0.0
    return _maximize_linear_clipped(action_set, c)[2]


def maximize_ucb(
    action_set: ActionSet,
    index: IndexFn,
    slack: float,
    *,
    rng: np.random.Generator | None = None,
    starts=None,
    restarts: int = 3,
    max_iter: int = 10_000,
    step: float = 1.0,
    armijo: float = 1e-4,
    shrink: float = 0.5,
    fast: bool = True,
):
    """Maximize a vectorized index over the action set.

    Convex variants run projected gradient ascent from the interior point, any
    caller-supplied ``starts`` and ``restarts`` random points, all advanced in
    one batch.  Each start keeps its own step size (halved on an Armijo failure,
    doubled on success).  A start stops once its certificate
    ``|P(x + grad) - x| * diameter`` is at most ``slack``.  The returned point is
    the best final iterate.  The certificate bounds the optimality gap when the
    index is concave over the set; otherwise it certifies stationarity only.

    With ``fast`` set, a ``BonusIndex`` over the unit ball runs the same
    iteration in compiled code.
    """
    if slack <= 0:
        raise ValueError("slack must be positive")
    if action_set.kind == "finite":
        vals, _ = index(action_set.points)
        i = int(np.argmax(vals))
        return action_set.points[i].copy(), ConvexOptReport(0, float(vals[i]), 0.0, True)

    rng = np.random.default_rng(0) if rng is None else rng
    rows = [action_set.interior]
    if starts is not None:
        rows.extend(np.atleast_2d(np.asarray(starts, dtype=float)))
    if restarts:
        rows.extend(uniform_ball(rng, action_set.dim, restarts))
    X = project(action_set, np.array(rows, dtype=float))
    if isinstance(index, BonusIndex):
        X = _off_kink(action_set, index, X)
    if fast and action_set.kind == "unit_ball" and isinstance(index, BonusIndex):
        from ._compiled import pga_ball

        it, best, val, cert = pga_ball(
            X, index.est, index.inv, index.constant, index.root_d, index.log_scale, index.code,
            float(slack), int(max_iter), float(step), float(armijo), float(shrink),
        )
        return X[best].copy(), ConvexOptReport(it, val, cert, bool(cert <= slack))
    F, G = index(X)
    F, G = np.array(F, dtype=float), np.array(G, dtype=float)
    eta = np.full(len(X), float(step))
    cert = np.linalg.norm(project(action_set, X + G) - X, axis=1) * action_set.diameter
    active = cert > slack
    it = 0
    while it < max_iter and np.any(active):
        it += 1
        idx = np.flatnonzero(active)
        Xa, Ga, ea = X[idx], G[idx], eta[idx]
        Y = project(action_set, Xa + ea[:, None] * Ga)
        Fy, Gy = index(Y)
        ok = Fy >= F[idx] + armijo * np.einsum("ij,ij->i", Ga, Y - Xa)
        acc = idx[ok]
        X[acc], F[acc], G[acc] = Y[ok], Fy[ok], Gy[ok]
        eta[acc] = np.minimum(eta[acc] * 2.0, 1e6)
        eta[idx[~ok]] *= shrink
        cert[idx] = np.linalg.norm(project(action_set, X[idx] + G[idx]) - X[idx], axis=1) * action_set.diameter
        active = (cert > slack) & (eta > 1e-14)
    best = int(np.argmax(F))
    report = ConvexOptReport(it, float(F[best]), float(cert[best]), bool(cert[best] <= slack))
    return X[best].copy(), report


def _off_kink(action_set: ActionSet, index: "BonusIndex", X: np.ndarray) -> np.ndarray:
    """Nudge zero-width starts, where the bonus is not differentiable.

    There the reported gradient is the estimate alone, so an ascent started
    exactly at the kink can certify a point that every direction improves on.
    """
    if index.constant == 0 or (index.code == 2 and index.root_d == 0):
        return X
    q = np.einsum("ij,jk,ik->i", X, index.inv, X)
    stuck = q <= 0
    if not np.any(stuck):
        return X
    n = float(np.linalg.norm(index.est))
    u = index.est / n if n > 0 else np.eye(action_set.dim)[0]
    X = X.copy()
    X[stuck] = project(action_set, X[stuck] + KINK_STEP * u)
    return X


class BonusIndex:
    """Vectorized index ``<x, est> + c (root_d + level(w)) w`` with its gradient.

    ``mode`` picks the level: ``"smooth"`` is ``sqrt(ln(e + ln+ z))``, ``"max"``
    is ``sqrt(max(1, ln z))`` (``z = exp(log_scale) w^2``) and ``"constant"``
    is zero, giving a fixed-radius bonus ``c root_d w``.  Zero-width rows get
    value ``<x, est>`` and gradient ``est``.  At the kink of a level the
    one-sided derivative from below is used.
    """

    MODES = {"smooth": 0, "max": 1, "constant": 2}

    def __init__(self, estimate, gram_inv, constant, root_d, log_scale=0.0, mode="smooth"):
        self.est = np.array(estimate, dtype=float)
        self.inv = np.array(gram_inv, dtype=float)
        self.constant = float(constant)
        self.root_d = float(root_d)
        self.log_scale = float(log_scale)
        self.mode = mode
        self.code = self.MODES[mode]

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        V = X @ self.inv
        q = np.einsum("ij,ij->i", V, X)
        if np.any(q < -1e-12):
            raise ArithmeticError("negative quadratic form in UCB index")
        w = np.sqrt(np.maximum(q, 0.0))
        pos = w > 0
        safe_w = np.where(pos, w, 1.0)
        if self.code == 2:
            lvl = np.zeros_like(w)
            w_dlvl = lvl
        else:
            log_z = self.log_scale + 2.0 * np.log(safe_w)
            if self.code == 0:
                lp = np.maximum(log_z, 0.0)
                lvl = np.sqrt(np.log(math.e + lp))
                w_dlvl = np.where(log_z > 0, 1.0 / (lvl * (math.e + lp)), 0.0)
            else:
                lvl = np.sqrt(np.maximum(log_z, 1.0))
                w_dlvl = np.where(log_z > 1, 1.0 / lvl, 0.0)
        c = self.constant
        vals = X @ self.est + np.where(pos, c * (self.root_d + lvl) * w, 0.0)
        coef = np.where(pos, c * (self.root_d + lvl + w_dlvl) / safe_w, 0.0)
        grads = self.est + coef[:, None] * V
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(grads))):
            raise ArithmeticError("non-finite UCB index")
        if single:
            return float(vals[0]), grads[0]
        return vals, grads


def ucb_objective(state: SpdState, schedule: ConfidenceSchedule, constant: float, smooth: bool = True) -> BonusIndex:
    """The UCB index ``<x, est> + C (sqrt(d) + alpha(w)) w`` at the current state."""
    return BonusIndex(
        state.estimate,
        state.gram_inv,
        constant,
        math.sqrt(schedule.dim),
        math.log(schedule.scale),
        "smooth" if smooth else "max",
    )


def index_gradient(state: SpdState, schedule: ConfidenceSchedule, constant: float, x):
    """Value and gradient of the smoothed UCB index at ``x``."""
    return ucb_objective(state, schedule, constant, smooth=True)(np.asarray(x, dtype=float))
