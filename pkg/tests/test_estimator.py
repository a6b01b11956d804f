import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vclbandit import estimator
from vclbandit.estimator import ConfidenceSchedule, StateCorruptionError, alpha, init_state, log_det, update, width


def ball_points(rng, n, d):
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random((n, 1)) ** (1 / d)


def replay(actions, rewards, d):
    gram = np.eye(d) + sum((np.outer(x, x) for x in actions), np.zeros((d, d)))
    moment = sum((r * x for x, r in zip(actions, rewards)), np.zeros(d))
    return gram, moment


# --- init_state -------------------------------------------------------------


def test_init_three():
    s = init_state(3)
    assert np.array_equal(s.gram, np.eye(3))
    assert np.array_equal(s.estimate, np.zeros(3))
    assert s.t == 0


def test_init_one():
    s = init_state(1)
    assert s.gram.tolist() == [[1.0]] and s.gram_inv.tolist() == [[1.0]]


def test_init_eight_width_is_norm():
    s = init_state(8)
    assert np.linalg.det(s.gram) == 1.0
    assert width(s, np.eye(8)[0]) == 1.0


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_init_rejects(bad):
    with pytest.raises(ValueError):
        init_state(bad)


# --- update -----------------------------------------------------------------


def test_update_single_sample():
    s = update(init_state(2), [1.0, 0.0], 1.0)
    assert np.allclose(s.gram, np.diag([2.0, 1.0]))
    assert np.allclose(s.estimate, [0.5, 0.0])
    assert s.t == 1


def test_update_zero_action_is_noop():
    s = update(init_state(2), [0.0, 0.0], 0.5)
    assert np.array_equal(s.gram, np.eye(2))
    assert np.array_equal(s.estimate, np.zeros(2))
    assert s.t == 1


def test_inverse_tracks_dense_inverse(rng):
    s = init_state(6)
    for x in ball_points(rng, 50, 6):
        update(s, x, rng.standard_normal())
        assert np.max(np.abs(s.gram_inv - np.linalg.inv(s.gram))) <= 1e-8


@pytest.mark.parametrize(
    "action",
    [[1.0, 0.0, 0.0], [np.nan, 0.0], [np.inf, 0.0], [0.8, 0.8]],
    ids=["dim-mismatch", "nan", "inf", "outside-ball"],
)
def test_update_rejects(action):
    with pytest.raises(ValueError):
        update(init_state(2), action, 0.0)


def test_update_rejects_nonfinite_reward():
    with pytest.raises(ValueError):
        update(init_state(2), [1.0, 0.0], math.nan)


def test_update_accepts_norm_at_tolerance():
    x = np.array([1.0 + 5e-13, 0.0])
    update(init_state(2), x, 0.0)


def test_state_invariants_after_replay(rng):
    d, n = 5, 300
    X = ball_points(rng, n, d)
    r = rng.standard_normal(n)
    s = init_state(d)
    for x, y in zip(X, r):
        update(s, x, y)
    gram, moment = replay(X, r, d)
    assert np.allclose(s.gram, gram, rtol=0, atol=1e-10)
    assert np.allclose(s.moment, moment, rtol=0, atol=1e-10)
    assert s.inverse_deviation() <= 1e-8
    assert np.allclose(s.estimate, s.gram_inv @ s.moment, rtol=1e-10, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(s.gram)) >= 1 - 1e-12
    assert log_det(s) <= d * math.log((n + d) / d)


def test_periodic_refactor_resets_counter(rng):
    s = init_state(3)
    for x in ball_points(rng, estimator.REFACTOR_EVERY, 3):
        update(s, x, 0.1)
    assert s.since_refactor == 0
    assert s.t == estimator.REFACTOR_EVERY


def test_drift_triggers_refactor():
    s = init_state(3)
    s.gram_inv[0, 0] += 1e-6  # simulated drift
    update(s, [0.6, 0.0, 0.0], 1.0)
    assert s.since_refactor == 0
    assert s.inverse_deviation() <= 1e-12


def test_refactor_detects_indefinite_gram():
    s = init_state(2)
    s.gram[:] = [[1.0, 2.0], [2.0, 1.0]]
    with pytest.raises(StateCorruptionError):
        estimator.refactor(s)


def test_copy_is_independent():
    s = init_state(2)
    c = s.copy()
    update(c, [1.0, 0.0], 1.0)
    assert s.t == 0 and np.array_equal(s.gram, np.eye(2))


# --- width ------------------------------------------------------------------


def test_width_fresh_is_norm(rng):
    s = init_state(4)
    x = ball_points(rng, 1, 4)[0]
    assert width(s, x) == pytest.approx(np.linalg.norm(x), abs=1e-15)


def test_width_after_one_update():
    s = update(init_state(2), [1.0, 0.0], 0.0)
    assert width(s, [1.0, 0.0]) == pytest.approx(math.sqrt(0.5), abs=1e-15)


def test_width_matches_dense_solve(rng):
    s = init_state(5)
    for x in ball_points(rng, 30, 5):
        update(s, x, 0.0)
    for x in ball_points(rng, 20, 5):
        ref = math.sqrt(x @ np.linalg.solve(s.gram, x))
        assert abs(width(s, x) - ref) <= 1e-9
    X = ball_points(rng, 7, 5)
    assert np.allclose(estimator.widths(s, X), [width(s, x) for x in X], atol=1e-15)


def test_width_bounded_by_norm(rng):
    s = init_state(3)
    for x in ball_points(rng, 40, 3):
        update(s, x, 0.0)
    for x in ball_points(rng, 50, 3):
        assert 0 <= width(s, x) <= np.linalg.norm(x) + 1e-15


def test_width_of_zero_is_zero():
    assert width(init_state(3), np.zeros(3)) == 0.0


def test_width_clamps_tiny_negative_and_rejects_large():
    s = init_state(2)
    s.gram_inv[:] = [[-5e-13, 0.0], [0.0, 1.0]]
    assert width(s, [1.0, 0.0]) == 0.0
    s.gram_inv[:] = [[-1e-6, 0.0], [0.0, 1.0]]
    with pytest.raises(StateCorruptionError):
        width(s, [1.0, 0.0])
    with pytest.raises(StateCorruptionError):
        estimator.widths(s, [[1.0, 0.0]])


# --- alpha ------------------------------------------------------------------


def test_schedule_validation():
    with pytest.raises(ValueError):
        ConfidenceSchedule(1, 2)
    with pytest.raises(ValueError):
        ConfidenceSchedule(10, 0)
    assert ConfidenceSchedule(1024, 4).scale == pytest.approx(1024 * math.log(1024) / 4)


@pytest.mark.parametrize("T,d", [(10, 1), (1024, 4), (10**6, 50)])
def test_alpha_floor(T, d):
    sch = ConfidenceSchedule(T, d)
    omega = math.sqrt(math.e * d / (T * math.log(T)))  # z = e
    for w in (omega, omega / 2, omega / 100):
        assert alpha(sch, w) == 1.0
    # the smoothed level sits at its floor only while z <= 1
    assert alpha(sch, omega / math.sqrt(math.e), smooth=True) == pytest.approx(1.0, abs=1e-15)
    assert alpha(sch, omega, smooth=True) > 1.0


def test_alpha_at_e4():
    T, d = 4096, 3
    sch = ConfidenceSchedule(T, d)
    omega = math.sqrt(math.exp(4) * d / (T * math.log(T)))
    assert alpha(sch, omega) == pytest.approx(2.0, abs=1e-12)


def test_alpha_high_precision_reference():
    mpmath.mp.dps = 50
    T, d, w = 1024, 4, mpmath.mpf("0.5")
    ref = mpmath.sqrt(mpmath.log(T * mpmath.log(T) * w**2 / d))
    assert abs(alpha(ConfidenceSchedule(T, d), 0.5) - float(ref)) <= 1e-9
    assert float(ref) == pytest.approx(2.4688, abs=1e-4)


def test_alpha_vectorized_and_monotone():
    sch = ConfidenceSchedule(1000, 5)
    w = np.linspace(1e-4, 1, 500)
    for smooth in (False, True):
        a = alpha(sch, w, smooth=smooth)
        assert a.shape == w.shape
        assert np.all(np.diff(a) >= 0)
        assert np.all(a >= 1.0 - 1e-15)


@pytest.mark.parametrize("w", [0.0, -0.1, math.nan])
def test_alpha_rejects_nonpositive(w):
    with pytest.raises(ValueError):
        alpha(ConfidenceSchedule(100, 2), w)


def test_alpha_smooth_vs_max_grid():
    """Upper comparison holds on the whole grid; the lower one fails once ln z exceeds ~1.44.

    The failure is a property of the smoothed formula itself, not of the
    clamp: where the clamp is active both levels equal 1.
    """
    omegas = np.geomspace(1e-3, 1, 200)
    lower_violations = []
    for T in (10**2, 10**4, 10**6):
        for d in (1, 5, 50):
            sch = ConfidenceSchedule(T, d)
            a = alpha(sch, omegas)
            a_s = alpha(sch, omegas, smooth=True)
            assert np.all(a_s <= 2 * a + 1e-12)
            log_z = math.log(sch.scale) + 2 * np.log(omegas)
            bad = a > a_s + 1e-12
            lower_violations.extend(log_z[bad])
            # clamp active: identical floors
            assert np.all(a[log_z <= 0] == 1.0) and np.allclose(a_s[log_z <= 0], 1.0)
            # violations are exactly the points with ln z > ln(e + ln z)
            expected = log_z > np.log(math.e + np.maximum(log_z, 0)) + 1e-12
            assert np.array_equal(bad, expected & (log_z > 1))
    print(f"lower comparison violated at {len(lower_violations)} grid points, min ln z = {min(lower_violations):.4f}")
    assert lower_violations and min(lower_violations) > 1.4


# --- log_det ----------------------------------------------------------------


def test_log_det_examples():
    assert log_det(init_state(5)) == 0.0
    s = update(init_state(2), [1.0, 0.0], 0.0)
    assert log_det(s) == pytest.approx(math.log(2), abs=1e-15)


def test_log_det_unit_vectors_bound(rng):
    d, T = 4, 100
    s = init_state(d)
    X = rng.standard_normal((T, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    for x in X:
        update(s, x, 0.0)
    direct = math.log(np.linalg.det(s.gram))
    assert log_det(s) == pytest.approx(direct, rel=1e-12)
    assert s.logdet == pytest.approx(direct, rel=1e-10)
    # trace bound: tr(gram) <= d + T for unit-norm actions
    assert log_det(s) <= d * math.log((T + d) / d)
    # the (T+1)/d form is exceeded by this isotropic trajectory
    assert log_det(s) > d * math.log((T + 1) / d)


def test_determinant_bound_counterexample():
    """Two orthogonal unit actions in d=2 break det <= ((T+1)/d)^d."""
    s = init_state(2)
    update(s, [1.0, 0.0], 0.0)
    update(s, [0.0, 1.0], 0.0)
    assert log_det(s) == pytest.approx(2 * math.log(2))
    assert log_det(s) > 2 * math.log(3 / 2)
    assert log_det(s) <= 2 * math.log((2 + 2) / 2) + 1e-15


def test_log_det_trace_bound_before_d_updates(rng):
    d = 6
    s = init_state(d)
    for x in ball_points(rng, 3, d):
        update(s, x, 0.0)
        assert 0 <= log_det(s) <= d * math.log(np.trace(s.gram) / d) + 1e-12


def test_log_det_rejects_corruption():
    s = init_state(2)
    s.gram[:] = [[0.0, 1.0], [1.0, 0.0]]
    with pytest.raises(StateCorruptionError):
        log_det(s)


# --- properties -------------------------------------------------------------

unit_rows = st.integers(1, 6).flatmap(
    lambda d: arrays(np.float64, st.tuples(st.integers(1, 40), st.just(d)), elements=st.floats(-1, 1))
)


def _to_ball(X):
    n = np.linalg.norm(X, axis=1, keepdims=True)
    return X / np.maximum(n, 1.0)


@given(unit_rows)
def test_property_inverse_equivalence(X):
    X = _to_ball(X)
    s = init_state(X.shape[1])
    for x in X:
        update(s, x, 1.0)
    assert s.inverse_deviation() <= 1e-8


@given(unit_rows, arrays(np.float64, 6, elements=st.floats(-1, 1)))
def test_property_width_monotone(X, probe):
    X = _to_ball(X)
    d = X.shape[1]
    y = probe[:d]
    s = init_state(d)
    prev = width(s, y)
    for x in X:
        update(s, x, 0.0)
        cur = width(s, y)
        assert cur <= prev + 1e-12
        prev = cur


@given(unit_rows)
def test_property_elliptical_potential(X):
    X = _to_ball(X)
    s = init_state(X.shape[1])
    lhs = 0.0
    for x in X:
        lhs += width(s, x) ** 2
        update(s, x, 0.0)
    assert lhs <= 2 * log_det(s) + 1e-9


def test_harmonic_case():
    s = init_state(3)
    total = 0.0
    for _ in range(3):
        total += width(s, [1.0, 0, 0]) ** 2
        update(s, [1.0, 0, 0], 0.0)
    assert total == pytest.approx(11 / 6, abs=1e-14)
    assert 2 * log_det(s) == pytest.approx(2 * math.log(4), abs=1e-14)
