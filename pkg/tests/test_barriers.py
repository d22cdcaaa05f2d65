import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from penbar.barriers import (
    ExpBarrier,
    InverseBarrier,
    LogLikeBarrier,
    barrier_derivatives,
    barrier_from_id,
    barrier_value,
    behavior_profile,
    conjugate,
    conjugate_derivative,
    lambertw,
)

BARRIERS = [InverseBarrier(1.0), InverseBarrier(2.0), InverseBarrier(0.5), LogLikeBarrier(), ExpBarrier()]


def brute_conj(b, tau):
    # sup_t {t tau - b(t)} by dense grid then golden refinement
    t = -np.logspace(-4, 4, 20001)
    v = t * tau - b.value(t)
    i = int(np.argmax(v))
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]
    phi = (math.sqrt(5) - 1) / 2
    for _ in range(200):
        a = hi - phi * (hi - lo)
        c = lo + phi * (hi - lo)
        if a * tau - b.value(a) > c * tau - b.value(c):
            hi = c
        else:
            lo = a
    m = 0.5 * (lo + hi)
    return m * tau - b.value(m)


def test_value_examples():
    assert barrier_value("inverse", -2.0) == pytest.approx(0.5)
    assert barrier_value("loglike", -1.0) == pytest.approx(math.log(2))
    assert barrier_value("inverse", 0.5) == math.inf
    assert barrier_value("loglike", 0.0) == math.inf


def test_derivative_examples():
    d1, d2 = barrier_derivatives("inverse", -2.0)
    assert d1 == pytest.approx(0.25) and d2 == pytest.approx(0.25)
    assert barrier_derivatives("loglike", -1.0)[0] == pytest.approx(0.5)
    assert barrier_derivatives("inverse", -1.0)[0] == pytest.approx(1.0)
    b = InverseBarrier()
    h = 1e-6
    assert (b.value(-2 + h) - b.value(-2 - h)) / (2 * h) == pytest.approx(0.25, rel=1e-6)
    with pytest.raises(ValueError):
        barrier_derivatives("inverse", 0.0)


def test_conjugate_examples():
    assert conjugate("inverse", 4.0) == pytest.approx(-4.0)
    assert conjugate("loglike", 0.0) == 0.0
    assert conjugate("inverse", 1.0) == pytest.approx(-2.0)
    assert brute_conj(InverseBarrier(), 1.0) == pytest.approx(-2.0, abs=1e-8)
    assert conjugate("inverse", -1.0) == math.inf


def test_conjugate_derivative_examples():
    assert conjugate_derivative("inverse", 4.0) == pytest.approx(-0.5)
    b = InverseBarrier()
    assert b.conj(4.0) == pytest.approx(b.conj_d(4.0) * 4 - b.value(b.conj_d(4.0)))
    assert conjugate_derivative("inverse", 1.0) == pytest.approx(-1.0)
    assert conjugate_derivative("loglike", 0.5) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        conjugate_derivative("loglike", 0.0)


def test_behavior_profile_examples():
    assert behavior_profile("inverse", 0.5) == pytest.approx(4.0, abs=1e-6)
    assert behavior_profile("loglike", 0.5) == pytest.approx(2.0, abs=1e-3)
    assert behavior_profile("exp", 0.5) == math.inf
    with pytest.raises(ValueError):
        behavior_profile("inverse", 1.0)


@pytest.mark.parametrize("theta", [0.25, 0.5, 0.75])
def test_profile_table(theta):
    assert behavior_profile("inverse", theta) == pytest.approx(theta ** -2, abs=1e-3)
    assert behavior_profile("loglike", theta) == pytest.approx(1 / theta, abs=1e-3)
    assert behavior_profile("inverse", theta, "max") == pytest.approx(theta ** -2, rel=1e-6)


def test_ids():
    assert isinstance(barrier_from_id("inverse_p:2"), InverseBarrier)
    assert barrier_from_id("inverse_p:2").p == 2.0
    for bad in ["bogus", "inverse_p:-1", "inverse_p:x"]:
        with pytest.raises(ValueError, match="inverse_p:<p>"):
            barrier_from_id(bad)


@pytest.mark.parametrize("b", BARRIERS, ids=repr)
def test_positivity_and_fd(b):
    t = -np.logspace(4, -6, 200)
    if isinstance(b, ExpBarrier):
        t = t[t < -2e-3]  # b' underflows to 0 closer to the origin
    v, d1, d2 = b.value(t), b.d1(t), b.d2(t)
    assert np.all(v > 0) and np.all(d1 > 0) and np.all(d2 > 0)
    h = 1e-6 * np.abs(t)
    fd = (b.value(t + h) - b.value(t - h)) / (2 * h)
    np.testing.assert_allclose(d1, fd, rtol=1e-5)
    fd2 = (b.d1(t + h) - b.d1(t - h)) / (2 * h)
    np.testing.assert_allclose(d2, fd2, rtol=1e-5)


@pytest.mark.parametrize("b", BARRIERS[:4], ids=repr)
def test_conjugate_identity_and_inverse(b):
    tau = np.logspace(-4, 4, 100)
    s = b.conj_d(tau)
    np.testing.assert_allclose(b.conj(tau), s * tau - b.value(s), rtol=1e-8)
    np.testing.assert_allclose(b.d1(s), tau, rtol=1e-8)
    assert np.all(b.conj_d(tau) < 0)
    assert np.all(np.diff(b.conj(tau)) < 0)


@pytest.mark.parametrize("b", BARRIERS, ids=repr)
def test_brute_force_conjugate(b):
    for tau in np.logspace(-2, 2, 20):
        assert b.conj(tau) == pytest.approx(brute_conj(b, tau), abs=1e-5)


@pytest.mark.parametrize("b", [InverseBarrier(1.0), LogLikeBarrier()], ids=repr)
def test_conjugate_ratio_monotone(b):
    tau = np.logspace(-6, 8, 300)
    r = b.conj(tau) / tau
    assert np.all(np.diff(r) > 0) and np.all(r < 0)
    assert abs(b.conj(1e8) / 1e8) < 1e-3


def test_limits():
    for b in BARRIERS:
        assert b.value(-1e9) < 1e-3
        assert b.value(-1e-2) > b.value(-1e-1)


@given(st.floats(1e-6, 1e6))
def test_lambertw(x):
    w = lambertw(x)
    assert w * math.exp(w) == pytest.approx(x, rel=1e-11)


@settings(max_examples=200)
@given(st.floats(1e-3, 1e3), st.sampled_from(["inverse", "inverse_p:3", "loglike"]))
def test_fenchel_young(tau, bid):
    # b(t) + b*(tau) >= t tau on a sampled t, with equality at b*'(tau)
    b = barrier_from_id(bid)
    for t in (-0.1, -1.0, -10.0):
        assert b.value(t) + b.conj(tau) >= t * tau - 1e-9 * (1 + abs(t * tau))
