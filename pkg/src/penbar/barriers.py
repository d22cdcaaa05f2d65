"""Scalar barrier functions on (-inf, 0), their conjugates and behavior profiles.

Every function here is total on the extended reals: values outside the
domain come back as ``np.inf`` rather than raising, except for the
explicitly checked derivative entry points.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Barrier",
    "InverseBarrier",
    "LogLikeBarrier",
    "ExpBarrier",
    "BARRIER_IDS",
    "barrier_from_id",
    "barrier_value",
    "barrier_derivatives",
    "conjugate",
    "conjugate_derivative",
    "behavior_profile",
    "lambertw",
]

BARRIER_IDS = ("inverse", "inverse_p:<p>", "loglike", "exp")

KAPPA_SENTINEL = 1e12


def _arr(t):
    return np.asarray(t, dtype=float)


def _out(res, t):
    return float(res) if np.ndim(t) == 0 else res


class Barrier:
    """Base class for a barrier ``b`` with ``inf b = 0`` and domain (-inf, 0).

    Subclasses implement the unchecked kernels ``_b``, ``_d1``, ``_d2``,
    ``_conj`` and ``_conj_d`` on arrays already restricted to the domain.
    """

    name = "barrier"

    def value(self, t):
        t = _arr(t)
        out = np.full(t.shape, np.inf)
        neg = t < 0
        if np.any(neg):
            with np.errstate(over="ignore", divide="ignore"):
                out[neg] = self._b(t[neg])
        return _out(out, t)

    def d1(self, t):
        t = _arr(t)
        out = np.full(t.shape, np.inf)
        neg = t < 0
        if np.any(neg):
            with np.errstate(over="ignore", divide="ignore"):
                out[neg] = self._d1(t[neg])
        return _out(out, t)

    def d2(self, t):
        t = _arr(t)
        out = np.full(t.shape, np.inf)
        neg = t < 0
        if np.any(neg):
            with np.errstate(over="ignore", divide="ignore"):
                out[neg] = self._d2(t[neg])
        return _out(out, t)

    def derivatives(self, t):
        """Return ``(b'(t), b''(t))``; raises ``ValueError`` unless ``t < 0``."""
        ta = _arr(t)
        if np.any(~(ta < 0)):
            raise ValueError(f"barrier derivatives need t < 0, got {t!r}")
        return _out(self._d1(ta), t), _out(self._d2(ta), t)

    def conj(self, tau):
        tau = _arr(tau)
        out = np.full(tau.shape, np.inf)
        out[tau == 0] = 0.0
        pos = tau > 0
        if np.any(pos):
            out[pos] = self._conj(tau[pos])
        return _out(out, tau)

    def conj_d(self, tau):
        """``b*'(tau)``: the unique ``t < 0`` with ``b'(t) = tau``."""
        ta = _arr(tau)
        if np.any(~(ta > 0)):
            raise ValueError(f"conjugate derivative needs tau > 0, got {tau!r}")
        return _out(self._conj_d(ta), tau)

    def __repr__(self):
        return f"{type(self).__name__}()"


class InverseBarrier(Barrier):
    """``b(t) = (1/p) (-t)^(-p)``; ``p = 1`` gives ``-1/t``."""

    def __init__(self, p: float = 1.0):
        if not p > 0:
            raise ValueError("inverse barrier needs p > 0")
        self.p = float(p)
        self.q = self.p / (1.0 + self.p)
        self.name = "inverse" if self.p == 1.0 else f"inverse_p:{p:g}"

    def _b(self, t):
        return (-t) ** (-self.p) / self.p

    def _d1(self, t):
        return (-t) ** (-self.p - 1.0)

    def _d2(self, t):
        return (self.p + 1.0) * (-t) ** (-self.p - 2.0)

    def _conj(self, tau):
        return -(tau ** self.q) / self.q

    def _conj_d(self, tau):
        return -(tau ** (-1.0 / (self.p + 1.0)))

    def __repr__(self):
        return f"InverseBarrier(p={self.p:g})"


class LogLikeBarrier(Barrier):
    """``b(t) = ln(1 - 1/t)``, also written ``ln((t-1)/t)``."""

    name = "loglike"

    def _b(self, t):
        return np.log1p(-1.0 / t)

    def _d1(self, t):
        return 1.0 / (t * (t - 1.0))

    def _d2(self, t):
        return (1.0 - 2.0 * t) / (t * (t - 1.0)) ** 2

    def _conj(self, tau):
        a = np.sqrt(tau)
        b = np.sqrt(tau + 4.0)
        return -2.0 * (a / (a + b) + np.log((a + b) / 2.0))

    def _conj_d(self, tau):
        # (1 - sqrt(1 + 4/tau)) / 2 without the cancellation
        return -2.0 / (tau * (1.0 + np.sqrt(1.0 + 4.0 / tau)))


def lambertw(x, tol=1e-12, maxiter=100):
    """Principal branch of Lambert W for ``x >= 0`` by Halley iteration."""
    x = _arr(x)
    w = np.where(x < 1.0, x * (1.0 - x), np.log1p(x))
    w = np.where(x > 3.0, np.log(x) - np.log(np.log(np.maximum(x, 3.0))), w)
    for _ in range(maxiter):
        ew = np.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w = w - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(w))):
            break
    return _out(w, x)


class ExpBarrier(Barrier):
    """``b(t) = exp(-1/t) - 1``; grows too fast near 0 (kappa = inf).

    Shifted by -1 so that ``inf b = 0``; the shift leaves derivatives and
    behavior profiles unchanged. Not meant for solving.
    """

    name = "exp"

    def _b(self, t):
        with np.errstate(over="ignore"):
            return np.expm1(-1.0 / t)

    def _d1(self, t):
        with np.errstate(over="ignore"):
            return np.exp(-1.0 / t) / t**2

    def _d2(self, t):
        with np.errstate(over="ignore"):
            return np.exp(-1.0 / t) * (1.0 - 2.0 * t) / t**4

    def _conj(self, tau):
        w2 = 2.0 * lambertw(np.sqrt(tau) / 2.0)
        return 1.0 - tau / w2 * (1.0 + 1.0 / w2)

    def _conj_d(self, tau):
        return -1.0 / (2.0 * lambertw(np.sqrt(tau) / 2.0))


def barrier_from_id(spec: str) -> Barrier:
    """Build a barrier from ``inverse``, ``inverse_p:<p>``, ``loglike`` or ``exp``."""
    if isinstance(spec, Barrier):
        return spec
    key = str(spec).strip().lower()
    if key == "inverse":
        return InverseBarrier(1.0)
    if key == "loglike":
        return LogLikeBarrier()
    if key == "exp":
        return ExpBarrier()
    if key.startswith("inverse_p:"):
        try:
            p = float(key.split(":", 1)[1])
        except ValueError:
            p = float("nan")
        if p > 0:
            return InverseBarrier(p)
    raise ValueError(
        f"unknown barrier {spec!r}; valid ids are {{{', '.join(BARRIER_IDS)}}}"
    )


def barrier_value(b, t):
    return barrier_from_id(b).value(t)


def barrier_derivatives(b, t):
    return barrier_from_id(b).derivatives(t)


def conjugate(b, tau):
    return barrier_from_id(b).conj(tau)


def conjugate_derivative(b, tau):
    return barrier_from_id(b).conj_d(tau)


def _profile_ratio(b, theta, t):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        r = b.value(theta * t) / (theta * b.value(t))
    return np.where(np.isnan(r), np.inf, r)


def behavior_profile(b, theta: float, mode: str = "asymptotic") -> float:
    """Numerical estimate of the behavior profile ``kappa_b(theta)``.

    ``mode="max"`` returns the sup of ``b(theta t) / (theta b(t))`` over a
    log-spaced grid of ``t`` in ``[-1e6, -1e-12]``. ``mode="asymptotic"``
    samples ``t = -10**-j`` for ``j = 0..12`` and extrapolates the tail half
    to ``t -> 0`` with a fit ``kappa + a / ln(1/|t|)``, which is exact for
    power-law and logarithmic barriers; the raw tail maximum is returned
    when it is already flat. Returns ``inf`` once the ratio exceeds 1e12.
    """
    b = barrier_from_id(b)
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    mode = mode.lower()
    if mode == "max":
        t = -np.logspace(6, -12, 400)
        r = _profile_ratio(b, theta, t)
        if not np.all(np.isfinite(r)) or np.max(r) > KAPPA_SENTINEL:
            return math.inf
        return float(np.max(r))
    if mode != "asymptotic":
        raise ValueError(f"unknown profile mode {mode!r}")
    j = np.arange(13)
    r = _profile_ratio(b, theta, -(10.0 ** (-j)))
    if not np.all(np.isfinite(r)) or np.max(r) > KAPPA_SENTINEL:
        return math.inf
    tail = r[6:]
    if np.ptp(tail) <= 1e-12 * np.max(np.abs(tail)):
        return float(np.max(tail))
    inv_l = 1.0 / (j[6:] * math.log(10.0))
    slope, icept = np.polyfit(inv_l, tail, 1)
    resid = tail - (icept + slope * inv_l)
    if np.max(np.abs(resid)) > 1e-3 * abs(icept):
        return float(np.max(tail))
    return float(icept)
