"""Marginalized penalty-barrier envelopes.

``psi_{rho*}`` merges an L1 penalty of slope ``rho*`` with a barrier ``b``:
it follows ``b`` until ``b'`` reaches ``rho*`` (at the breakpoint
``b*'(rho*)``) and continues along the tangent line. The bilateral
envelope eliminates a single shared slack for ``l <= t <= u``; the split
envelope is the sum of two one-sided ones.
"""

from __future__ import annotations

import numpy as np

from .barriers import Barrier, InverseBarrier, LogLikeBarrier, barrier_from_id

__all__ = [
    "SmoothPenalty",
    "psi_value",
    "psi_derivative",
    "marginal_slack",
    "psi_bilateral_slack",
    "psi_bilateral_value",
    "psi_bilateral_derivative",
    "psi_split_value",
    "psi_split_derivative",
]

FOC_RTOL = 1e-6
_BISECT_STEPS = 200


def _scalar_or(res, like):
    return float(res) if np.ndim(like) == 0 else res


class SmoothPenalty:
    """Penalty-barrier envelope for a fixed barrier and ratio ``rho* = alpha/mu``.

    The breakpoint ``b*'(rho*)`` and ``b(breakpoint)`` are computed once.
    All evaluation methods accept scalars or arrays.
    """

    def __init__(self, barrier, rho_star: float):
        if not rho_star > 0:
            raise ValueError(f"rho* must be positive, got {rho_star}")
        self.barrier: Barrier = barrier_from_id(barrier)
        self.rho_star = float(rho_star)
        self.breakpoint = float(self.barrier.conj_d(self.rho_star))
        self._b_at_break = float(self.barrier.value(self.breakpoint))
        self._half = None

    def __repr__(self):
        return f"SmoothPenalty({self.barrier!r}, rho_star={self.rho_star:g})"

    @property
    def half(self) -> "SmoothPenalty":
        """Same barrier at ``rho*/2`` (upper sandwich bound, bracketing)."""
        if self._half is None:
            self._half = SmoothPenalty(self.barrier, self.rho_star / 2.0)
        return self._half

    # -- one-sided ------------------------------------------------------

    def value(self, t):
        ta = np.asarray(t, dtype=float)
        lin = ta > self.breakpoint
        out = np.empty(ta.shape)
        # tangent line written around the breakpoint: rho*(t - rho) + b(rho)
        out[lin] = self.rho_star * (ta[lin] - self.breakpoint) + self._b_at_break
        out[~lin] = self.barrier._b(ta[~lin])
        return _scalar_or(out, t)

    def derivative(self, t):
        ta = np.asarray(t, dtype=float)
        lin = ta > self.breakpoint
        out = np.full(ta.shape, self.rho_star)
        out[~lin] = np.minimum(self.barrier._d1(ta[~lin]), self.rho_star)
        return _scalar_or(out, t)

    def value_derivative(self, t):
        """``(psi(t), psi'(t))`` for an array ``t`` in a single pass."""
        ta = np.asarray(t, dtype=float)
        lin = ta > self.breakpoint
        val = self.rho_star * (ta - self.breakpoint) + self._b_at_break
        der = np.full(ta.shape, self.rho_star)
        if not lin.all():
            tb = ta[~lin]
            val[~lin] = self.barrier._b(tb)
            der[~lin] = np.minimum(self.barrier._d1(tb), self.rho_star)
        return val, der

    def slack(self, t):
        """Optimal one-sided slack ``[t - b*'(rho*)]_+``."""
        return _scalar_or(np.maximum(np.asarray(t, float) - self.breakpoint, 0.0), t)

    # -- bilateral (one shared slack) -------------------------------------

    def _bilateral_args(self, t, l, u):
        """Barrier arguments ``(t-u-s*, l-t-s*)`` and the slack ``s*``."""
        t, l, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, l, u)))
        if np.any(~(l <= u)) or not (np.all(np.isfinite(l)) and np.all(np.isfinite(u))):
            raise ValueError("bilateral penalty needs finite l <= u")
        h = 0.5 * (u - l)
        tc = t - 0.5 * (l + u)
        T = np.abs(tc)
        z = self._closed_form_z(T)
        if z is None:
            z = self._bisect_z(T)
        else:
            bad = ~self._foc_ok(z, T)
            if np.any(bad):
                z = z.copy()
                z[bad] = self._bisect_z(T[bad])
        # z = r - T where r = h + s is the centred half-width of the slackened box
        x_near = -z
        x_far = -2.0 * T - z
        s = z + T - h
        inner = s <= 0
        s = np.where(inner, 0.0, s)
        pos = tc >= 0
        x1 = np.where(pos, x_near, x_far)
        x2 = np.where(pos, x_far, x_near)
        if np.any(inner):
            x1 = np.where(inner, t - u, x1)
            x2 = np.where(inner, l - t, x2)
        return x1, x2, s

    def _closed_form_z(self, T):
        rs = self.rho_star
        b = self.barrier
        if isinstance(b, InverseBarrier) and b.p == 1.0:
            delta = 1.0 / rs + np.sqrt(4.0 * T**2 / rs + 1.0 / rs**2)
            r = np.sqrt(T**2 + delta)
            return delta / (r + T)
        if isinstance(b, LogLikeBarrier):
            delta = 1.0 / rs + (4.0 * T**2 / rs + 1.0 / rs**2) / (
                np.sqrt(T**2 * (1.0 + 4.0 / rs) + 1.0 / rs**2) + T
            )
            w = np.sqrt(T**2 + T + 0.25 + delta)
            return delta / (w + T + 0.5)
        return None

    def _foc_ok(self, z, T):
        with np.errstate(all="ignore"):
            g = self.barrier.d1(-z) + self.barrier.d1(-2.0 * T - z)
            ok = np.abs(g - self.rho_star) <= FOC_RTOL * self.rho_star
        return ok & (z > 0) & np.isfinite(z)

    def _bisect_z(self, T):
        """Solve ``b'(-z) + b'(-2T - z) = rho*`` for ``z > 0`` by bisection in log z."""
        T = np.asarray(T, dtype=float)
        if T.size == 0:
            return T.copy()
        lo = np.full(T.shape, np.log(-self.breakpoint))
        hi = np.full(T.shape, np.log(-self.half.breakpoint))
        d1 = self.barrier.d1
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            z = np.exp(mid)
            g = d1(-z) + d1(-2.0 * T - z)
            above = g > self.rho_star
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 1e-15):
                break
        return np.exp(0.5 * (lo + hi))

    def bilateral_slack(self, t, l, u):
        return _scalar_or(self._bilateral_args(t, l, u)[2], t)

    def bilateral_value(self, t, l, u):
        x1, x2, s = self._bilateral_args(t, l, u)
        b = self.barrier
        return _scalar_or(self.rho_star * s + b._b(x1) + b._b(x2), t)

    def bilateral_derivative(self, t, l, u):
        x1, x2, _ = self._bilateral_args(t, l, u)
        b = self.barrier
        return _scalar_or(b._d1(x1) - b._d1(x2), t)

    def bilateral_value_derivative(self, t, l, u):
        x1, x2, s = self._bilateral_args(t, l, u)
        b = self.barrier
        val = self.rho_star * s + b._b(x1) + b._b(x2)
        return _scalar_or(val, t), _scalar_or(b._d1(x1) - b._d1(x2), t)

    # -- split: two independent one-sided envelopes ---------------------

    def split_value(self, t, l, u):
        t = np.asarray(t, dtype=float)
        return _scalar_or(self.value(t - u) + self.value(l - t), t)

    def split_derivative(self, t, l, u):
        t = np.asarray(t, dtype=float)
        return _scalar_or(self.derivative(t - u) - self.derivative(l - t), t)


# Functional forms mirroring the operation names.


def psi_value(b, rho_star, t):
    return SmoothPenalty(b, rho_star).value(t)


def psi_derivative(b, rho_star, t):
    return SmoothPenalty(b, rho_star).derivative(t)


def marginal_slack(b, rho_star, t):
    return SmoothPenalty(b, rho_star).slack(t)


def psi_bilateral_slack(b, rho_star, l, u, t):
    return SmoothPenalty(b, rho_star).bilateral_slack(t, l, u)


def psi_bilateral_value(b, rho_star, l, u, t):
    return SmoothPenalty(b, rho_star).bilateral_value(t, l, u)


def psi_bilateral_derivative(b, rho_star, l, u, t):
    return SmoothPenalty(b, rho_star).bilateral_derivative(t, l, u)


def psi_split_value(b, rho_star, l, u, t):
    return SmoothPenalty(b, rho_star).split_value(t, l, u)


def psi_split_derivative(b, rho_star, l, u, t):
    return SmoothPenalty(b, rho_star).split_derivative(t, l, u)
