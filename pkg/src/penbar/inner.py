"""Proximal-gradient inner solvers for ``minimize F(x) + g(x)``.

Both solvers certify their output with the forward-backward residual::

    xb = prox_{gamma g}(x - gamma grad F(x))
    r  = || (x - xb) / gamma + grad F(xb) - grad F(x) ||

``(x - xb)/gamma - grad F(x)`` is a subgradient of ``g`` at ``xb``, so ``r``
bounds the distance of zero from the subdifferential of ``F + g`` at
``xb``. Only local smoothness of ``F`` is assumed; stepsizes come from
backtracking, never from a global Lipschitz constant.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .model import EvaluationError

__all__ = [
    "InnerConfig",
    "InnerResult",
    "stationarity_residual",
    "solve_inner",
    "estimate_stepsize",
    "CONVERGED",
    "MAX_ITERS",
    "EVAL_FAILURE",
]

CONVERGED, MAX_ITERS, EVAL_FAILURE = "converged", "max_iters", "eval_failure"
SPECTRAL, ACCEL = "spectral", "accel"
INNER_IDS = (SPECTRAL, ACCEL)

GAMMA_MIN, GAMMA_MAX = 1e-12, 1e12


@dataclass
class InnerConfig:
    epsilon: float = 1e-6
    max_iters: int = 100000
    gamma_init: float | None = None
    variant: str = SPECTRAL
    nonmonotone_memory: int = 10
    lbfgs_memory: int = 5

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("inner tolerance must be positive")
        if self.nonmonotone_memory < 1 or self.lbfgs_memory < 1:
            raise ValueError("memories must be >= 1")
        if self.variant not in INNER_IDS:
            raise ValueError(f"unknown inner solver {self.variant!r}; valid ids are {set(INNER_IDS)}")


@dataclass
class InnerResult:
    x: np.ndarray
    residual: float
    iters: int
    grad_evals: int
    status: str
    gamma: float = math.nan
    # forward-backward base point: x == prox(x_pre - gamma grad F(x_pre))
    x_pre: np.ndarray | None = None
    ref_history: list = field(default_factory=list)


def stationarity_residual(fun, g, x, gamma, fx=None):
    """Forward-backward step from ``x`` and its residual.

    ``fun(x)`` returns ``(F, grad F)``; ``fx`` may carry that pair for ``x``.
    Returns ``(xb, r)``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    F, dF = fun(x) if fx is None else fx
    xb, _ = g.prox(x - gamma * dF, gamma)
    _, dFb = fun(xb)
    return xb, float(np.linalg.norm((x - xb) / gamma + dFb - dF))


def estimate_stepsize(fun, x, dF, seed=0):
    """``1/L`` from a finite-difference curvature probe along a random direction."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(x.shape)
    d /= np.linalg.norm(d) or 1.0
    h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    probe = _try(fun, x + h * d)
    if probe is None:
        return 1.0
    L = float(np.linalg.norm(probe[1] - dF)) / h
    if not np.isfinite(L) or L <= 0:
        return 1.0
    return float(np.clip(1.0 / L, 1e-8, 1e4))


def _try(fun, x):
    """``fun(x)``, or ``None`` when the oracle is nonfinite there (a trial
    point to be rejected by the line search)."""
    try:
        return fun(x)
    except EvaluationError:
        return None


class _Counted:
    def __init__(self, fun):
        self.fun = fun
        self.count = 0

    def __call__(self, x):
        self.count += 1
        return self.fun(x)


def solve_inner(fun, g, x0, cfg: InnerConfig) -> InnerResult:
    """Find an ``cfg.epsilon``-stationary point of ``F + g`` starting at ``x0``.

    ``fun`` is typically a :class:`~penbar.model.Subproblem`; ``x0`` must lie
    in ``dom g``.
    """
    cf = _Counted(fun)
    x = np.array(x0, dtype=float)
    try:
        if cfg.variant == ACCEL:
            res = _accelerated(cf, g, x, cfg)
        else:
            res = _spectral(cf, g, x, cfg)
    except EvaluationError:
        res = InnerResult(x=x, residual=math.inf, iters=0, grad_evals=0, status=EVAL_FAILURE)
    res.grad_evals = cf.count
    return res


def _spectral(fun, g, x, cfg):
    sigma = 1e-4
    F, dF = fun(x)
    gx = g(x)
    gamma = cfg.gamma_init or estimate_stepsize(fun, x, dF)
    hist = deque([F + gx], maxlen=cfg.nonmonotone_memory)
    refs = []
    xb, r = x, math.inf
    for it in range(1, cfg.max_iters + 1):
        ref = max(hist)
        refs.append(ref)
        while True:
            xb, gb = g.prox(x - gamma * dF, gamma)
            out = _try(fun, xb)
            d = xb - x
            dd = float(d @ d)
            if out is not None:
                Fb, dFb = out
                if Fb + gb <= ref - sigma / (2.0 * gamma) * dd + 1e-15 * abs(ref):
                    break
            if gamma <= GAMMA_MIN:
                if out is None:
                    raise EvaluationError("nonfinite oracle even at the smallest stepsize")
                break
            gamma = max(gamma / 2.0, GAMMA_MIN)
        y = dFb - dF
        r = float(np.linalg.norm(-d / gamma + y))
        if r <= cfg.epsilon:
            return InnerResult(xb, r, it, 0, CONVERGED, gamma, x, refs)
        sy = float(d @ y)
        gamma_next = dd / sy if sy > 0 else 2.0 * gamma
        x_prev, gamma_prev = x, gamma
        x, F, dF = xb, Fb, dFb
        hist.append(Fb + gb)
        gamma = float(np.clip(gamma_next, GAMMA_MIN, GAMMA_MAX))
    return InnerResult(xb, r, cfg.max_iters, 0, MAX_ITERS, gamma_prev, x_prev, refs)


class _LBFGS:
    def __init__(self, memory):
        self.S = deque(maxlen=memory)
        self.Y = deque(maxlen=memory)

    def reset(self):
        self.S.clear()
        self.Y.clear()

    def update(self, s, y):
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            self.S.append(s)
            self.Y.append(y)

    def apply(self, v):
        """Approximate inverse-Jacobian product by the two-loop recursion."""
        if not self.S:
            return None
        q = v.copy()
        alphas = []
        for s, y in zip(reversed(self.S), reversed(self.Y)):
            rho = 1.0 / float(s @ y)
            a = rho * float(s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        s, y = self.S[-1], self.Y[-1]
        q *= float(s @ y) / float(y @ y)
        for a, rho, s, y in reversed(alphas):
            b = rho * float(y @ q)
            q += (a - b) * s
        return q


def _accelerated(fun, g, x, cfg):
    """PANOC-style iteration: quasi-Newton steps on the forward-backward
    envelope, with the plain prox-gradient step as the fallback (tau = 0)."""
    ub = 0.95  # quadratic upper bound constant
    sigma = 0.5 * (1.0 - ub)
    lb = _LBFGS(cfg.lbfgs_memory)
    F, dF = fun(x)
    gamma = cfg.gamma_init or estimate_stepsize(fun, x, dF)

    def fb(z, Fz, dFz, shrink=True):
        # forward-backward step from z, shrinking gamma until the upper bound
        # holds; without ``shrink`` a failed bound returns None instead
        nonlocal gamma
        while True:
            zb, gzb = g.prox(z - gamma * dFz, gamma)
            out = _try(fun, zb)
            d = zb - z
            dd = float(d @ d)
            if out is not None:
                Fzb, dFzb = out
                if Fzb <= Fz + float(dFz @ d) + ub / (2.0 * gamma) * dd + 1e-15 * abs(Fz):
                    break
            if not shrink:
                return None
            if gamma <= GAMMA_MIN:
                if out is None:
                    raise EvaluationError("nonfinite oracle even at the smallest stepsize")
                break
            gamma = max(gamma / 2.0, GAMMA_MIN)
        fbe = Fz + gzb + float(dFz @ d) + dd / (2.0 * gamma)
        return zb, gzb, Fzb, dFzb, d, dd, fbe

    xb, gb, Fb, dFb, d, dd, fbe = fb(x, F, dF)
    r = math.inf
    refs = []
    for it in range(1, cfg.max_iters + 1):
        r = float(np.linalg.norm(-d / gamma + dFb - dF))
        if r <= cfg.epsilon:
            return InnerResult(xb, r, it, 0, CONVERGED, gamma, x, refs)
        refs.append(fbe)
        R = -d / gamma
        qn = lb.apply(R)
        gamma_here = gamma
        tau = 1.0 if qn is not None else 0.0
        while True:
            if tau > 0.0:
                # quasi-Newton trial; rejected (tau halved) when the oracle is
                # nonfinite there or the local upper bound fails at this gamma
                xn = x + (1.0 - tau) * d - tau * qn
                trial = _try(fun, xn)
                out = None if trial is None else fb(xn, *trial, shrink=False)
                if out is not None and out[6] <= fbe - sigma / gamma * dd:
                    Fn, dFn = trial
                    break
                tau = tau / 2.0 if tau > 1.0 / 256 else 0.0
                continue
            xn, Fn, dFn = xb, Fb, dFb
            out = fb(xn, Fn, dFn)
            break
        if gamma != gamma_here:
            # stepsize shrank on the fallback step: restart from x with the new gamma
            xb, gb, Fb, dFb, d, dd, fbe = fb(x, F, dF)
            continue
        xbn, gbn, Fbn, dFbn, dn, ddn, fben = out
        lb.update(xn - x, -dn / gamma - R)
        x, F, dF = xn, Fn, dFn
        xb, gb, Fb, dFb, d, dd, fbe = xbn, gbn, Fbn, dFbn, dn, ddn, fben
    r = float(np.linalg.norm(-d / gamma + dFb - dF))
    return InnerResult(xb, r, cfg.max_iters, 0, MAX_ITERS, gamma, x, refs)
