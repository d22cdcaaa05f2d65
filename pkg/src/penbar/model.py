"""Problem data model and the smooth penalty-barrier subproblem.

A problem is ``minimize f(x) + g(x)  s.t.  l <= c(x) <= u`` with ``f``
smooth, ``g`` prox-friendly and ``c`` smooth, the Jacobian being used only
through its transpose action ``v -> Jc(x)^T v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .barriers import barrier_from_id
from .penalty import SmoothPenalty
from .prox import ProxFriendly

__all__ = [
    "EvaluationError",
    "ProblemSpec",
    "Subproblem",
    "split_equalities",
    "subproblem_eval",
    "multipliers",
    "UPPER",
    "LOWER",
    "TWO_SIDED",
    "EQUALITY",
]

UPPER, LOWER, TWO_SIDED, EQUALITY = "upper", "lower", "two_sided", "equality"


class EvaluationError(ArithmeticError):
    """Raised when an oracle returns a nonfinite value."""


def classify_rows(lower, upper):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape:
        raise ValueError("lower and upper bounds differ in shape")
    if np.any(lower == np.inf) or np.any(upper == -np.inf):
        raise ValueError("need l_i < inf and u_i > -inf")
    if np.any(lower > upper):
        raise ValueError("need l_i <= u_i")
    lf, uf = np.isfinite(lower), np.isfinite(upper)
    if np.any(~lf & ~uf):
        raise ValueError("free rows (both bounds infinite) are not allowed")
    kinds = np.empty(lower.shape, dtype=object)
    kinds[~lf & uf] = UPPER
    kinds[lf & ~uf] = LOWER
    kinds[lf & uf & (lower < upper)] = TWO_SIDED
    kinds[lf & uf & (lower == upper)] = EQUALITY
    return kinds


@dataclass
class ProblemSpec:
    """``minimize f(x) + g(x)`` subject to ``lower <= c(x) <= upper``.

    ``smooth(x)`` returns ``(f(x), grad f(x))``; ``cons(x)`` returns ``c(x)``
    and ``jac_t(x, v)`` returns ``Jc(x)^T v``.
    """

    n: int
    smooth: Callable
    g: ProxFriendly
    cons: Callable
    jac_t: Callable
    lower: np.ndarray
    upper: np.ndarray
    name: str = "problem"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        self.kinds = classify_rows(self.lower, self.upper)
        k = self.kinds
        self.idx_upper = np.flatnonzero(k == UPPER)
        self.idx_lower = np.flatnonzero(k == LOWER)
        self.idx_bilateral = np.flatnonzero((k == TWO_SIDED) | (k == EQUALITY))
        self.idx_eq = np.flatnonzero(k == EQUALITY)
        self.idx_ineq = np.flatnonzero(k != EQUALITY)

    @property
    def n_rows(self) -> int:
        return self.lower.size

    @property
    def m(self) -> int:
        """Inequality rows (one-sided and two-sided)."""
        return self.idx_ineq.size

    @property
    def m_eq(self) -> int:
        return self.idx_eq.size

    def objective(self, x) -> float:
        return float(self.smooth(x)[0]) + float(self.g(x))

    def violation(self, c) -> float:
        """``max`` over rows of the distance of ``c_i`` to ``[l_i, u_i]``."""
        c = np.asarray(c, dtype=float)
        if c.size == 0:
            return 0.0
        d = np.maximum(np.maximum(c - self.upper, self.lower - c), 0.0)
        return float(np.max(d))

    def split_multipliers(self, w):
        """Turn signed row weights ``w`` (``grad = grad f + Jc^T w``) into
        ``(y, y_eq)``: ``y`` holds one entry per inequality row, sign-flipped
        on lower-only rows so that it is nonnegative for one-sided rows."""
        w = np.asarray(w, dtype=float)
        y = w[self.idx_ineq].copy()
        y[self.kinds[self.idx_ineq] == LOWER] *= -1.0
        return y, w[self.idx_eq].copy()

    def merge_multipliers(self, y, y_eq):
        w = np.zeros(self.n_rows)
        y = np.asarray(y, dtype=float)
        sign = np.where(self.kinds[self.idx_ineq] == LOWER, -1.0, 1.0)
        w[self.idx_ineq] = sign * y
        w[self.idx_eq] = np.asarray(y_eq, dtype=float)
        return w

    def complementarity(self, c, y) -> float:
        """``max_i min{y_i, [c_i - u_i]_-}`` over inequality rows.

        Lower rows use ``l_i - c_i``. A two-sided row's signed multiplier is
        split as ``y_u = [y]_+`` (upper side) and ``y_l = [y]_-`` (lower side),
        each paired with the slack of its own side.
        """
        c = np.asarray(c, dtype=float)[self.idx_ineq]
        y = np.asarray(y, dtype=float)
        if y.size == 0:
            return 0.0
        lo, up = self.lower[self.idx_ineq], self.upper[self.idx_ineq]
        kinds = self.kinds[self.idx_ineq]
        with np.errstate(invalid="ignore"):
            slack_up = np.maximum(up - c, 0.0)
            slack_lo = np.maximum(c - lo, 0.0)
        s = np.zeros(y.size)
        one_up = kinds == UPPER
        one_lo = kinds == LOWER
        two = kinds == TWO_SIDED
        s[one_up] = np.minimum(y[one_up], slack_up[one_up])
        s[one_lo] = np.minimum(y[one_lo], slack_lo[one_lo])
        s[two] = np.maximum(
            np.minimum(np.maximum(y[two], 0.0), slack_up[two]),
            np.minimum(np.maximum(-y[two], 0.0), slack_lo[two]),
        )
        return max(float(np.max(s)), 0.0)


def split_equalities(problem: ProblemSpec) -> ProblemSpec:
    """Rewrite every two-sided or equality row as two one-sided rows.

    Rows keep their original order for the one-sided part, then the upper
    halves and the lower halves of the split rows are appended.
    """
    keep = np.concatenate([problem.idx_upper, problem.idx_lower])
    keep.sort()
    dup = problem.idx_bilateral
    nk, nd = keep.size, dup.size

    def cons(x):
        c = problem.cons(x)
        return np.concatenate([c[keep], c[dup], c[dup]])

    def jac_t(x, v):
        w = np.zeros(problem.n_rows)
        w[keep] = v[:nk]
        w[dup] = v[nk:nk + nd] + v[nk + nd:]
        return problem.jac_t(x, w)

    lower = np.concatenate([problem.lower[keep], np.full(nd, -np.inf), problem.lower[dup]])
    upper = np.concatenate([problem.upper[keep], problem.upper[dup], np.full(nd, np.inf)])
    return ProblemSpec(
        n=problem.n,
        smooth=problem.smooth,
        g=problem.g,
        cons=cons,
        jac_t=jac_t,
        lower=lower,
        upper=upper,
        name=problem.name + "[split]",
        meta=dict(problem.meta, formulation="split"),
    )


class Subproblem:
    """Smooth part ``F(x) = f(x) + mu * sum_i psi_i(c_i(x))`` for fixed ``(alpha, mu)``.

    One-sided rows use ``psi_{alpha/mu}`` (lower rows by reflection), two-sided
    and equality rows the shared-slack bilateral envelope. ``n_evals`` counts
    calls to :meth:`eval`.
    """

    def __init__(self, problem: ProblemSpec, barrier, alpha: float, mu: float):
        if not (alpha > 0 and mu > 0):
            raise ValueError("alpha and mu must be positive")
        self.problem = problem
        self.alpha = float(alpha)
        self.mu = float(mu)
        self.barrier = barrier_from_id(barrier)
        self.penalty = SmoothPenalty(self.barrier, self.alpha / self.mu)
        self.n_evals = 0

    def row_terms(self, c):
        """Per-row penalty values and signed weights ``w = mu * psi'``."""
        p = self.problem
        pen = self.penalty
        val = np.zeros(p.n_rows)
        w = np.zeros(p.n_rows)
        if p.idx_upper.size:
            v, d = pen.value_derivative(c[p.idx_upper] - p.upper[p.idx_upper])
            val[p.idx_upper] = v
            w[p.idx_upper] = self.mu * d
        if p.idx_lower.size:
            v, d = pen.value_derivative(p.lower[p.idx_lower] - c[p.idx_lower])
            val[p.idx_lower] = v
            w[p.idx_lower] = -self.mu * d
        if p.idx_bilateral.size:
            ib = p.idx_bilateral
            v, d = pen.bilateral_value_derivative(c[ib], p.lower[ib], p.upper[ib])
            val[ib] = v
            w[ib] = self.mu * d
        return val, w

    def eval(self, x):
        """Return ``(F(x), grad F(x))``."""
        self.n_evals += 1
        with np.errstate(over="ignore", invalid="ignore"):
            f, gf = self.problem.smooth(x)
            c = np.asarray(self.problem.cons(x), dtype=float)
            if not (np.isfinite(f) and np.all(np.isfinite(c))):
                raise EvaluationError("nonfinite objective or constraint value")
            val, w = self.row_terms(c)
            F = float(f) + self.mu * float(np.sum(val))
            grad = np.asarray(gf, dtype=float)
            if w.size:
                grad = grad + self.problem.jac_t(x, w)
        if not (np.isfinite(F) and np.all(np.isfinite(grad))):
            raise EvaluationError("nonfinite subproblem value or gradient")
        return F, grad

    __call__ = eval

    def multipliers(self, x, c=None):
        """``(y, y_eq)`` at ``x``; see :meth:`ProblemSpec.split_multipliers`."""
        if c is None:
            c = np.asarray(self.problem.cons(x), dtype=float)
        _, w = self.row_terms(c)
        return self.problem.split_multipliers(w)


def subproblem_eval(sp: Subproblem, x):
    return sp.eval(x)


def multipliers(sp: Subproblem, x):
    return sp.multipliers(x)
