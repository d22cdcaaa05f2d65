"""Self-check suite: barrier identities, envelope oracles, prox oracles and
finite-difference audits of the shipped problem generators.

Every check returns a :class:`CheckResult`; :func:`run_checks` runs them all.
Barrier objects can be injected, so a deliberately broken barrier makes the
corresponding checks fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .barriers import ExpBarrier, InverseBarrier, LogLikeBarrier, behavior_profile
from .penalty import SmoothPenalty
from .prox import prox_box, prox_halfnorm, prox_l0, prox_l1, prox_unit_sphere

__all__ = ["CheckResult", "run_checks", "default_barriers", "slack_oracle", "prox_oracle"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}"


def default_barriers():
    return [InverseBarrier(), InverseBarrier(2.0), LogLikeBarrier(), ExpBarrier()]


def _rel_err(a, b, floor=0.0):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor), initial=0.0))


# -- barrier identities ------------------------------------------------------

_T_GRID = -np.logspace(-4, 3, 300)


def _grid(b):
    # drop points where b' overflows (the exponential barrier near 0)
    with np.errstate(over="ignore"):
        return _T_GRID[np.isfinite(b.d1(_T_GRID))]


def check_conjugate_identity(b, tol=1e-8):
    """``b*(b'(t)) = t b'(t) - b(t)``."""
    t = _grid(b)
    d = b.d1(t)
    err = _rel_err(b.conj(d), t * d - b.value(t), floor=1e-300)
    return CheckResult(f"conjugate_identity[{b.name}]", err <= tol, f"max rel err {err:.2e}")


def check_conjugate_inverse(b, tol=1e-8):
    """``b*'`` inverts ``b'``."""
    t = _grid(b)
    err = _rel_err(b.conj_d(b.d1(t)), t)
    return CheckResult(f"conjugate_inverse[{b.name}]", err <= tol, f"max rel err {err:.2e}")


def check_conjugate_ratio(b, tol=1e-3):
    """``b*(tau)/tau`` increases towards 0; within ``tol`` of 0 at ``tau = 1e8``
    for the inverse (p = 1) and log-like barriers, whose decay rate is known."""
    tau = np.logspace(0, 8, 60)
    r = b.conj(tau) / tau
    mono = bool(np.all(np.diff(r) >= -1e-14 * np.abs(r[:-1])) and np.all(r <= 0))
    fast = isinstance(b, LogLikeBarrier) or (isinstance(b, InverseBarrier) and b.p == 1.0)
    near = abs(r[-1]) <= tol or not fast
    return CheckResult(f"conjugate_ratio_to_zero[{b.name}]", mono and near,
                       f"ratio at 1e8 = {r[-1]:.2e}")


def check_kappa_table(tol=1e-3):
    bad = []
    for theta in (0.25, 0.5, 0.75):
        k_inv = behavior_profile(InverseBarrier(), theta, "asymptotic")
        k_log = behavior_profile(LogLikeBarrier(), theta, "asymptotic")
        k_exp = behavior_profile(ExpBarrier(), theta, "asymptotic")
        if abs(k_inv - theta**-2) > tol:
            bad.append(f"inverse({theta})={k_inv:.6g}")
        if abs(k_log - 1.0 / theta) > tol:
            bad.append(f"loglike({theta})={k_log:.6g}")
        if not math.isinf(k_exp):
            bad.append(f"exp({theta})={k_exp:.6g}")
    return CheckResult("behavior_profile_table", not bad, "; ".join(bad) or "inverse 1/theta^2, loglike 1/theta, exp inf")


# -- envelope oracles --------------------------------------------------------


def slack_oracle(b, rho_star, lo_terms):
    """Minimize ``rho* s + sum_k b(a_k - s)`` over ``s >= 0`` by brute force.

    ``lo_terms`` are the barrier arguments at ``s = 0``. A log-spaced scan is
    refined by bounded Brent search and polished by Newton steps on the
    scalar objective. Returns ``(value, s)``.
    """
    a = np.asarray(lo_terms, dtype=float)
    s_min = max(0.0, float(np.max(a)))

    def obj(s):
        x = a - s
        if np.any(x >= 0):
            return math.inf
        return rho_star * s + float(np.sum(b.value(x)))

    scale = 1.0 + float(np.max(np.abs(a)))
    cand = s_min + scale * np.logspace(-14, 4, 1200)
    if s_min == 0.0 and np.all(a < 0):
        cand = np.concatenate([[0.0], cand])
    X = a[None, :] - cand[:, None]
    with np.errstate(all="ignore"):
        vals = rho_star * cand + np.sum(np.where(X < 0, b.value(np.minimum(X, -1e-300)), np.inf), axis=1)
    i = int(np.argmin(vals))
    lo = cand[max(i - 1, 0)]
    hi = cand[min(i + 1, cand.size - 1)]
    s = cand[i]
    if hi > lo:
        with np.errstate(all="ignore"):
            res = minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-14 * max(1.0, hi)})
        if res.fun <= vals[i]:
            s = float(res.x)
    for _ in range(30):
        x = a - s
        g = rho_star - float(np.sum(b.d1(x)))
        h = float(np.sum(b.d2(x)))
        if not (np.isfinite(g) and h > 0):
            break
        s_new = s - g / h
        if s_new <= s_min:
            s_new = 0.5 * (s + s_min)
        if s_new < 0:
            s_new = 0.0
        if abs(s_new - s) <= 1e-16 * max(1.0, s):
            s = s_new
            break
        s = s_new
    if s_min == 0.0 and np.all(a < 0) and obj(0.0) <= obj(s):
        s = 0.0
    return obj(s), s


def _close(x, y, tol):
    return abs(x - y) <= tol * max(1.0, abs(y))


def check_psi_oracle(b, n_cases=500, seed=0, tol=1e-6):
    """One-sided, bilateral and split envelopes against :func:`slack_oracle`."""
    rng = np.random.default_rng(seed)
    worst = {"one": 0.0, "bil": 0.0, "split": 0.0}
    fails = 0
    for _ in range(n_cases):
        rho = float(10 ** rng.uniform(-1.5, 3))
        pen = SmoothPenalty(b, rho)
        t = float(rng.uniform(-4, 4))
        # one-sided
        v_or, s = slack_oracle(b, rho, [t])
        d_or = float(b.d1(t - s))
        v, d = pen.value(t), pen.derivative(t)
        e = max(abs(v - v_or) / max(1, abs(v_or)), abs(d - d_or) / max(1, abs(d_or)))
        worst["one"] = max(worst["one"], e)
        fails += not (_close(v, v_or, tol) and _close(d, d_or, tol))
        # bilateral, including equalities
        l = float(rng.uniform(-2, 2))
        u = l if rng.random() < 0.25 else l + float(rng.uniform(0, 3))
        tb = float(rng.uniform(l - 3, u + 3))
        v_or, s = slack_oracle(b, rho, [tb - u, l - tb])
        d_or = float(b.d1(tb - u - s) - b.d1(l - tb - s))
        v, d = pen.bilateral_value_derivative(tb, l, u)
        e = max(abs(v - v_or) / max(1, abs(v_or)), abs(d - d_or) / max(1, abs(d_or)))
        worst["bil"] = max(worst["bil"], e)
        fails += not (_close(v, v_or, tol) and _close(d, d_or, tol))
        # split: two independent one-sided envelopes
        v1, s1 = slack_oracle(b, rho, [tb - u])
        v2, s2 = slack_oracle(b, rho, [l - tb])
        v_or = v1 + v2
        d_or = float(b.d1(tb - u - s1) - b.d1(l - tb - s2))
        v, d = pen.split_value(tb, l, u), pen.split_derivative(tb, l, u)
        e = max(abs(v - v_or) / max(1, abs(v_or)), abs(d - d_or) / max(1, abs(d_or)))
        worst["split"] = max(worst["split"], e)
        fails += not (_close(v, v_or, tol) and _close(d, d_or, tol))
    detail = f"{n_cases} cases x3, worst rel err " + ", ".join(f"{k} {w:.1e}" for k, w in worst.items())
    return CheckResult(f"envelope_oracles[{b.name}]", fails == 0, detail)


def check_sandwich(b, rtol=1e-10):
    """``psi(|t| - h) <= psi^[l,u](t + c) <= 2 psi_{rho*/2}(|t| - h)``."""
    bad = 0
    total = 0
    for rho in (0.25, 1.0, 4.0, 16.0, 64.0):
        pen = SmoothPenalty(b, rho)
        for h in (0.0, 0.5, 1.0, 2.0):
            for c in (-1.0, 0.0, 2.0):
                t = np.linspace(-4.0, 4.0, 41)
                lo_b = pen.value(np.abs(t) - h)
                mid = pen.bilateral_value(t + c, c - h, c + h)
                up_b = 2.0 * pen.half.value(np.abs(t) - h)
                slack = rtol * np.maximum(1.0, np.abs(mid))
                bad += int(np.sum(lo_b > mid + slack) + np.sum(mid > up_b + slack))
                total += t.size
    return CheckResult(f"sandwich[{b.name}]", bad == 0, f"{bad} violations on {total} grid points")


def check_monotone_limits(b):
    """``psi_{rho*}`` rises with ``rho*`` below ``b``; ``psi_{rho*}/rho*`` falls towards ``[t]_+``."""
    rhos = np.array([1.0, 4.0, 16.0, 64.0, 256.0])
    t = np.linspace(-3.0, 3.0, 121)
    P = np.array([SmoothPenalty(b, r).value(t) for r in rhos])
    ok = bool(np.all(np.diff(P, axis=0) >= -1e-12 * np.maximum(1, np.abs(P[1:]))))
    neg = t < 0
    ok &= bool(np.all(P[:, neg] <= b.value(t[neg]) * (1 + 1e-12) + 1e-12))
    R = P / rhos[:, None]
    ok &= bool(np.all(np.diff(R, axis=0) <= 1e-12 * np.maximum(1, np.abs(R[1:]))))
    gap = float(np.max(np.abs(R[-1] - np.maximum(t, 0.0))))
    bound = 2.0 * abs(float(b.conj(rhos[-1]))) / rhos[-1]
    ok &= gap <= bound
    return CheckResult(f"monotone_limits[{b.name}]", ok, f"limit gap {gap:.2e} (bound {bound:.2e})")


# -- prox oracles ------------------------------------------------------------


def prox_oracle(phi, gamma, x, width=None):
    """Brute-force scalar prox: dense scan plus bounded refinement of
    ``phi(z) + (z - x)^2 / (2 gamma)``; returns the minimal objective value."""
    width = width or (abs(x) + 2.0)
    obj = lambda z: phi(z) + (z - x) ** 2 / (2.0 * gamma)  # noqa: E731
    grid = np.linspace(x - width, x + width, 4001)
    grid = np.concatenate([grid, [0.0]])
    vals = np.array([obj(z) for z in grid])  # phi may be a plain scalar function
    i = int(np.argmin(vals))
    best = vals[i]
    if i < grid.size - 1:
        step = grid[1] - grid[0]
        with np.errstate(all="ignore"):
            res = minimize_scalar(obj, bounds=(grid[i] - step, grid[i] + step), method="bounded",
                                  options={"xatol": 1e-13})
        best = min(best, res.fun)
    return best


def check_prox_oracles(n_cases=200, seed=1, tol=1e-6):
    rng = np.random.default_rng(seed)
    bad = []
    for _ in range(n_cases):
        gamma = float(10 ** rng.uniform(-2, 0.5))
        x = float(rng.uniform(-4, 4))
        lam = float(10 ** rng.uniform(-1.5, 0.5))
        cases = [
            ("halfnorm", lambda z: lam * math.sqrt(abs(z)), float(prox_halfnorm(gamma, np.array([x]), lam)[0])),
            ("l1", lambda z: lam * abs(z), float(prox_l1(lam, gamma, np.array([x]))[0])),
            ("l0", lambda z: lam * (z != 0.0), float(prox_l0(lam, gamma, np.array([x]))[0])),
            ("box", lambda z: 0.0 if -1.0 <= z <= 0.5 else math.inf, float(prox_box(-1.0, 0.5, gamma, np.array([x]))[0])),
        ]
        for name, phi, z in cases:
            got = phi(z) + (z - x) ** 2 / (2.0 * gamma)
            if name == "l0":
                ref = min(lam + 0.0, x * x / (2.0 * gamma))
            else:
                ref = prox_oracle(phi, gamma, x)
            if got > ref + tol * max(1.0, abs(ref)):
                bad.append(f"{name}(gamma={gamma:.3g}, x={x:.3g})")
    # sphere projection: the closest point among many random unit vectors is never closer
    for _ in range(20):
        v = rng.standard_normal(4)
        z = prox_unit_sphere(1.0, v)
        cloud = rng.standard_normal((2000, 4))
        cloud /= np.linalg.norm(cloud, axis=1, keepdims=True)
        if np.min(np.linalg.norm(cloud - v, axis=1)) < np.linalg.norm(z - v) - 1e-12:
            bad.append("sphere")
    return CheckResult("prox_oracles", not bad, f"{len(bad)} failures" + (f": {bad[:3]}" if bad else ""))


# -- finite-difference audits ---------------------------------------------------


def fd_audit(problem, x, seed=0, h=1e-6):
    """Relative errors of ``grad f`` and ``Jc^T v`` against central differences
    along a random direction."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(problem.n)
    d /= np.linalg.norm(d)
    f0, g0 = problem.smooth(x)
    fp, _ = problem.smooth(x + h * d)
    fm, _ = problem.smooth(x - h * d)
    fd = (fp - fm) / (2 * h)
    err_f = abs(fd - float(g0 @ d)) / max(1.0, abs(fd))
    v = rng.standard_normal(problem.n_rows)
    cp = problem.cons(x + h * d) @ v
    cm = problem.cons(x - h * d) @ v
    fd_c = (cp - cm) / (2 * h)
    an_c = float(problem.jac_t(x, v) @ d)
    err_c = abs(fd_c - an_c) / max(1.0, abs(fd_c))
    return err_f, err_c


def check_fd_audits(tol=1e-5):
    from .bench.problems import make_instance

    bad = []
    specs = [("nonneg_pca", {"n": 8}), ("degenerate", {}), ("eq_qp", {"m": 2}),
             ("matrix_completion", {"nu": 4, "nm": 5, "na": 2}), ("rosenbrock", {}),
             ("rosenbrock_eq", {})]
    for fam, params in specs:
        for seed in range(3):
            prob, x0 = make_instance(fam, seed, **params)
            x = np.asarray(x0, float) * 0.5 + 0.1
            ef, ec = fd_audit(prob, x, seed)
            if ef > tol or ec > tol:
                bad.append(f"{fam}/{seed}: f {ef:.1e}, c {ec:.1e}")
    return CheckResult("finite_difference_audits", not bad, "; ".join(bad) or "6 families x 3 seeds")


def run_checks(barriers=None, n_cases=500, seed=0):
    """Run the whole suite; returns ``(results, seconds)``."""
    t0 = time.perf_counter()
    barriers = default_barriers() if barriers is None else list(barriers)
    out = []
    for b in barriers:
        out += [check_conjugate_identity(b), check_conjugate_inverse(b), check_conjugate_ratio(b),
                check_psi_oracle(b, n_cases, seed), check_sandwich(b), check_monotone_limits(b)]
    out += [check_kappa_table(), check_prox_oracles(), check_fd_audits()]
    return out, time.perf_counter() - t0
