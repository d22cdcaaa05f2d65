"""Seeded problem generators.

Every generator is a pure function of its parameters and seed and returns
``(ProblemSpec, x0)`` (the equality QP returns both formulations).
"""

from __future__ import annotations

import math

import numpy as np

from ..model import ProblemSpec, split_equalities
from ..prox import Box, HalfNorm, L0Norm, NonPos, RowSpheres, SeparableSum, UnitSphere, Zero

__all__ = [
    "FAMILIES",
    "gen_nonneg_pca",
    "gen_degenerate",
    "gen_eq_qp",
    "gen_matrix_completion",
    "gen_rosenbrock",
    "load_ratings",
    "make_instance",
]

FAMILIES = ("nonneg_pca", "degenerate", "eq_qp", "matrix_completion", "rosenbrock", "rosenbrock_eq")


def _rng(seed):
    return np.random.default_rng(np.uint64(seed))


def gen_nonneg_pca(n, sigma_n, sigma_s, seed):
    """Leading nonnegative direction of ``Z = sqrt(sigma_n) z z^T + N`` on the unit sphere."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not sigma_n > 0:
        raise ValueError("sigma_n must be positive")
    if not 0 < sigma_s < 1:
        raise ValueError("sigma_s must lie in (0, 1)")
    rng = _rng(seed)
    nnz = math.ceil(sigma_s * n)
    w = rng.standard_normal(n)
    z = np.zeros(n)
    keep = np.argsort(-np.abs(w), kind="stable")[:nnz]
    z[keep] = np.abs(w[keep])
    z /= np.linalg.norm(z)
    N = np.triu(rng.normal(0.0, 1.0 / math.sqrt(n), (n, n)), 1)
    N = N + N.T
    Z = math.sqrt(sigma_n) * np.outer(z, z) + N
    x0 = rng.uniform(0.0, 3.0, n)
    x0 /= np.linalg.norm(x0)

    def smooth(x):
        Zx = Z @ x
        return -float(x @ Zx), -2.0 * Zx

    prob = ProblemSpec(
        n=n, smooth=smooth, g=UnitSphere(),
        cons=lambda x: -x, jac_t=lambda x, v: -v,
        lower=np.full(n, -np.inf), upper=np.zeros(n),
        name=f"nonneg_pca-n{n}-s{seed}",
        meta={"family": "nonneg_pca", "n": n, "sigma_n": sigma_n, "sigma_s": sigma_s,
              "seed": int(seed)},
    )
    prob.data = {"Z": Z, "z": z}
    return prob, x0


def gen_degenerate(seed):
    """``min x1`` over ``x2 >= 0``, ``x1^2 + x2 <= 0``: feasible set ``{(0, 0)}``, no multiplier."""
    rng = _rng(seed)
    x0 = rng.normal(0.0, 30.0, 2)
    prob = ProblemSpec(
        n=2,
        smooth=lambda x: (float(x[0]), np.array([1.0, 0.0])),
        g=SeparableSum([(1, Zero()), (1, Box(0.0, np.inf))]),
        cons=lambda x: np.array([x[0] ** 2 + x[1]]),
        jac_t=lambda x, v: v[0] * np.array([2.0 * x[0], 1.0]),
        lower=[-np.inf], upper=[0.0],
        name=f"degenerate-s{seed}",
        meta={"family": "degenerate", "seed": int(seed)},
    )
    return prob, x0


def _sparse_normal(rng, shape, density):
    M = rng.standard_normal(shape)
    return M * (rng.random(shape) < density)


def gen_eq_qp(n, m, seed, density=0.1):
    """Box-constrained QP with ``m`` equality rows ``Ax = b``; returns
    ``(native, split, x0)``."""
    if m < 1 or n < 1:
        raise ValueError("need n, m >= 1")
    rng = _rng(seed)
    M = _sparse_normal(rng, (n, n), density)
    Q = 0.5 * (M + M.T)
    q = rng.standard_normal(n)
    lo = -rng.uniform(0.0, 1.0, n)
    hi = rng.uniform(0.0, 1.0, n)
    A = _sparse_normal(rng, (m, n), density)
    for i in np.flatnonzero(~A.any(axis=1)):
        # an all-zero row would make the constraint vacuous
        A[i, rng.integers(n)] = rng.standard_normal()
    x_hat = lo + (hi - lo) * rng.uniform(0.0, 1.0, n)
    b = A @ x_hat
    x0 = rng.standard_normal(n)

    def smooth(x):
        Qx = Q @ x
        return 0.5 * float(x @ Qx) + float(q @ x), Qx + q

    native = ProblemSpec(
        n=n, smooth=smooth, g=Box(lo, hi),
        cons=lambda x: A @ x - b, jac_t=lambda x, v: A.T @ v,
        lower=np.zeros(m), upper=np.zeros(m),
        name=f"eq_qp-m{m}-s{seed}",
        meta={"family": "eq_qp", "n": n, "m": m, "seed": int(seed)},
    )
    native.data = {"Q": Q, "q": q, "A": A, "b": b, "lo": lo, "hi": hi, "x_hat": x_hat}
    return native, split_equalities(native), x0


def load_ratings(path, n_users=None):
    """Read a whitespace separated ``user item rating`` file into ``{(i, j): r}``
    with users and items renumbered from 0 in order of appearance."""
    ratings, users, items = {}, {}, {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise ValueError(f"{path}:{lineno}: expected 'user item rating'")
            try:
                r = float(parts[2])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: rating {parts[2]!r} is not a number") from None
            u, it = parts[0], parts[1]
            if u not in users:
                if n_users is not None and len(users) >= n_users:
                    continue
                users[u] = len(users)
            items.setdefault(it, len(items))
            ratings.setdefault((users[u], items[it]), r)
    if not ratings:
        raise ValueError(f"{path}: no ratings found")
    return ratings, len(users), len(items)


def gen_matrix_completion(nu=10, nm=20, na=3, density=0.3, lam=1e-2, seed=0,
                          ratings=None, y_min=1.0, y_max=5.0):
    """Bounded low-rank factorization ``U V^T`` of a partially observed rating matrix.

    Variables are ``U`` (``nu x na``, unit rows) then ``V`` (``nm x na``,
    L0-regularized), both flattened row-major. Every entry of ``U V^T`` is a
    two-sided row, observed ones with the tighter band ``[Y-1, Y+1]``.
    ``ratings`` optionally names a ``user item rating`` file.
    """
    rng = _rng(seed)
    if ratings is not None:
        obs, nu, nm = load_ratings(ratings, n_users=nu)
        Y = np.full((nu, nm), np.nan)
        for (i, j), r in obs.items():
            Y[i, j] = r
        mask = ~np.isnan(Y)
    else:
        r = math.ceil(na / 2)
        R = rng.standard_normal((nu, r)) @ rng.standard_normal((nm, r)).T
        span = R.max() - R.min()
        R = y_min + (y_max - y_min) * (R - R.min()) / (span if span > 0 else 1.0)
        Y = np.clip(np.rint(R), y_min, y_max)
        mask = rng.random((nu, nm)) < density
        if not mask.any():
            mask[0, 0] = True
    n_obs = int(mask.sum())
    lo = np.full((nu, nm), y_min)
    hi = np.full((nu, nm), y_max)
    lo[mask] = np.maximum(y_min, Y[mask] - 1.0)
    hi[mask] = np.minimum(y_max, Y[mask] + 1.0)
    Yobs = np.where(mask, Y, 0.0)
    nU = nu * na

    def split(x):
        return x[:nU].reshape(nu, na), x[nU:].reshape(nm, na)

    def smooth(x):
        U, V = split(x)
        E = (U @ V.T - Yobs) * mask
        G = (2.0 / n_obs) * E
        return float(np.sum(E * E)) / n_obs, np.concatenate([(G @ V).ravel(), (G.T @ U).ravel()])

    def cons(x):
        U, V = split(x)
        return (U @ V.T).ravel()

    def jac_t(x, v):
        U, V = split(x)
        W = v.reshape(nu, nm)
        return np.concatenate([(W @ V).ravel(), (W.T @ U).ravel()])

    U0 = rng.standard_normal((nu, na))
    U0 /= np.linalg.norm(U0, axis=1, keepdims=True)
    V0 = rng.standard_normal((nm, na))
    x0 = np.concatenate([U0.ravel(), V0.ravel()])
    prob = ProblemSpec(
        n=na * (nu + nm), smooth=smooth,
        g=SeparableSum([(nU, RowSpheres(nu, na)), (nm * na, L0Norm(lam / nm))]),
        cons=cons, jac_t=jac_t, lower=lo.ravel(), upper=hi.ravel(),
        name=f"matrix_completion-u{nu}-m{nm}-a{na}-s{seed}",
        meta={"family": "matrix_completion", "nu": nu, "nm": nm, "na": na,
              "density": density, "lam": lam, "seed": int(seed)},
    )
    prob.data = {"Y": Y, "mask": mask}
    return prob, x0


ROSEN_C = np.array([-0.25, 0.25])
ROSEN_R = 0.5


def _rosen_f(x):
    q = x[1] + 1.0 - (x[0] + 1.0) ** 2
    return 100.0 * q * q, np.array([-400.0 * q * (x[0] + 1.0), 200.0 * q])


def _rosen_c(x):
    d = x - ROSEN_C
    return ROSEN_R**2 - float(d @ d)


def gen_rosenbrock(variant="inequality", seed=0):
    """Nonsmooth Rosenbrock outside a disc; ``variant="equality"`` adds a
    nonpositive variable ``z`` and imposes ``c(x) - z = 0``."""
    rng = _rng(seed)
    if variant == "inequality":
        x0 = rng.uniform(-5.0, 5.0, 2)
        while not _rosen_c(x0) < 0:
            x0 = rng.uniform(-5.0, 5.0, 2)
        prob = ProblemSpec(
            n=2, smooth=_rosen_f, g=HalfNorm(),
            cons=lambda x: np.array([_rosen_c(x)]),
            jac_t=lambda x, v: -2.0 * v[0] * (x - ROSEN_C),
            lower=[-np.inf], upper=[0.0],
            name=f"rosenbrock-s{seed}",
            meta={"family": "rosenbrock", "seed": int(seed)},
        )
        return prob, x0
    if variant == "equality":
        x0 = rng.uniform(-5.0, 5.0, 2)
        x0 = np.append(x0, min(_rosen_c(x0), 0.0))

        def smooth(w):
            f, gf = _rosen_f(w[:2])
            return f, np.append(gf, 0.0)

        prob = ProblemSpec(
            n=3, smooth=smooth, g=SeparableSum([(2, HalfNorm()), (1, NonPos())]),
            cons=lambda w: np.array([_rosen_c(w[:2]) - w[2]]),
            jac_t=lambda w, v: v[0] * np.append(-2.0 * (w[:2] - ROSEN_C), -1.0),
            lower=[0.0], upper=[0.0],
            name=f"rosenbrock_eq-s{seed}",
            meta={"family": "rosenbrock_eq", "seed": int(seed)},
        )
        return prob, x0
    raise ValueError(f"unknown Rosenbrock variant {variant!r}; valid: inequality, equality")


def make_instance(family, seed, **params):
    """Dispatch by family name; returns ``(ProblemSpec, x0)``."""
    if family == "nonneg_pca":
        return gen_nonneg_pca(params.get("n") or 10, params.get("sigma_n") or 1.0,
                              params.get("sigma_s") or 0.5, seed)
    if family == "degenerate":
        return gen_degenerate(seed)
    if family == "eq_qp":
        m = params.get("m") or 1
        native, _, x0 = gen_eq_qp(params.get("n") or 10 * m, m, seed)
        return native, x0
    if family == "matrix_completion":
        keys = ("nu", "nm", "na", "density", "lam", "ratings")
        return gen_matrix_completion(seed=seed, **{k: params[k] for k in keys if params.get(k) is not None})
    if family == "rosenbrock":
        return gen_rosenbrock("inequality", seed)
    if family == "rosenbrock_eq":
        return gen_rosenbrock("equality", seed)
    raise ValueError(f"unknown family {family!r}; valid families: {', '.join(FAMILIES)}")
