"""Proximal mappings for the nonsmooth cost term ``g``.

Each ``prox_*`` function returns the proximal point
``argmin_z g(z) + ||z - x||^2 / (2 gamma)``. The ``ProxFriendly`` classes
bundle a prox with the value of ``g`` so solvers can evaluate the merit
``F + g`` at the returned point without a second pass.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "prox_box",
    "prox_unit_sphere",
    "prox_l1",
    "prox_l0",
    "prox_halfnorm",
    "prox_zero",
    "prox_nonpos",
    "prox_separable_product",
    "ProxFriendly",
    "Zero",
    "Box",
    "NonPos",
    "UnitSphere",
    "RowSpheres",
    "L1Norm",
    "L0Norm",
    "HalfNorm",
    "SeparableSum",
]

SPHERE_TOL = 1e-8


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError(f"prox stepsize must be positive, got {gamma}")


def prox_zero(gamma, x):
    _check_gamma(gamma)
    return np.array(x, dtype=float, copy=True)


def prox_box(l, u, gamma, x):
    _check_gamma(gamma)
    return np.clip(np.asarray(x, dtype=float), l, u)


def prox_nonpos(gamma, x):
    _check_gamma(gamma)
    return np.minimum(np.asarray(x, dtype=float), 0.0)


def prox_unit_sphere(gamma, x):
    """Projection onto ``{||z|| = 1}``; ``x = 0`` maps to the first basis vector."""
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        z = np.zeros_like(x)
        z.flat[0] = 1.0
        return z
    return x / nrm


def prox_l1(lam, gamma, x):
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - lam * gamma, 0.0)


def prox_l0(lam, gamma, x):
    """Hard thresholding at ``sqrt(2 gamma lam)``; ties go to zero."""
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > np.sqrt(2.0 * gamma * lam), x, 0.0)


def prox_halfnorm(gamma, x, lam=1.0):
    """Elementwise prox of ``lam * sum_i sqrt(|x_i|)``.

    Closed form ``(2/3) x {1 + cos[(2/3) arccos(-(g/4) (3/|x|)^(3/2))]}`` with
    ``g = gamma * lam``, above the threshold ``(3/2) g^(2/3)``; zero below.
    At the threshold both candidates tie and zero is returned.
    """
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    gl = gamma * lam
    ax = np.abs(x)
    big = ax > 1.5 * gl ** (2.0 / 3.0)
    out = np.zeros_like(x)
    if np.any(big):
        xb = x[big]
        arg = -(gl / 4.0) * (3.0 / np.abs(xb)) ** 1.5
        out[big] = (2.0 / 3.0) * xb * (1.0 + np.cos((2.0 / 3.0) * np.arccos(arg)))
    return out


def prox_separable_product(parts, gamma, x):
    """Apply block proxes; ``parts`` is a sequence of ``(size, prox_fn)``
    where ``prox_fn(gamma, block)`` returns the block's proximal point."""
    _check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    i = 0
    for size, fn in parts:
        out[i:i + size] = fn(gamma, x[i:i + size])
        i += size
    if i != x.size:
        raise ValueError(f"blocks cover {i} entries, vector has {x.size}")
    return out


class ProxFriendly:
    """A function ``g`` with a cheap proximal mapping.

    ``g(x)`` evaluates the (extended real) value; ``prox(x, gamma)`` returns
    ``(z, g(z))``.
    """

    def __call__(self, x) -> float:
        raise NotImplementedError

    def prox(self, x, gamma):
        raise NotImplementedError


class Zero(ProxFriendly):
    def __call__(self, x):
        return 0.0

    def prox(self, x, gamma):
        return prox_zero(gamma, x), 0.0


class Box(ProxFriendly):
    """Indicator of ``[lower, upper]`` (entries may be infinite)."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if np.any(self.lower > self.upper):
            raise ValueError("box needs lower <= upper")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.all(x >= self.lower) and np.all(x <= self.upper)
        return 0.0 if inside else np.inf

    def prox(self, x, gamma):
        return prox_box(self.lower, self.upper, gamma, x), 0.0


class NonPos(ProxFriendly):
    """Indicator of the nonpositive orthant."""

    def __call__(self, x):
        return 0.0 if np.all(np.asarray(x) <= 0.0) else np.inf

    def prox(self, x, gamma):
        return prox_nonpos(gamma, x), 0.0


class UnitSphere(ProxFriendly):
    def __call__(self, x):
        return 0.0 if abs(np.linalg.norm(x) - 1.0) <= SPHERE_TOL else np.inf

    def prox(self, x, gamma):
        return prox_unit_sphere(gamma, x), 0.0


class RowSpheres(ProxFriendly):
    """Each row of an ``(nrows, ncols)`` matrix (flattened row-major) on the unit sphere."""

    def __init__(self, nrows, ncols):
        self.shape = (int(nrows), int(ncols))

    def __call__(self, x):
        nrm = np.linalg.norm(np.reshape(x, self.shape), axis=1)
        return 0.0 if np.all(np.abs(nrm - 1.0) <= SPHERE_TOL) else np.inf

    def prox(self, x, gamma):
        _check_gamma(gamma)
        X = np.array(np.reshape(x, self.shape), dtype=float)
        nrm = np.linalg.norm(X, axis=1)
        zero = nrm == 0.0
        X[~zero] /= nrm[~zero, None]
        X[zero] = 0.0
        X[zero, 0] = 1.0
        return X.ravel(), 0.0


class L1Norm(ProxFriendly):
    def __init__(self, lam=1.0):
        self.lam = float(lam)

    def __call__(self, x):
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, x, gamma):
        z = prox_l1(self.lam, gamma, x)
        return z, self(z)


class L0Norm(ProxFriendly):
    """``lam`` times the number of nonzero entries."""

    def __init__(self, lam=1.0):
        self.lam = float(lam)

    def __call__(self, x):
        return self.lam * float(np.count_nonzero(x))

    def prox(self, x, gamma):
        z = prox_l0(self.lam, gamma, x)
        return z, self(z)


class HalfNorm(ProxFriendly):
    """``lam * sum_i sqrt(|x_i|)``."""

    def __init__(self, lam=1.0):
        self.lam = float(lam)

    def __call__(self, x):
        return self.lam * float(np.sum(np.sqrt(np.abs(x))))

    def prox(self, x, gamma):
        z = prox_halfnorm(gamma, x, self.lam)
        return z, self(z)


class SeparableSum(ProxFriendly):
    """``g(x) = sum_k g_k(x_k)`` over consecutive blocks ``x_k``."""

    def __init__(self, parts):
        self.parts = [(int(size), part) for size, part in parts]
        self.size = sum(size for size, _ in self.parts)

    def _blocks(self, x):
        i = 0
        for size, part in self.parts:
            yield slice(i, i + size), part
            i += size

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return float(sum(part(x[sl]) for sl, part in self._blocks(x)))

    def prox(self, x, gamma):
        x = np.asarray(x, dtype=float)
        if x.size != self.size:
            raise ValueError(f"expected {self.size} entries, got {x.size}")
        z = np.empty_like(x)
        total = 0.0
        for sl, part in self._blocks(x):
            z[sl], gz = part.prox(x[sl], gamma)
            total += gz
        return z, total
