"""Data profiles and pairwise performance profiles over run records."""

from __future__ import annotations

import csv
import math

import numpy as np

__all__ = ["metric_of", "data_profile", "pairwise_profile", "write_data_csv",
           "write_pairwise_csv", "read_csv"]

METRICS = ("grad_evals", "inner_iters", "outer_iters", "wall_ms")


def metric_of(record, metric="grad_evals") -> float:
    """Effort spent by a run, ``inf`` when it did not reach an approximate KKT pair."""
    if isinstance(record, (int, float, np.number)):
        return float(record)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; valid: {', '.join(METRICS)}")
    if record.exit["status"] != "kkt":
        return math.inf
    return float(record.exit[metric])


def data_profile(records, metric="grad_evals"):
    """``(t, f(t))``: fraction of instances solved within budget ``t``,
    evaluated at the sorted distinct finite budgets."""
    vals = np.array([metric_of(r, metric) for r in records], dtype=float)
    if vals.size == 0:
        return np.empty(0), np.empty(0)
    t = np.unique(vals[np.isfinite(vals)])
    frac = np.searchsorted(np.sort(vals), t, side="right") / vals.size
    return t, frac


def _instance_key(record):
    inst = getattr(record, "instance", None) or {}
    return inst.get("name")


def pairwise_profile(records_a, records_b, metric="grad_evals"):
    """``(tau, rho(tau))`` for per-instance ratios ``t_a / t_b``.

    Records are matched by instance name (or by position when given plain
    numbers). A run of ``a`` that failed gives ``tau = inf`` (never counted);
    if only ``b`` failed the ratio is ``0``.
    """
    a, b = list(records_a), list(records_b)
    ka = [_instance_key(r) for r in a]
    kb = [_instance_key(r) for r in b]
    if None not in ka and None not in kb:
        if sorted(ka) != sorted(kb) or len(set(ka)) != len(ka):
            raise ValueError("record sets do not cover the same instances")
        by_b = dict(zip(kb, b))
        b = [by_b[k] for k in ka]
    elif len(a) != len(b):
        raise ValueError("record sets do not cover the same instances")
    ratios = []
    for ra, rb in zip(a, b):
        ta, tb = metric_of(ra, metric), metric_of(rb, metric)
        if math.isinf(ta):
            ratios.append(math.inf)
        elif math.isinf(tb):
            ratios.append(0.0)
        else:
            ratios.append(ta / tb)
    return data_profile(ratios)


def _atomic_rows(path, header, rows):
    import os
    import tempfile

    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    os.replace(tmp, path)


def write_data_csv(path, t, frac):
    _atomic_rows(path, ["t", "fraction"], [(repr(float(x)), repr(float(f))) for x, f in zip(t, frac)])


def write_pairwise_csv(path, curves):
    """``curves`` maps a solver label to ``(tau, fraction)``."""
    rows = [(repr(float(x)), repr(float(f)), label)
            for label, (tau, frac) in curves.items() for x, f in zip(tau, frac)]
    _atomic_rows(path, ["tau", "fraction", "solver"], rows)


def read_csv(path):
    """Rows of a profile CSV as dicts with float-valued numeric columns."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("t", "tau", "fraction"):
            if k in r:
                r[k] = float(r[k])
    return rows
