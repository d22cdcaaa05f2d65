"""Penalty-barrier outer loop, run records and their post-hoc verification."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .barriers import barrier_from_id, behavior_profile
from .inner import (
    CONVERGED,
    EVAL_FAILURE,
    InnerConfig,
    estimate_stepsize,
    solve_inner,
    stationarity_residual,
)
from .model import LOWER, UPPER, EvaluationError, ProblemSpec, Subproblem, split_equalities

__all__ = [
    "OuterConfig",
    "RunRecord",
    "run",
    "kkt_report",
    "threshold",
    "trajectory_violations",
    "rlinear_violations",
    "rlinear_theta",
    "KKT",
    "MAX_OUTER",
    "TIME_LIMIT",
    "EVAL_FAILED",
]

KKT, MAX_OUTER, TIME_LIMIT, EVAL_FAILED = "kkt", "max_outer", "time_limit", "eval_failure"
NATIVE, SPLIT = "native", "split"

ITER_FIELDS = ("k", "alpha", "mu", "eps", "p", "s", "inner_iters", "grad_evals", "wall_ms")


@dataclass
class OuterConfig:
    eps_p: float = 1e-5
    eps_d: float = 1e-5
    alpha0: float = 1.0
    mu0: float = 1.0
    eps0: float | None = None
    delta_alpha: float = 2.0
    delta_eps: float = 0.25
    delta_mu: float = 0.25
    kappa_eps: float = 1e-2
    max_outer: int = 200
    time_limit: float | None = None
    barrier: str = "inverse"
    inner: InnerConfig = field(default_factory=InnerConfig)
    formulation: str = NATIVE

    def __post_init__(self):
        if isinstance(self.inner, dict):
            self.inner = InnerConfig(**self.inner)
        if self.eps_p < 0 or self.eps_d < 0:
            raise ValueError("tolerances must be nonnegative")
        if not (self.alpha0 > 0 and self.mu0 > 0):
            raise ValueError("alpha0 and mu0 must be positive")
        if not self.delta_alpha > 1:
            raise ValueError("delta_alpha must exceed 1")
        if not (0 < self.delta_eps < 1 and 0 < self.delta_mu < 1):
            raise ValueError("delta_eps and delta_mu must lie in (0, 1)")
        if not 0 < self.kappa_eps < 1:
            raise ValueError("kappa_eps must lie in (0, 1)")
        if self.eps0 is not None and self.eps0 < self.eps_d:
            raise ValueError("eps0 must be at least eps_d")
        if self.formulation not in (NATIVE, SPLIT):
            raise ValueError(f"unknown formulation {self.formulation!r}")
        barrier_from_id(self.barrier)

    def to_dict(self):
        return asdict(self)


@dataclass
class RunRecord:
    config: dict
    iterations: list
    exit: dict
    instance: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return self.exit["status"]

    def column(self, name):
        return np.array([it[name] for it in self.iterations], dtype=float)

    def to_json(self) -> str:
        return json.dumps(
            {"instance": self.instance, "config": self.config,
             "iterations": self.iterations, "exit": self.exit},
            indent=1, default=_jsonable,
        )

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        d = json.loads(text)
        return cls(config=d["config"], iterations=d["iterations"], exit=d["exit"],
                   instance=d.get("instance", {}))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")


def threshold(barrier, m_prime, alpha, mu) -> float:
    """``-2 m' (mu/alpha) b*(alpha/mu)``: the infeasibility level below which
    the penalty parameter is left alone."""
    b = barrier_from_id(barrier)
    return -2.0 * m_prime * (mu / alpha) * float(b.conj(alpha / mu))


def _prepare(problem, cfg):
    return split_equalities(problem) if cfg.formulation == SPLIT else problem


def run(problem: ProblemSpec, cfg: OuterConfig, x0) -> RunRecord:
    """Solve ``problem`` from ``x0``; always returns the full trajectory."""
    t_start = time.perf_counter()
    prob = _prepare(problem, cfg)
    barrier = barrier_from_id(cfg.barrier)
    g = prob.g
    x = np.array(x0, dtype=float)
    if not np.isfinite(g(x)):
        x, _ = g.prox(x, 1.0)
    m_prime = prob.m + 2 * prob.m_eq
    alpha, mu = cfg.alpha0, cfg.mu0

    iters, evals_total, inner_total = [], 0, 0
    status, diag = MAX_OUTER, ""
    res = None
    sp = Subproblem(prob, barrier, alpha, mu)
    try:
        Fx = sp(x)
        gamma0 = cfg.inner.gamma_init or estimate_stepsize(sp, x, Fx[1])
        _, eta0 = stationarity_residual(sp, g, x, gamma0, Fx)
    except EvaluationError as err:
        eta0, status, diag = math.inf, EVAL_FAILED, str(err)
    evals_total += sp.n_evals
    eps = cfg.eps0 if cfg.eps0 is not None else max(cfg.eps_d, cfg.kappa_eps * eta0)

    k = 0
    while status != EVAL_FAILED and k < cfg.max_outer:
        sp = Subproblem(prob, barrier, alpha, mu)
        res = solve_inner(sp, g, x, replace(cfg.inner, epsilon=eps))
        evals_total += res.grad_evals
        inner_total += res.iters
        if res.status == EVAL_FAILURE:
            status, diag = EVAL_FAILED, f"inner evaluation failure at outer iteration {k}"
            break
        x = res.x
        c = np.asarray(prob.cons(x), dtype=float)
        y, y_eq = sp.multipliers(x, c)
        p = prob.violation(c)
        s = prob.complementarity(c, y)
        thr = threshold(barrier, m_prime, alpha, mu)
        one_sided = np.isin(prob.kinds[prob.idx_ineq], (UPPER, LOWER))
        iters.append({
            "k": k, "alpha": alpha, "mu": mu, "eps": eps, "p": p, "s": s,
            "inner_iters": res.iters, "grad_evals": evals_total,
            "wall_ms": 1e3 * (time.perf_counter() - t_start),
            "threshold": thr, "residual": res.residual, "inner_status": res.status,
            "y_min": float(np.min(y[one_sided])) if np.any(one_sided) else None,
            "y_absmax": float(np.max(np.abs(np.concatenate([y, y_eq])), initial=0.0)),
            "objective": prob.objective(x),
        })
        if eps <= cfg.eps_d and p <= cfg.eps_p and s <= cfg.eps_p and res.status == CONVERGED:
            status = KKT
            break
        eps = max(cfg.delta_eps * eps, cfg.eps_d)
        if p > max(cfg.eps_p, thr):
            alpha *= cfg.delta_alpha
            if s > cfg.eps_p:
                mu *= cfg.delta_mu
        else:
            mu *= cfg.delta_mu
        k += 1
        if cfg.time_limit is not None and time.perf_counter() - t_start > cfg.time_limit:
            status = TIME_LIMIT
            break

    exit_block = {
        "status": status,
        "x": x.tolist(),
        "objective": float(prob.objective(x)) if status != EVAL_FAILED else math.nan,
        "outer_iters": len(iters),
        "grad_evals": evals_total,
        "inner_iters": inner_total,
        "eta0": eta0,
        "m_prime": m_prime,
        "diagnostic": diag,
        "wall_ms": 1e3 * (time.perf_counter() - t_start),
    }
    if iters:
        last = iters[-1]
        exit_block.update(
            y=y.tolist(), y_eq=y_eq.tolist(), alpha=last["alpha"], mu=last["mu"],
            eps=last["eps"], p=last["p"], s=last["s"],
            x_pre=np.asarray(res.x_pre).tolist(), gamma=res.gamma,
        )
    return RunRecord(config=cfg.to_dict(), iterations=iters, exit=exit_block,
                     instance=dict(problem.meta, name=problem.name))


def kkt_report(problem: ProblemSpec, record: RunRecord, eps_p=None, eps_d=None) -> dict:
    """Re-verify the four approximate KKT conditions at a record's exit pair.

    The dual residual is rebuilt from scratch: one forward-backward step at
    the stored base point yields a subgradient ``v`` of ``g`` at the returned
    ``x``, and the check measures ``||grad f(x) + v + Jc(x)^T y||`` with the
    *recorded* multipliers. Returns ``{condition: (value, tol, passed)}``.
    """
    cfg = OuterConfig(**record.config)
    eps_p = cfg.eps_p if eps_p is None else eps_p
    eps_d = cfg.eps_d if eps_d is None else eps_d
    prob = _prepare(problem, cfg)
    ex = record.exit
    x = np.asarray(ex["x"], dtype=float)
    y = np.asarray(ex.get("y", []), dtype=float)
    y_eq = np.asarray(ex.get("y_eq", []), dtype=float)

    sp = Subproblem(prob, cfg.barrier, ex["alpha"], ex["mu"])
    x_pre = np.asarray(ex["x_pre"], dtype=float)
    gamma = float(ex["gamma"])
    _, dF_pre = sp(x_pre)
    xb, _ = prob.g.prox(x_pre - gamma * dF_pre, gamma)
    drift = float(np.max(np.abs(xb - x), initial=0.0))
    v = (x_pre - xb) / gamma - dF_pre
    _, grad_f = prob.smooth(xb)
    w = prob.merge_multipliers(y, y_eq)
    dual = float(np.linalg.norm(grad_f + v + prob.jac_t(xb, w)))
    if drift > 1e-9 * (1.0 + float(np.max(np.abs(x), initial=0.0))):
        dual = math.inf

    c = np.asarray(prob.cons(x), dtype=float)
    one_sided = np.isin(prob.kinds[prob.idx_ineq], (UPPER, LOWER))
    y_min = float(np.min(y[one_sided])) if np.any(one_sided) else 0.0
    return {
        "stationarity": (dual, eps_d, dual <= eps_d),
        "primal_feasibility": (prob.violation(c), eps_p, prob.violation(c) <= eps_p),
        "dual_feasibility": (y_min, 0.0, y_min >= 0.0),
        "complementarity": (prob.complementarity(c, y), eps_p,
                            prob.complementarity(c, y) <= eps_p),
    }


def rlinear_theta(barrier, delta_rho) -> float:
    """Smallest ``theta`` (to 1e-6) with ``kappa_max(theta) <= delta_rho``."""
    b = barrier_from_id(barrier)
    lo, hi = 1e-6, 1.0 - 1e-9
    if behavior_profile(b, hi, "max") > delta_rho:
        return math.nan
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if behavior_profile(b, mid, "max") <= delta_rho:
            hi = mid
        else:
            lo = mid
    return hi


def trajectory_violations(record: RunRecord) -> list[str]:
    """Check the parameter-update and iterate invariants along a trajectory.

    Returns human-readable violations (empty when everything holds).
    """
    cfg = OuterConfig(**record.config)
    b = barrier_from_id(cfg.barrier)
    its = record.iterations
    out = []
    rel = 1e-12
    slack_mu = cfg.eps_p / float(b.d1(-cfg.eps_p)) if cfg.eps_p > 0 else 0.0
    for i, it in enumerate(its):
        k = it["k"]
        if it["y_min"] is not None and it["y_min"] < 0:
            out.append(f"k={k}: negative multiplier {it['y_min']:g}")
        if it["y_absmax"] > it["alpha"] * (1 + rel):
            out.append(f"k={k}: multiplier {it['y_absmax']:g} above alpha {it['alpha']:g}")
        if it["eps"] < cfg.eps_d * (1 - rel):
            out.append(f"k={k}: eps below eps_d")
        if it["mu"] <= slack_mu and it["s"] > cfg.eps_p:
            out.append(f"k={k}: mu={it['mu']:g} small yet s={it['s']:g} > eps_p")
        if i == 0:
            continue
        prev = its[i - 1]
        if it["alpha"] < prev["alpha"]:
            out.append(f"k={k}: alpha decreased")
        if it["mu"] > prev["mu"]:
            out.append(f"k={k}: mu increased")
        if it["eps"] > prev["eps"]:
            out.append(f"k={k}: eps increased")
        if it["alpha"] == prev["alpha"] and it["mu"] == prev["mu"]:
            out.append(f"k={k}: neither alpha nor mu changed")
        if it["threshold"] > prev["threshold"] * (1 + rel):
            out.append(f"k={k}: threshold increased")
    return out


def rlinear_violations(record: RunRecord) -> list[str]:
    """Post-hoc infeasibility envelope: whenever ``alpha`` is kept,
    ``p_k <= max(eps_p, C theta^k)`` with ``C`` the initial threshold."""
    cfg = OuterConfig(**record.config)
    its = record.iterations
    if len(its) < 2:
        return []
    delta_rho = min(1.0 / cfg.delta_mu, cfg.delta_alpha)
    theta = rlinear_theta(cfg.barrier, delta_rho)
    C = threshold(cfg.barrier, record.exit["m_prime"], cfg.alpha0, cfg.mu0)
    out = []
    for it, nxt in zip(its, its[1:]):
        if nxt["alpha"] == it["alpha"]:
            bound = max(cfg.eps_p, C * theta ** it["k"])
            if it["p"] > bound * (1 + 1e-9):
                out.append(f"k={it['k']}: p={it['p']:g} above envelope {bound:g}")
    return out
