"""Named benchmark suites: task lists, a parallel runner and record I/O."""

from __future__ import annotations

import itertools
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from ..inner import InnerConfig
from ..outer import OuterConfig, RunRecord, run
from .problems import make_instance

__all__ = ["SUITES", "suite_tasks", "run_task", "run_suite", "load_records", "write_atomic"]

SIGMA_N = (0.05, 0.1, 0.25, 0.5, 1.0)
SIGMA_S = (0.1, 0.3, 0.7, 0.9)
SUITES = ("pca_small", "eq_qp", "degenerate", "rosenbrock", "completion_small")


def _variants(barriers, inners, formulations, eps_list):
    for bar, inn, form, eps in itertools.product(barriers, inners, formulations, eps_list):
        yield {"barrier": bar, "inner": inn, "formulation": form, "eps": eps}


def suite_tasks(suite, seed=0, n_seeds=None, sizes=None, barriers=None, inners=None,
                formulations=None, eps=None):
    """Expand a suite into ``(family, params, seed, variant)`` task dicts.

    Instance seeds are ``seed + i``. Unset options take the suite default.
    """
    if suite == "pca_small":
        inst = [("nonneg_pca", {"n": n, "sigma_n": SIGMA_N[i % 5], "sigma_s": SIGMA_S[i % 4]}, i)
                for n in (sizes or (10, 30)) for i in range(n_seeds or 20)]
        var = _variants(barriers or ("inverse", "loglike"), inners or ("spectral", "accel"),
                        formulations or ("native",), eps or (1e-3, 1e-4))
    elif suite == "eq_qp":
        inst = [("eq_qp", {"m": m, "n": 10 * m}, i)
                for m in (sizes or range(1, 6)) for i in range(n_seeds or 10)]
        var = _variants(barriers or ("inverse",), inners or ("accel",),
                        formulations or ("native", "split"), eps or (1e-5,))
    elif suite == "degenerate":
        inst = [("degenerate", {}, i) for i in range(n_seeds or 100)]
        var = _variants(barriers or ("inverse",), inners or ("spectral",),
                        formulations or ("native",), eps or (1e-7,))
    elif suite == "rosenbrock":
        inst = [(fam, {}, i) for fam in ("rosenbrock", "rosenbrock_eq") for i in range(n_seeds or 100)]
        var = _variants(barriers or ("inverse", "loglike"), inners or ("accel",),
                        formulations or ("native",), eps or (1e-4,))
    elif suite == "completion_small":
        inst = [("matrix_completion", {"nu": 10, "nm": 20, "na": 3, "density": 0.3, "lam": 1e-2}, i)
                for i in range(n_seeds or 10)]
        var = _variants(barriers or ("loglike",), inners or ("spectral",),
                        formulations or ("native",), eps or (1e-3,))
    else:
        raise ValueError(f"unknown suite {suite!r}; valid suites: {', '.join(SUITES)}")
    var = list(var)
    return [{"suite": suite, "family": fam, "params": params, "seed": seed + i, "variant": v}
            for fam, params, i in inst for v in var]


def task_config(task, base: OuterConfig | None = None) -> OuterConfig:
    v = task["variant"]
    base = base or OuterConfig()
    return replace(base, eps_p=v["eps"], eps_d=v["eps"], barrier=v["barrier"],
                   formulation=v["formulation"], inner=replace(base.inner, variant=v["inner"]))


def task_filename(task, instance_name):
    v = task["variant"]
    return f"{instance_name}__{v['barrier']}-{v['inner']}-{v['formulation']}-e{v['eps']:g}.json"


def write_atomic(path, text):
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_task(task, base: OuterConfig | None = None, out_dir=None) -> RunRecord:
    """Generate the instance, solve it, and optionally write its record."""
    problem, x0 = make_instance(task["family"], task["seed"], **task["params"])
    rec = run(problem, task_config(task, base), x0)
    rec.instance.update(family=task["family"], params=task["params"], seed=task["seed"])
    rec.variant = task["variant"]
    if out_dir is not None:
        write_atomic(os.path.join(out_dir, task_filename(task, problem.name)), rec.to_json())
    return rec


def _run_entry(args):
    task, base, out_dir = args
    rec = run_task(task, base, out_dir)
    return {"file": task_filename(task, rec.instance["name"]), "instance": rec.instance["name"],
            "variant": task["variant"], "status": rec.status,
            "grad_evals": rec.exit["grad_evals"], "outer_iters": rec.exit["outer_iters"]}


def run_suite(tasks, out_dir, base: OuterConfig | None = None, workers=1):
    """Run every task, one JSON record each, then write ``manifest.json``."""
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(t, base, out_dir) for t in tasks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_run_entry, jobs))
    else:
        entries = [_run_entry(j) for j in jobs]
    manifest = {"n_runs": len(entries), "runs": entries}
    write_atomic(os.path.join(out_dir, "manifest.json"), json.dumps(manifest, indent=1))
    return entries


def load_records(out_dir):
    """Records listed in a directory's manifest (or every ``*.json`` file)."""
    mpath = os.path.join(out_dir, "manifest.json")
    if os.path.exists(mpath):
        with open(mpath) as fh:
            entries = json.load(fh)["runs"]
        files = [e["file"] for e in entries]
        variants = [e["variant"] for e in entries]
    else:
        files = sorted(f for f in os.listdir(out_dir) if f.endswith(".json"))
        variants = [None] * len(files)
    recs = []
    for f, v in zip(files, variants):
        with open(os.path.join(out_dir, f)) as fh:
            rec = RunRecord.from_json(fh.read())
        rec.variant = v
        recs.append(rec)
    return recs
