"""Command-line front end: ``solve``, ``bench``, ``profile`` and ``check``.

Option values are resolved as command-line flag, then environment
(``PB_SEED``, ``PB_WORKERS``), then the ``--config`` JSON file (keys mirror
the flag names, with dashes or underscores), then the built-in default.
Exit codes: 0 success, 1 usage or evaluation error, 2 run stopped by
``max_outer`` or the time limit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict

from .barriers import barrier_from_id
from .inner import INNER_IDS, InnerConfig
from .outer import KKT, OuterConfig, run

# flag name -> (default, type, help)
OUTER_FLAGS = {
    "eps_p": (1e-5, float, "primal tolerance"),
    "eps_d": (1e-5, float, "dual tolerance"),
    "alpha0": (1.0, float, "initial penalty parameter"),
    "mu0": (1.0, float, "initial barrier parameter"),
    "eps0": (None, float, "initial inner tolerance (auto from the first residual when unset)"),
    "delta_alpha": (2.0, float, "penalty growth factor (> 1)"),
    "delta_eps": (0.25, float, "inner tolerance reduction factor in (0, 1)"),
    "delta_mu": (0.25, float, "barrier reduction factor in (0, 1)"),
    "kappa_eps": (1e-2, float, "initial inner tolerance relative to the first residual"),
    "max_outer": (200, int, "maximum outer iterations"),
    "time_limit": (None, float, "wall-clock limit per run in seconds"),
    "barrier": ("inverse", str, "barrier id: inverse, inverse_p:<p>, loglike, exp"),
    "inner": ("spectral", str, "inner solver: spectral or accel"),
    "max_inner": (100000, int, "maximum inner iterations per subproblem"),
    "nonmonotone_memory": (10, int, "merit memory of the spectral solver"),
    "lbfgs_memory": (5, int, "L-BFGS memory of the accelerated solver"),
    "formulation": ("native", str, "equality handling: native or split"),
}
INSTANCE_FLAGS = {
    "family": (None, str, "problem family: nonneg_pca, degenerate, eq_qp, matrix_completion, "
                          "rosenbrock, rosenbrock_eq"),
    "seed": (0, int, "instance seed (env PB_SEED)"),
    "n": (None, int, "dimension (nonneg_pca: 10, eq_qp: 10 m)"),
    "m": (1, int, "equality rows (eq_qp)"),
    "sigma_n": (1.0, float, "signal-to-noise ratio (nonneg_pca)"),
    "sigma_s": (0.5, float, "sparsity level (nonneg_pca)"),
    "nu": (10, int, "users (matrix_completion)"),
    "nm": (20, int, "items (matrix_completion)"),
    "na": (3, int, "atoms (matrix_completion)"),
    "density": (0.3, float, "observed fraction (matrix_completion)"),
    "lam": (1e-2, float, "L0 weight (matrix_completion)"),
    "ratings": (None, str, "optional 'user item rating' file (matrix_completion)"),
}
BENCH_FLAGS = {
    "suite": (None, str, "pca_small, eq_qp, degenerate, rosenbrock, completion_small"),
    "seed": (0, int, "first instance seed (env PB_SEED)"),
    "seeds": (None, int, "instances per size (suite default when unset)"),
    "sizes": (None, str, "sizes, e.g. '1..5' or '10,30' (suite default when unset)"),
    "barriers": (None, str, "comma separated barrier ids (suite default when unset)"),
    "inners": (None, str, "comma separated inner solvers (suite default when unset)"),
    "formulations": (None, str, "comma separated formulations (suite default when unset)"),
    "eps": (None, str, "comma separated tolerances used for eps_p = eps_d (suite default when unset)"),
    "workers": (1, int, "parallel worker processes (env PB_WORKERS)"),
}
ENV = {"seed": "PB_SEED", "workers": "PB_WORKERS"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _add(parser, table, skip=()):
    for name, (default, _, text) in table.items():
        if name in skip:
            continue
        parser.add_argument("--" + name.replace("_", "-"), dest=name, default=None,
                            help=f"{text} (default: {default})")


def build_parser():
    p = _Parser(prog="penbar", description="Penalty-barrier solver for constrained composite problems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one generated instance")
    _add(s, INSTANCE_FLAGS)
    _add(s, OUTER_FLAGS)
    s.add_argument("--eps", default=None, help="set eps_p and eps_d together (default: unset)")
    s.add_argument("--config", default=None, help="JSON file of option values (default: none)")
    s.add_argument("--out", default=None, help="write the run record JSON here (default: none)")

    b = sub.add_parser("bench", help="run a benchmark suite, one record per run")
    _add(b, BENCH_FLAGS)
    _add(b, OUTER_FLAGS, skip=("eps_p", "eps_d", "barrier", "inner", "formulation"))
    b.add_argument("--config", default=None, help="JSON file of option values (default: none)")
    b.add_argument("--out", default="records", help="output directory (default: records)")

    r = sub.add_parser("profile", help="data or pairwise performance profile from records")
    r.add_argument("records", help="directory written by 'bench'")
    r.add_argument("--mode", choices=("data", "pairwise"), default="data", help="profile type (default: data)")
    r.add_argument("--metric", choices=("grad_evals", "inner_iters", "outer_iters", "wall_ms"),
                   default="grad_evals", help="effort measure (default: grad_evals)")
    r.add_argument("--solver", default=None,
                   help="restrict a data profile to one solver label barrier/inner/formulation/eps "
                        "(default: all records)")
    r.add_argument("--out", default=None, help="CSV path (default: stdout)")

    c = sub.add_parser("check", help="run the analytical self-check suite")
    c.add_argument("--cases", type=int, default=500, help="random oracle cases per barrier (default: 500)")
    c.add_argument("--seed", type=int, default=0, help="oracle seed (default: 0)")
    return p


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise UsageError(f"cannot read config {path}: {err}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def resolve(args, tables, config):
    """Merge flags, environment, config file and defaults into one dict."""
    out = {}
    for table in tables:
        for name, (default, typ, _) in table.items():
            raw = getattr(args, name, None)
            if raw is None and name in ENV and os.environ.get(ENV[name]) is not None:
                raw = os.environ[ENV[name]]
            if raw is None:
                raw = config.get(name)
            if raw is None:
                out[name] = default
                continue
            try:
                out[name] = typ(raw)
            except (TypeError, ValueError):
                raise UsageError(f"invalid value {raw!r} for --{name.replace('_', '-')}") from None
    return out


def outer_config(v) -> OuterConfig:
    try:
        barrier_from_id(v["barrier"])
        inner = InnerConfig(max_iters=v["max_inner"], variant=v["inner"],
                            nonmonotone_memory=v["nonmonotone_memory"], lbfgs_memory=v["lbfgs_memory"])
        return OuterConfig(
            eps_p=v["eps_p"], eps_d=v["eps_d"], alpha0=v["alpha0"], mu0=v["mu0"], eps0=v["eps0"],
            delta_alpha=v["delta_alpha"], delta_eps=v["delta_eps"], delta_mu=v["delta_mu"],
            kappa_eps=v["kappa_eps"], max_outer=v["max_outer"], time_limit=v["time_limit"],
            barrier=v["barrier"], inner=inner, formulation=v["formulation"],
        )
    except ValueError as err:
        raise UsageError(str(err)) from None


def cmd_solve(args) -> int:
    from .bench.problems import make_instance
    from .bench.suites import write_atomic

    config = _load_config(args.config)
    v = resolve(args, [INSTANCE_FLAGS, OUTER_FLAGS], config)
    eps = args.eps if args.eps is not None else config.get("eps")
    if eps is not None:
        if args.eps_p is None:
            v["eps_p"] = float(eps)
        if args.eps_d is None:
            v["eps_d"] = float(eps)
    if v["family"] is None:
        raise UsageError("--family is required")
    cfg = outer_config(v)
    params = {k: v[k] for k in ("n", "m", "sigma_n", "sigma_s", "nu", "nm", "na", "density", "lam", "ratings")}
    try:
        problem, x0 = make_instance(v["family"], v["seed"], **params)
    except (ValueError, OSError) as err:
        raise UsageError(str(err)) from None
    rec = run(problem, cfg, x0)
    if args.out:
        write_atomic(args.out, rec.to_json())
    ex = rec.exit
    print(f"status={ex['status']} objective={ex['objective']:.10g} p={ex.get('p', float('nan')):.3g} "
          f"s={ex.get('s', float('nan')):.3g} outer={ex['outer_iters']} grad_evals={ex['grad_evals']} "
          f"alpha={ex.get('alpha', cfg.alpha0):g} mu={ex.get('mu', cfg.mu0):.3g}")
    if rec.status == KKT:
        return 0
    if rec.status == "eval_failure":
        print(f"evaluation failure: {ex['diagnostic']}", file=sys.stderr)
        return 1
    return 2


def _parse_list(text, typ=str):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return tuple(typ(t) for t in text)
    text = str(text)
    if ".." in text:
        a, b = text.split("..")
        return tuple(range(int(a), int(b) + 1))
    return tuple(typ(t) for t in text.split(",") if t.strip())


def cmd_bench(args) -> int:
    from .bench.suites import run_suite, suite_tasks

    config = _load_config(args.config)
    v = resolve(args, [BENCH_FLAGS, OUTER_FLAGS], config)
    if v["suite"] is None:
        raise UsageError("--suite is required")
    try:
        barriers = _parse_list(v["barriers"])
        for bid in barriers or ():
            barrier_from_id(bid)
        inners = _parse_list(v["inners"])
        for iid in inners or ():
            if iid not in INNER_IDS:
                raise ValueError(f"unknown inner solver {iid!r}; valid ids are {set(INNER_IDS)}")
        tasks = suite_tasks(v["suite"], seed=v["seed"], n_seeds=v["seeds"],
                            sizes=_parse_list(v["sizes"], int), barriers=barriers, inners=inners,
                            formulations=_parse_list(v["formulations"]), eps=_parse_list(v["eps"], float))
    except ValueError as err:
        raise UsageError(str(err)) from None
    base = outer_config(v)
    entries = run_suite(tasks, args.out, base=base, workers=max(1, v["workers"]))
    solved = sum(e["status"] == KKT for e in entries)
    print(f"suite={v['suite']} runs={len(entries)} kkt={solved} out={args.out}")
    return 0 if solved == len(entries) else 2


def solver_label(rec) -> str:
    c = rec.config
    inner = c["inner"]["variant"] if isinstance(c["inner"], dict) else c["inner"].variant
    return f"{c['barrier']}/{inner}/{c['formulation']}/{c['eps_p']:g}"


def cmd_profile(args) -> int:
    from .bench.profiles import data_profile, pairwise_profile, write_data_csv, write_pairwise_csv
    from .bench.suites import load_records

    if not os.path.isdir(args.records):
        raise UsageError(f"no such record directory: {args.records}")
    recs = load_records(args.records)
    out = args.out or "/dev/stdout"
    if args.mode == "data":
        if args.solver:
            recs = [r for r in recs if solver_label(r) == args.solver]
            if not recs:
                raise UsageError(f"no records for solver {args.solver!r}")
        t, frac = data_profile(recs, args.metric)
        write_data_csv(out, t, frac) if args.out else _print_rows(["t", "fraction"], zip(t, frac))
        return 0
    groups = defaultdict(lambda: {"native": [], "split": []})
    for r in recs:
        c = r.config
        inner = c["inner"]["variant"]
        groups[f"{c['barrier']}/{inner}/{c['eps_p']:g}"][c["formulation"]].append(r)
    curves = {}
    for label, g in sorted(groups.items()):
        if g["native"] and g["split"]:
            try:
                curves[label] = pairwise_profile(g["native"], g["split"], args.metric)
            except ValueError as err:
                raise UsageError(f"{label}: {err}") from None
    if not curves:
        raise UsageError("pairwise mode needs native and split records of the same solver")
    if args.out:
        write_pairwise_csv(out, curves)
    else:
        _print_rows(["tau", "fraction", "solver"],
                    [(x, f, lab) for lab, (tau, fr) in curves.items() for x, f in zip(tau, fr)])
    return 0


def _print_rows(header, rows):
    print(",".join(header))
    for row in rows:
        print(",".join(repr(float(x)) if not isinstance(x, str) else x for x in row))


def cmd_check(args, barriers=None) -> int:
    from .checks import run_checks

    results, secs = run_checks(barriers=barriers, n_cases=args.cases, seed=args.seed)
    for r in results:
        print(r.line())
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail} passed, {n_fail} failed in {secs:.1f} s")
    return 1 if n_fail else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "bench": cmd_bench, "profile": cmd_profile, "check": cmd_check}[args.command]
    try:
        return handler(args)
    except UsageError as err:
        print(f"penbar {args.command}: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
