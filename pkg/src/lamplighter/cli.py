"""Command-line interface: simulate / exact / scan / verify, all emitting CSV.

Output files carry a comment line with a hash of the fully-resolved
configuration, and identical (config, seed) pairs produce byte-identical
files regardless of the worker count (LAMPLIGHTER_THREADS).

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 truncation-boundary abort, 4 step-budget abort.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import replace
from typing import Sequence

import numpy as np

from . import engine, exact, montecarlo, oracles
from .errors import ConfigError, StepBudgetError, TruncationError
from .graphs import build_gamma_m, build_line_graph
from .lamps import SwitchMeasure, cyclic_group, integer_group, make_uniform_measure
from .montecarlo import WalkConfig

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_TRUNCATION = 3
EXIT_BUDGET = 4


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return str(x)


def config_hash(pairs: dict) -> str:
    blob = "\n".join(f"{k}={_fmt(v)}" for k, v in sorted(pairs.items()))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def write_csv(path: str | None, header: Sequence[str], rows, cfg: dict, seed) -> None:
    lines = [f"# lamplighter config_hash={config_hash(cfg)} seed={seed}"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def parse_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise ConfigError(f"bad config line {raw!r} (expected key=value)")
            k, v = s.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def apply_config_file(args: argparse.Namespace) -> argparse.Namespace:
    """Fill argparse values that were left at None from the config file."""
    if not getattr(args, "config", None):
        return args
    file_vals = parse_config_file(args.config)
    known = vars(args)
    for key, raw in file_vals.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if known[key] is None:
            default = _ARG_TYPES.get(key, str)
            setattr(args, key, default(raw))
    return args


_ARG_TYPES = {
    "k": int,
    "n": int,
    "replicas": int,
    "seed": int,
    "lamp": int,
    "gamma_m": int,
    "radius": int,
    "budget": int,
    "points": int,
    "m": int,
    "m_pos": int,
    "m_plus": int,
    "m_minus": int,
    "t": int,
    "x": int,
    "r": int,
    "k_lo": int,
    "k_hi": int,
    "max_len": int,
    "p": float,
    "lam": float,
    "s": float,
    "c": float,
    "tol": float,
    "grid": str,
    "graph": str,
    "estimator": str,
    "out": str,
    "measure_support": str,
    "lamp_group": str,
}


def measure_from_args(args) -> SwitchMeasure:
    """Switch measure from config: uniform cyclic by default, or a support table."""
    group_kind = getattr(args, "lamp_group", None) or "cyclic"
    support_spec = getattr(args, "measure_support", None)
    if group_kind == "cyclic":
        group = cyclic_group(args.lamp)
        if support_spec is None:
            return make_uniform_measure(group)
    elif group_kind == "integers":
        group = integer_group()
        if support_spec is None:
            raise ConfigError("integer lamp group needs measure_support")
    else:
        raise ConfigError(f"unknown lamp group {group_kind!r}")
    pairs = []
    for item in support_spec.split(","):
        h, _, p = item.partition(":")
        pairs.append((int(h), float(p)))
    return SwitchMeasure(group, tuple(pairs))


def _walk_config(args) -> WalkConfig:
    if getattr(args, "p", None) is None and getattr(args, "lam", None) is None:
        raise ConfigError("give --p or --lam")
    return WalkConfig(
        graph=args.graph or "line",
        gamma_m=args.gamma_m or 3,
        p=getattr(args, "p", None),
        lam=getattr(args, "lam", None),
        lamp_order=args.lamp if args.lamp is not None else 2,
        radius=getattr(args, "radius", None),
        step_budget=args.budget if getattr(args, "budget", None) else engine.DEFAULT_BUDGET,
    )


def _graph_for(args):
    radius = args.radius if args.radius is not None else 32
    if (args.graph or "line") == "line":
        return build_line_graph(radius)
    return build_gamma_m(args.gamma_m or 3, radius)


# -- subcommands ---------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _walk_config(args)
    replicas = args.replicas if args.replicas is not None else 1000
    seed = args.seed if args.seed is not None else 0
    cfg_pairs = {
        "command": f"simulate.{args.mode}",
        "graph": cfg.graph,
        "gamma_m": cfg.gamma_m,
        "p": cfg.p,
        "lam": cfg.lam,
        "lamp": cfg.lamp_order,
        "replicas": replicas,
        "budget": cfg.step_budget,
    }
    spec = montecarlo.engine_spec(cfg, track_range=True)
    if args.mode == "returns":
        k = args.k if args.k is not None else 10
        cfg_pairs["k"] = k
        tables = montecarlo.walk_tables(cfg, replicas * k * 2.2 * max(cfg.lambda_value, 1.5))
        s = engine.simulate_excursions(tables, [k], replicas, seed, spec)
        header = ["seed", "k_or_n", "rho", "m_plus", "m_minus", "n_plus", "range_size", "id_returns", "aborted"]
        rows = [
            (
                seed,
                k,
                int(s.rho[i, -1]),
                int(s.m_plus[i, -1]),
                int(s.m_minus[i, -1]),
                int(s.n_plus[i, -1]),
                int(s.range_size[i, -1]),
                int(s.id_count[i, -1]),
                int(s.aborted[i]),
            )
            for i in range(replicas)
        ]
        aborted = s.aborted
    else:
        n = args.n if args.n is not None else 1000
        cfg_pairs["n"] = n
        tables = montecarlo.walk_tables(cfg, float(n) * replicas)
        s = engine.simulate_local_times(tables, [n], replicas, seed, spec)
        header = ["seed", "k_or_n", "rho", "m_plus", "m_minus", "n_plus", "range_size", "id_returns", "aborted"]
        rows = [
            (
                seed,
                n,
                n,
                int(s.m_plus[i, -1]),
                int(s.m_minus[i, -1]),
                int(s.n_plus[i, -1]),
                int(s.range_size[i, -1]),
                int(s.xi[i, -1]) - 1,
                int(s.aborted[i]),
            )
            for i in range(replicas)
        ]
        aborted = s.aborted
    write_csv(args.out, header, rows, cfg_pairs, seed)
    if np.any(aborted == engine.ABORT_BOUNDARY):
        print(f"warning: {int((aborted == engine.ABORT_BOUNDARY).sum())} replicas hit the truncation boundary", file=sys.stderr)
        return EXIT_TRUNCATION
    if np.any(aborted == engine.ABORT_BUDGET):
        print(f"warning: {int((aborted == engine.ABORT_BUDGET).sum())} replicas exceeded the step budget", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_exact(args) -> int:
    op = args.op
    tol = args.tol if args.tol is not None else exact.DEFAULT_TOL
    seed = args.seed if args.seed is not None else 0

    def need(name):
        v = getattr(args, name, None)
        if v is None:
            raise ConfigError(f"exact {op} needs --{name.replace('_', '-')}")
        return v

    inputs: dict
    if op == "phase-params":
        pp = exact.phase_params(need("p"), need("lamp"))
        inputs = {"p": pp.p, "lamp": pp.lamp_order}
        values = {
            "lam": pp.lam,
            "alpha": pp.alpha,
            "p_critical": pp.p_critical,
            "mean_return_time": pp.mean_return_time,
            "mgf_domain_sup": pp.mgf_domain_sup,
        }
        header = list(inputs) + list(values)
        row = list(inputs.values()) + list(values.values())
        write_csv(args.out, header, [tuple(row)], {"command": f"exact.{op}", **inputs}, seed)
        return EXIT_OK
    if op == "ret-prob-extremes":
        inputs = {"m_plus": need("m_plus"), "m_minus": need("m_minus"), "lamp": need("lamp")}
        value, terms = exact.ret_prob_given_extremes(*inputs.values()), 0
    elif op == "max-cdf":
        inputs = {"x": need("x"), "lam": need("lam")}
        value, terms = exact.max_excursion_cdf(*inputs.values()), 0
    elif op == "series":
        inputs = {"m": need("m"), "lam": need("lam"), "lamp": need("lamp"), "tol": tol}
        sv = exact.excursion_series(*inputs.values())
        value, terms = sv.value, sv.terms
    elif op == "ret-prob-nplus":
        inputs = {"k": need("k"), "m_pos": need("m_pos"), "lam": need("lam"), "lamp": need("lamp"), "tol": tol}
        value, terms = exact.ret_prob_given_nplus(*inputs.values()), 0
    elif op == "ret-prob":
        lam = args.lam if args.lam is not None else exact.phase_params(need("p"), need("lamp")).lam
        inputs = {"k": need("k"), "lam": lam, "lamp": need("lamp"), "tol": tol}
        value, terms = exact.ret_prob_at_rho_k(*inputs.values()), 0
    elif op == "partial-sum":
        lam = args.lam if args.lam is not None else exact.phase_params(need("p"), need("lamp")).lam
        inputs = {"k": need("k"), "lam": lam, "lamp": need("lamp"), "tol": tol}
        value, terms = exact.local_time_partial_sum(*inputs.values()), 0
    elif op == "rho1-pmf":
        inputs = {"t": need("t"), "p": need("p")}
        value, terms = exact.rho1_pmf(*inputs.values()), 0
    elif op == "mgf":
        inputs = {"s": need("s"), "p": need("p")}
        value, terms = exact.mgf_rho1(*inputs.values()), 0
    elif op == "escape-bound":
        g = _graph_for(args)
        inputs = {"graph": args.graph or "line", "lam": need("lam"), "r": need("r")}
        value, terms = exact.escape_prob_bound(g, args.lam, args.r), 0
    elif op == "range-tail":
        g = _graph_for(args)
        c = args.c if args.c is not None else 0.5
        inputs = {"graph": args.graph or "line", "k": need("k"), "lam": need("lam"), "c": c}
        n, bound = exact.range_lower_tail_bound(args.k, args.lam, g.degree(g.root_label), g.ball_size, c)
        inputs["n_vertices"] = n
        value, terms = bound, 0
    else:
        raise ConfigError(f"unknown exact op {op!r}")
    header = list(inputs) + ["value", "terms"]
    row = tuple(list(inputs.values()) + [value, terms])
    write_csv(args.out, header, [row], {"command": f"exact.{op}", **inputs}, seed)
    return EXIT_OK


def cmd_scan(args) -> int:
    if not args.grid:
        raise ConfigError("scan needs --grid")
    grid = [float(x) for x in args.grid.split(",")]
    cfg = WalkConfig(
        graph=args.graph or "gamma",
        gamma_m=args.gamma_m or 3,
        lam=grid[0],
        lamp_order=args.lamp if args.lamp is not None else 2,
        radius=getattr(args, "radius", None),
        step_budget=args.budget if args.budget else engine.DEFAULT_BUDGET,
    )
    k_lo = args.k_lo if args.k_lo is not None else 1000
    k_hi = args.k_hi if args.k_hi is not None else 10 * k_lo
    replicas = args.replicas if args.replicas is not None else 800
    seed = args.seed if args.seed is not None else 0
    points = args.points if args.points is not None else 6
    estimator = args.estimator or "conditional"
    result = montecarlo.phase_scan(
        grid, cfg, (k_lo, k_hi), replicas, seed, n_points=points, estimator=estimator
    )
    cfg_pairs = {
        "command": "scan",
        "grid": args.grid,
        "graph": cfg.graph,
        "gamma_m": cfg.gamma_m,
        "lamp": cfg.lamp_order,
        "k_lo": k_lo,
        "k_hi": k_hi,
        "points": points,
        "replicas": replicas,
        "estimator": estimator,
    }
    header = ["kind", "lambda", "k", "estimate", "stderr", "replicas", "inconclusive"]
    rows = []
    for pt in result.points:
        rows.append(("point", pt.lam, pt.k, pt.estimate, pt.stderr, pt.replicas, pt.inconclusive))
    for lam, e, se, flag in zip(result.lambdas, result.exponents, result.exponent_stderrs, result.inconclusive):
        rows.append(("exponent", lam, "", e, se, replicas, flag))
    if result.bracket is not None:
        rows.append(("bracket", result.bracket[0], "", result.bracket[1], "", replicas, False))
    write_csv(args.out, header, rows, cfg_pairs, seed)
    return EXIT_OK


def cmd_verify(args) -> int:
    suite = args.suite
    max_len = args.max_len
    ok = True
    if suite in ("prop2.2", "all"):
        mu = make_uniform_measure(cyclic_group(args.lamp if args.lamp is not None else 2))
        rep = oracles.check_return_prob_given_extremes(max_len if max_len is not None else 6, mu, atol=0.0)
        print(f"extremes-law exhaustive: {rep.paths} paths, max error {rep.max_abs_error:.3e}: " + ("PASS" if rep.ok else "FAIL"))
        unif = oracles.check_lamp_uniformity(max_len if max_len is not None else 6, mu)
        print(f"lamp-uniformity exhaustive: {unif.paths} paths, max error {unif.max_abs_error:.3e}: " + ("PASS" if unif.ok else "FAIL"))
        ok = ok and rep.ok and unif.ok
    if suite in ("prop5.2", "all"):
        if getattr(args, "measure_support", None):
            args.lamp_group = getattr(args, "lamp_group", None) or "integers"
            if args.lamp is None:
                args.lamp = 2
            nu = measure_from_args(args)
        else:
            nu = SwitchMeasure(integer_group(), ((1, 0.25), (0, 0.5), (-1, 0.25)))
        rep = oracles.check_return_prob_given_local_times(max_len if max_len is not None else 4, nu, atol=1e-12)
        print(f"local-time-law exhaustive: {rep.paths} paths, max error {rep.max_abs_error:.3e}: " + ("PASS" if rep.ok else "FAIL"))
        ok = ok and rep.ok
    if suite not in ("prop2.2", "prop5.2", "all"):
        raise ConfigError(f"unknown verify suite {suite!r}")
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lamplighter", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, walk: bool):
        p.add_argument("--config", help="key=value config file; explicit flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--tol", type=float)
        p.add_argument("--budget", type=int)
        if walk:
            p.add_argument("--p", type=float)
            p.add_argument("--lam", type=float)
            p.add_argument("--lamp", type=int, help="lamp group order |F|")
            p.add_argument("--graph", choices=["line", "gamma"])
            p.add_argument("--gamma-m", dest="gamma_m", type=int)
            p.add_argument("--radius", type=int)
            p.add_argument("--replicas", type=int)

    sim = sub.add_parser("simulate", help="run walks, one CSV row per replica")
    sim.add_argument("mode", choices=["returns", "local-time"])
    sim.add_argument("--k", type=int, help="excursion count (returns mode)")
    sim.add_argument("--n", type=int, help="step count (local-time mode)")
    common(sim, walk=True)

    ex = sub.add_parser("exact", help="closed-form operations, one CSV row")
    ex.add_argument(
        "op",
        choices=[
            "phase-params",
            "ret-prob-extremes",
            "max-cdf",
            "series",
            "ret-prob-nplus",
            "ret-prob",
            "partial-sum",
            "rho1-pmf",
            "mgf",
            "escape-bound",
            "range-tail",
        ],
    )
    ex.add_argument("--k", type=int)
    ex.add_argument("--m", type=int)
    ex.add_argument("--m-pos", dest="m_pos", type=int)
    ex.add_argument("--m-plus", dest="m_plus", type=int)
    ex.add_argument("--m-minus", dest="m_minus", type=int)
    ex.add_argument("--t", type=int)
    ex.add_argument("--x", type=int)
    ex.add_argument("--r", type=int)
    ex.add_argument("--s", type=float)
    ex.add_argument("--c", type=float)
    common(ex, walk=True)

    sc = sub.add_parser("scan", help="phase scan over a lambda grid")
    sc.add_argument("--grid", help="comma-separated lambda values, ascending")
    sc.add_argument("--k-lo", dest="k_lo", type=int)
    sc.add_argument("--k-hi", dest="k_hi", type=int)
    sc.add_argument("--points", type=int)
    sc.add_argument("--estimator", choices=["conditional", "indicator"])
    common(sc, walk=True)

    ver = sub.add_parser("verify", help="exhaustive oracle suites")
    ver.add_argument("suite", choices=["prop2.2", "prop5.2", "all"])
    ver.add_argument("--max-len", dest="max_len", type=int)
    ver.add_argument("--measure-support", dest="measure_support")
    ver.add_argument("--lamp-group", dest="lamp_group", choices=["cyclic", "integers"])
    common(ver, walk=True)

    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args = apply_config_file(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "exact":
            return cmd_exact(args)
        if args.command == "scan":
            return cmd_scan(args)
        if args.command == "verify":
            return cmd_verify(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TruncationError as exc:
        print(f"truncation abort: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except StepBudgetError as exc:
        print(f"step budget abort: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
