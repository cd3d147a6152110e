"""Command-line experiment runner.

Each subcommand runs one suite and emits a report: a config echo, a list of
named checks with measured values and pass flags, and supporting results.
Reports are byte-identical for identical arguments unless ``--timing`` is
given.

Exit status: 0 all checks pass, 1 some check failed, 2 bad configuration,
3 a work budget was exceeded, 4 the suite had nothing to check.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import bounds, coloring, qsim, reductions, rigidity
from .algebra import (
    Alphabet, AlgebraError, BoolMatrix, FieldMatrix, is_prime,
    read_matrix,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET, EXIT_EMPTY = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


class Report:
    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.checks: list[dict] = []
        self.results: dict = {}
        self.witnesses: list = []
        self.wall_time: float | None = None

    def check(self, name: str, param, value, passed: bool) -> bool:
        self.checks.append({"check": name, "param": _plain(param), "value": _plain(value),
                            "pass": bool(passed)})
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict:
        out = {"command": self.command, "config": self.config, "checks": self.checks,
               "results": _plain(self.results), "witnesses": _plain(self.witnesses),
               "passed": self.passed}
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out


def _plain(obj):
    """Convert numpy scalars, tuples and Fractions into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def emit_report(report: Report, fmt: str = "json", out: str | None = None) -> str:
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "param", "value", "pass"])
        for c in report.checks:
            w.writerow([c["check"], json.dumps(c["param"], sort_keys=True),
                        json.dumps(c["value"], sort_keys=True), str(c["pass"]).lower()])
        text = buf.getvalue()
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    return text


def _ints(text: str | None) -> list[int]:
    if text is None or text == "":
        return []
    return [int(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def _range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError as exc:
        raise ConfigError(f"range must look like lo:hi, got {text!r}") from exc


def _next_prime(d: int) -> int:
    p = max(2, d)
    while not is_prime(p):
        p += 1
    return p


def _load_matrix(args) -> FieldMatrix:
    if getattr(args, "matrix", None):
        M = read_matrix(args.matrix)
        return M
    if getattr(args, "identity", None):
        return FieldMatrix.identity(args.identity, args.modulus)
    raise ConfigError("provide --matrix FILE or --identity N")


# -- suites ----------------------------------------------------------------------

def run_verify_recording(args, rep: Report) -> None:
    d, n = args.d, args.n
    layout = qsim.RegisterLayout(n, Alphabet(tuple(range(d)), _next_prime(d)), args.work_dim)
    worst, support_ok = 0.0, True
    for t in range(args.trials):
        rng = np.random.default_rng([args.seed, t])
        tr = qsim.trace_recording(qsim.random_circuit(layout, args.queries, rng))
        worst = max(worst, tr.residual)
        if any(s > q for q, s in enumerate(tr.support)):
            support_ok = False
            rep.witnesses.append({"trial": t, "support": tr.support})
    rep.results = {"max_residual": worst, "trials": args.trials}
    if args.trials:
        rep.check("recording_equivalence", {"n": n, "d": d, "T": args.queries}, worst,
                  worst <= args.tolerance)
        rep.check("recording_sparsity", {"n": n, "d": d, "T": args.queries}, support_ok, support_ok)


def run_rigidity(args, rep: Report) -> None:
    params = rigidity.RigidityParams(args.k, args.h, Fraction(args.c))
    if args.sampler:
        alphabet = Alphabet(tuple(range(args.d)), args.modulus)
        est = rigidity.estimate_rigid_fraction(args.sampler, args.size, params, alphabet,
                                               args.trials, args.seed, args.budget)
        rep.results = vars(est)
        rep.check("ci_contains_estimate", args.sampler, est.fraction,
                  est.ci_low <= est.fraction <= est.ci_high)
        return
    A = _load_matrix(args)
    res = rigidity.is_rigid(A, params, args.budget)
    rep.results = {"rigid": res.rigid, "k_prime": params.k_prime}
    if not res.rigid:
        rep.witnesses.append({"rows": res.rows, "removed": res.removed, "rank": res.rank})
    if args.expect is not None:
        rep.check("rigidity", {"k": args.k, "h": args.h, "c": args.c}, res.rigid,
                  res.rigid == (args.expect == "rigid"))


def run_partition(args, rep: Report) -> None:
    params = rigidity.RigidityParams(args.k, args.h, Fraction(args.c))
    A = _load_matrix(args)
    rows = _ints(args.rows) or list(range(args.k))
    part = rigidity.partition_columns(A, rows, params)
    bad = rigidity.verify_partition(A, part, rows, c_is_one=params.c == 1)
    rep.results = {"pairs": [{"rows": r, "cols": v} for r, v in part.pairs],
                   "k_prime": part.k_prime}
    rep.witnesses.extend(bad)
    rep.check("partition_invariants", {"k": args.k, "h": args.h, "c": args.c}, len(bad), not bad)


def run_bucket(args, rep: Report) -> None:
    sets = [tuple(_ints(s)) for s in args.sets.split(";")]
    kp = len(sets[0])
    part = rigidity.ColumnPartition(tuple((tuple(range(kp)), s) for s in sets), args.h, kp)
    alpha = Fraction(args.alpha)
    if args.query is not None:
        queries = [set(_ints(args.query))]
    else:
        cols = sorted(set().union(*map(set, sets)))
        top = math.floor(alpha * args.h)
        queries = [set(I) for r in range(top + 1) for I in itertools.combinations(cols, r)]
    failures = 0
    for I in queries:
        b = rigidity.bucket_for_query_set(I, part, alpha)
        if set(b.residual) & I:
            failures += 1
            rep.witnesses.append({"I": sorted(I), "j": b.j, "lam": b.lam})
        if len(queries) == 1:
            rep.results = {"j": b.j, "lam": b.lam, "residual": b.residual}
    rep.results.setdefault("query_sets", len(queries))
    rep.check("bucket_disjoint", {"alpha": args.alpha, "sets": len(queries)}, failures, failures == 0)


def run_reductions(args, rep: Report) -> None:
    fails = {}
    refused = 0
    for p in _ints(args.moduli):
        for name in ("triple_product", "cube", "inverse", "square", "convolution"):
            bad = 0
            for t in range(args.trials):
                rng = np.random.default_rng([args.seed, p, t])
                n = int(rng.integers(1, args.n_max + 1))
                if name == "convolution":
                    n = 2 * max(1, n // 2)
                    u, v = rng.integers(0, p, n), rng.integers(0, p, n)
                    ok = reductions.embed_convolution(u, v, p).verified
                else:
                    A, B, C = (FieldMatrix(rng.integers(0, p, (n, n)), p) for _ in range(3))
                    fn = {"triple_product": reductions.triple_product_via_kron,
                          "cube": reductions.embed_cube, "inverse": reductions.embed_inverse}.get(name)
                    ok = fn(A, B, C).verified if fn else reductions.embed_square(A, B).verified
                bad += not ok
            fails[f"{name}_p{p}"] = bad
    bm_bad = 0
    for t in range(args.trials):
        rng = np.random.default_rng([args.seed, 0, t])
        n = int(rng.integers(4, 9))
        u, v = rng.integers(0, 2, n), rng.integers(0, 2, n)
        try:
            emb = reductions.embed_binary_mult(u, v)
        except reductions.BlockOverflowError:
            refused += 1
            continue
        lin = reductions.linear_convolution(u, v)
        bm_bad += list(emb.linear) != lin or list(emb.cyclic) != reductions.cyclic_from_linear(lin, n)
    fails["binary_mult"] = bm_bad
    rep.results = {"failures": fails, "binary_mult_refused": refused, "trials": args.trials}
    for name, bad in fails.items():
        rep.check(name, args.trials, bad, bad == 0)


def run_coloring(args, rep: Report) -> None:
    if args.input:
        with open(args.input) as fh:
            E = coloring.parse_gridset(fh.read())
        col = coloring.l_coloring(E)
        ok = coloring.verify_coloring(E, col)
        rep.results = {"colors": col.num_colors, "bound": coloring.color_bound(E.k),
                       "coloring": coloring.format_coloring(col)}
        rep.check("valid", E.k, ok.valid, ok.valid)
        rep.check("within_bound", E.k, col.num_colors, col.num_colors <= coloring.color_bound(E.k))
        return
    cells = [(i, j) for i in range(args.grid) for j in range(args.grid)]
    if args.exhaustive:
        sets = (E for k in range(args.kmax + 1) for E in itertools.combinations(cells, k))
    else:
        rng = np.random.default_rng(args.seed)
        sets = ([cells[c] for c in rng.choice(len(cells), int(rng.integers(1, args.kmax + 1)),
                                              replace=False)] for _ in range(args.trials))
    checked = invalid = over = 0
    worst_ratio = 0.0
    for E in sets:
        col = coloring.l_coloring(E)
        checked += 1
        if not coloring.verify_coloring(E, col):
            invalid += 1
            rep.witnesses.append({"invalid": E})
        if len(E):
            b = coloring.color_bound(len(E))
            over += col.num_colors > b
            worst_ratio = max(worst_ratio, col.num_colors / b)
    rep.results = {"sets": checked, "max_colors_over_bound": worst_ratio}
    rep.check("colorings_valid", checked, invalid, invalid == 0)
    rep.check("colors_within_bound", checked, over, over == 0)


def run_embedding(args, rep: Report) -> None:
    cells = [(i, j) for i in range(args.n) for j in range(args.n)]
    failures, methods = 0, {}
    for t in range(args.trials):
        rng = np.random.default_rng([args.seed, t])
        k = int(rng.integers(1, args.kmax + 1))
        E = coloring.GridSet([cells[c] for c in rng.choice(len(cells), k, replace=False)], args.n)
        emb = coloring.or_embedding(E, coloring.l_coloring(E), args.n)
        chk = coloring.verify_or_embedding(emb, args.budget)
        methods[chk.method] = methods.get(chk.method, 0) + 1
        if not chk.passed:
            failures += 1
            rep.witnesses.append({"E": E.sorted(), "witness": str(chk.witness)})
    rep.results = {"methods": methods, "trials": args.trials}
    if args.trials:
        rep.check("or_embedding", {"n": args.n, "kmax": args.kmax}, failures, failures == 0)


def _random_pair(n: int, rng: np.random.Generator, max_overlap: int | None, density: float):
    """Random Boolean pair, optionally rejection-sampled to cap witness counts."""
    while True:
        A = rng.random((n, n)) < density
        B = rng.random((n, n)) < density
        if max_overlap is None or (A.astype(int) @ B.astype(int)).max() <= max_overlap:
            return BoolMatrix(A), BoolMatrix(B)


def run_bmm(args, rep: Report) -> None:
    its = args.iterations if args.iterations == "exact" else int(args.iterations)
    total_err = total_q = 0
    for t in range(args.trials):
        rng = np.random.default_rng([args.seed, t])
        A, B = _random_pair(args.n, rng, args.max_overlap, args.density)
        res = coloring.grover_bmm(A, B, its, seed=args.seed + t)
        total_err += res.errors
        total_q += res.queries
        rep.witnesses.append({"trial": t, "queries": res.queries, "errors": res.errors,
                              "max_error_probability": float(res.error_probability.max())})
    rep.results = {"queries": total_q, "errors": total_err}
    if args.trials:
        rep.check("grover_bmm_errors", {"n": args.n, "iterations": args.iterations}, total_err,
                  total_err == 0)


def run_sparse_mv(args, rep: Report) -> None:
    rng = np.random.default_rng(args.seed)
    A = BoolMatrix(rng.random((args.m or args.n, args.n)) < 0.5)
    x = np.zeros(args.n, dtype=int)
    x[rng.choice(args.n, args.weight, replace=False)] = 1
    res = coloring.sparse_mv(A, x.tolist(), args.weight_budget or args.weight, seed=args.seed)
    truth = tuple(int(v) for v in A.data.astype(int) @ x > 0)
    rep.results = {"support": res.support, "search_queries": res.search_queries,
                   "output_phase_queries": res.output_phase_queries,
                   "undetected": res.undetected, "stop_miss_probability": res.stop_miss_probability}
    rep.check("output_phase_queries", args.n, res.output_phase_queries, res.output_phase_queries == 0)
    rep.check("output_correct", args.n, res.output == truth, res.output == truth)


def run_ksdw(args, rep: Report) -> None:
    if args.stacked:
        M = reductions.stacked_hard_matrix(args.n, args.seed)
        limit = args.n * math.log2(args.n)
        rep.results = {"rows": M.rows, "blocks": reductions.stacked_block_sizes(args.n),
                       "half_norm": reductions.half_norm(M)}
        rep.check("row_count", args.n, M.rows, M.rows <= limit)
        return
    A, cert = reductions.ksdw_matrix(args.n, args.k, args.seed, args.budget, args.samples)
    weights = set(A.row_weights())
    rep.results = {"certificate": cert.to_dict(), "half_norm": reductions.half_norm(A)}
    rep.check("row_weight", {"n": args.n, "k": args.k}, sorted(weights),
              weights == {args.n // (2 * args.k)})
    if args.require_good:
        rep.check("good_rows", {"n": args.n, "k": args.k}, cert.sets_passing, cert.passed)


def run_bounds_curve(args, rep: Report) -> None:
    lo, hi = _range(args.s_range)
    Ss = list(range(lo, hi + 1, args.s_step))
    tags = list(bounds.CURVES) if args.problem == "all" else [args.problem]
    rows = []
    for tag in tags:
        part = bounds.curve_rows(tag, [args.n], Ss, args.d)
        rows.extend(part)
        vals = [r["value"] for r in part]
        mono = all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
        rep.check("nonincreasing_in_S", tag, len(vals), mono)
    rep.results = {"points": len(rows)}
    if args.table:
        with open(args.table, "w") as fh:
            fh.write(bounds.curve_csv(rows))


def run_cm_bound(args, rep: Report) -> None:
    ns = _ints(args.n_list)
    if args.instance == "matvec":
        vals = [bounds.cm_matvec(n, args.d, args.alpha, args.gamma) for n in ns]
        expected = 4.0
    elif args.instance == "matmul":
        vals = [bounds.cm_matmul(n, args.d, args.T) for n in ns]
        expected = None
    else:
        raise ConfigError(f"unknown instance {args.instance!r}")
    rep.results = {"n": ns, "values": vals}
    if expected and len(ns) > 1:
        for a, b, va, vb in zip(ns, ns[1:], vals, vals[1:]):
            if b == 2 * a:
                ratio = vb / va
                rep.check("doubling_ratio", [a, b], ratio, abs(ratio / expected - 1) <= args.tolerance)


SUITES = {
    "verify-recording": run_verify_recording,
    "rigidity": run_rigidity,
    "partition": run_partition,
    "bucket": run_bucket,
    "reductions": run_reductions,
    "coloring": run_coloring,
    "embedding": run_embedding,
    "bmm-sim": run_bmm,
    "sparse-mv": run_sparse_mv,
    "ksdw": run_ksdw,
    "bounds-curve": run_bounds_curve,
    "cm-bound": run_cm_bound,
}


def _common(p: argparse.ArgumentParser, trials: int = 100, budget: int = 200_000,
            tolerance: float = 1e-9) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--budget", type=int, default=budget)
    p.add_argument("--tolerance", type=float, default=tolerance)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--config", help="JSON file whose keys override defaults")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtslab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-recording")
    _common(p)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--queries", type=int, default=2)
    p.add_argument("--work-dim", type=int, default=4)

    def matrix_args(p):
        p.add_argument("--matrix", help="matrix file")
        p.add_argument("--identity", type=int, help="use the N x N identity")
        p.add_argument("--modulus", type=int, default=5)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--h", type=int, required=True)
        p.add_argument("--c", default="1")

    p = sub.add_parser("rigidity")
    _common(p)
    matrix_args(p)
    p.add_argument("--sampler", choices=["uniform", "toeplitz"])
    p.add_argument("--size", type=int, default=3)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--expect", choices=["rigid", "not-rigid"])

    p = sub.add_parser("partition")
    _common(p)
    matrix_args(p)
    p.add_argument("--rows", help="comma-separated row set U")

    p = sub.add_parser("bucket")
    _common(p)
    p.add_argument("--sets", required=True, help="column sets, e.g. '0,1;2,3;4,5'")
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--alpha", default="1/2")
    p.add_argument("--query", help="query set I; omit to test every admissible I")

    p = sub.add_parser("reductions")
    _common(p)
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--moduli", default="5,7")

    p = sub.add_parser("coloring")
    _common(p)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--grid", type=int, default=4)
    p.add_argument("--kmax", type=int, default=6)
    p.add_argument("--input", help="grid file to color")

    p = sub.add_parser("embedding")
    _common(p, trials=50, budget=20)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--kmax", type=int, default=4)

    p = sub.add_parser("bmm-sim")
    _common(p, trials=5)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--iterations", default="exact")
    p.add_argument("--max-overlap", type=int, help="cap on witnesses per entry")
    p.add_argument("--density", type=float, default=0.5)

    p = sub.add_parser("sparse-mv")
    _common(p)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--weight", type=int, default=1)
    p.add_argument("--weight-budget", type=int, default=0)

    p = sub.add_parser("ksdw")
    _common(p, budget=5000)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--stacked", action="store_true")
    p.add_argument("--require-good", action="store_true")

    p = sub.add_parser("bounds-curve")
    _common(p)
    p.add_argument("--problem", default="all")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--s-range", default="8:64")
    p.add_argument("--s-step", type=int, default=1)
    p.add_argument("--table", help="write the curve CSV here")

    p = sub.add_parser("cm-bound")
    _common(p, tolerance=0.01)
    p.add_argument("--instance", choices=["matvec", "matmul"], default="matvec")
    p.add_argument("--n-list", default="8,16,32")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.1717)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--T", type=float, default=1.0)
    parser.suites = sub.choices
    return parser


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Fill arguments left at their defaults from the JSON ``--config`` file."""
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    subparser = parser.suites[args.command]
    for key, val in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r} for {args.command}")
        if getattr(args, attr) == subparser.get_default(attr):
            setattr(args, attr, val)


def run_experiment(args: argparse.Namespace) -> Report:
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("out", "format", "config", "timing")}
    rep = Report(args.command, config)
    t0 = time.perf_counter()
    SUITES[args.command](args, rep)
    if args.timing:
        rep.wall_time = time.perf_counter() - t0
    return rep


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.config:
            _apply_config(parser, args)
        if getattr(args, "trials", 1) < 0 or getattr(args, "budget", 1) <= 0:
            raise ConfigError("trials must be non-negative and budgets positive")
        rep = run_experiment(args)
    except (rigidity.BudgetExceeded, coloring.BudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, AlgebraError, OSError, rigidity.RigidityError, coloring.ColoringError,
            reductions.ReductionError, qsim.QsimError, bounds.BoundsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = emit_report(rep, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    if not rep.checks:
        return EXIT_EMPTY
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
