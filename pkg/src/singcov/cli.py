"""``singcov`` command line.

Exit codes: 0 success, 1 input or validation error, 2 numerical degeneracy,
3 file I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .applications import (
    capon_conventional,
    capon_full,
    capon_power,
    classifier_train,
    classify,
    linear_apply,
    linear_train,
    mse_penalty,
)
from .bench import ExperimentSpec, emit_eig_data, emit_plot_data, parse_sweep, run_eig_compare, run_lw_compare
from .errors import DegenerateError, EnsembleError, EvaluationError, InputError, RankError
from .estimator import EstimatorConfig, invcov_estimate
from .matio import MatrixIOError, atomic_write, matrix_to_json, read_matrix

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_IO = 0, 1, 2, 3

METHOD_NAMES = {"exact": "exact", "asymptotic": "asymptotic", "mc": "monte-carlo", "auto": "auto"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _input_path(p: str) -> Path:
    path = Path(p)
    if not path.is_file():
        raise MatrixIOError(f"input file not found: {path}")
    if not os.access(path, os.R_OK):
        raise MatrixIOError(f"input file not readable: {path}")
    return path


def _output_path(p: str | None) -> Path | None:
    if p is None:
        return None
    path = Path(p)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise MatrixIOError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise MatrixIOError(f"output directory not writable: {parent}")
    return path


def _config(args, L: int) -> EstimatorConfig:
    return EstimatorConfig(
        L=L,
        method=METHOD_NAMES[args.method],
        samples=args.samples,
        seed=args.seed,
        threads=args.threads,
    )


def _fmt(v) -> str:
    v = complex(v)
    if v.imag == 0:
        return f"{v.real:.12g}"
    return f"{v.real:.12g}{v.imag:+.12g}j"


def cmd_estimate(args) -> int:
    src = _input_path(args.input)
    out = _output_path(args.out)
    k = read_matrix(src)
    cfg = _config(args, args.L)
    t0 = time.perf_counter()
    spec, est = invcov_estimate(k, cfg)
    t1 = time.perf_counter()
    diag = est.diagonal()
    matrix = spec.reconstruct(1.0 / diag if args.inverse else diag)
    t2 = time.perf_counter()
    diagnostics = {
        "L": args.L,
        "rank": spec.rank,
        "dim": spec.dim,
        "lambda": est.lam.tolist(),
        "mu": est.mu,
        "method": est.method_used,
        "output": "sigma-estimate" if args.inverse else "invcov",
        "timings": {"engine_s": t1 - t0, "reassembly_s": t2 - t1},
    }
    if est.stderr is not None:
        diagnostics["stderr"] = est.stderr.tolist()
    print(f"rank N={spec.rank}, M={spec.dim}, L={args.L}, method={est.method_used}")
    print(f"mu = {est.mu if est.mu is not None else 'n/a (full rank)'}")
    print("lambda = " + ", ".join(f"{v:.10g}" for v in est.lam))
    if out is not None:
        atomic_write(out, json.dumps({"matrix": matrix_to_json(matrix), "diagnostics": diagnostics}, indent=1))
        print(f"wrote {out}")
    return EXIT_OK


def cmd_capon(args) -> int:
    k = read_matrix(_input_path(args.input))
    a = read_matrix(_input_path(args.steering)).ravel()
    cfg = _config(args, max(args.L - 1, 1))
    print(f"conventional  {capon_conventional(k, a):.12g}")
    try:
        print(f"full          {capon_full(k, a):.12g}")
    except RankError:
        print("full          n/a (K is singular)")
    print(f"reduced (L={args.L})  {capon_power(k, a, args.L, cfg):.12g}")
    return EXIT_OK


def cmd_classify(args) -> int:
    x0 = read_matrix(_input_path(args.train0))
    x1 = read_matrix(_input_path(args.train1))
    test = read_matrix(_input_path(args.test))
    out = _output_path(args.out)
    clf = classifier_train(x0, x1, args.L, _config(args, args.L), gamma=args.gamma)
    decisions, stats = classify(clf, test)
    if out is None:
        print(f"{'sample':>6}  decision  statistic")
        for i, (d, s) in enumerate(zip(decisions, stats)):
            print(f"{i:>6}  H{d:<7}  {s:.6g}")
    else:
        lines = ["sample,decision,statistic"]
        lines += [f"{i},{d},{s!r}" for i, (d, s) in enumerate(zip(decisions, stats))]
        atomic_write(out, "\n".join(lines) + "\n")
    print(f"{int(decisions.sum())} of {decisions.size} samples classified H1")
    return EXIT_OK


def cmd_linear(args) -> int:
    x = read_matrix(_input_path(args.x))
    y = read_matrix(_input_path(args.y))
    obs = read_matrix(_input_path(args.obs)).ravel()
    out = _output_path(args.out)
    est = linear_train(x, y, args.L, _config(args, args.L))
    xhat = linear_apply(est, obs)
    n = y.shape[1]
    try:
        penalty = mse_penalty(n, args.L)
    except DegenerateError:
        penalty = float("inf")
    print("estimate = [" + ", ".join(_fmt(v) for v in xhat) + "]")
    print(f"penalty factor 1 + L/(N-L) = {penalty:.12g}")
    if out is not None:
        atomic_write(out, json.dumps({"estimate": matrix_to_json(xhat), "penalty": penalty}, indent=1))
    return EXIT_OK


def _bench_spec(args) -> ExperimentSpec:
    if args.alpha is not None:
        sigma = ("scaled-identity", args.alpha)
    else:
        sigma = ("toeplitz", args.beta)
    return ExperimentSpec(
        M=args.M,
        N=args.N,
        sigma=sigma,
        L_sweep=parse_sweep(args.L_sweep),
        trials=args.trials,
        seed=args.seed,
        metric=args.metric,
        invcov_rescale=args.invcov_rescale,
        method=METHOD_NAMES[args.method],
        samples=args.samples,
    )


def cmd_bench_lw(args) -> int:
    out = _output_path(args.out)
    spec = _bench_spec(args)
    result = run_lw_compare(spec)
    emit_plot_data(result, out, include_raw=True)
    print(f"LW error {result.lw_error:.6g}; raw K error {result.raw_error:.6g}")
    if result.L:
        i = int(np.argmin(result.mean_error))
        print(f"best L={result.L[i]} with invcov error {result.mean_error[i]:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_bench_eig(args) -> int:
    out = _output_path(args.out)
    spec = _bench_spec(args)
    result = run_eig_compare(spec)
    emit_eig_data(result, out)
    zeros = result.raw_zero_counts
    print(f"raw K: {zeros.min()} to {zeros.max()} zero eigenvalues, max deviation {result.max_deviation():.6g}")
    for L in spec.L_sweep:
        print(f"L={L}: {int(result.invcov_zero_counts[L].sum())} zero eigenvalues in total, "
              f"max deviation {result.max_deviation(L):.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_verify

    ok = run_verify(quick=args.quick)
    print("all suites passed" if ok else "some suites FAILED")
    return EXIT_OK if ok else EXIT_DEGENERATE


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="singcov", description="Ensemble estimators for singular sample covariance matrices.")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: $SINGCOV_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def engine_flags(p, default_method="auto"):
        p.add_argument("--method", choices=sorted(METHOD_NAMES), default=default_method)
        p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo draws")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("estimate", help="invcov_L(K) or its inverse")
    p.add_argument("--input", required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--inverse", action="store_true", help="write invcov_L(K)^-1 (a covariance estimate)")
    engine_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("capon", help="conventional, full and reduced Capon power")
    p.add_argument("--input", required=True)
    p.add_argument("--steering", required=True)
    p.add_argument("--L", type=int, required=True)
    engine_flags(p)
    p.set_defaults(func=cmd_capon)

    p = sub.add_parser("classify", help="quadratic classifier from two training sets")
    p.add_argument("--train0", required=True)
    p.add_argument("--train1", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--out")
    engine_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("linear", help="trained linear estimator applied to one observation")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--out")
    engine_flags(p)
    p.set_defaults(func=cmd_linear)

    for name, func, help_text in (
        ("bench-lw", cmd_bench_lw, "Frobenius error over an L sweep against Ledoit-Wolf"),
        ("bench-eig", cmd_bench_eig, "eigenvalue curves of Sigma, K and invcov_L(K)^-1"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--M", type=int, required=True)
        p.add_argument("--N", type=int, required=True)
        group = p.add_mutually_exclusive_group()
        group.add_argument("--beta", type=float, default=10.0, help="Toeplitz decay")
        group.add_argument("--alpha", type=float, default=None, help="use Sigma = alpha I")
        p.add_argument("--L-sweep", dest="L_sweep", required=True, help="start:stop:step (inclusive) or a,b,c")
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--metric", choices=["paper-frobenius", "standard-frobenius"], default="paper-frobenius")
        p.add_argument("--invcov-rescale", dest="invcov_rescale", choices=["none", "trace"], default="none")
        p.add_argument("--out", required=True)
        engine_flags(p)
        p.set_defaults(func=func, seed=7)

    p = sub.add_parser("verify", help="run the invariant suites")
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        raw = os.environ.get("SINGCOV_THREADS")
        if raw:
            try:
                args.threads = max(1, int(raw))
            except ValueError:
                print(f"singcov: ignoring invalid SINGCOV_THREADS={raw!r}", file=sys.stderr)
    try:
        return args.func(args)
    except MatrixIOError as exc:
        print(f"singcov: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DegenerateError as exc:
        print(f"singcov: numerically degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (EvaluationError, EnsembleError) as exc:
        print(f"singcov: numerical failure: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except InputError as exc:
        print(f"singcov: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"singcov: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
