"""Batch command line: ``run``, ``sweep``, ``spanner`` and ``diag``.

Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
runtime failures (the failing trial index is reported on stderr).
Arm indices are printed 1-based.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algs import EstimatorError, RandomSampler, beta_bound, diagnostics
from .config import ConfigError, build_source, canonical_json, experiment_configs, load_config, strategy_specs
from .env import BlockSchedule, load_kernel_csv
from .harness import RegretSummary, TrialError, prepare_strategy, run_experiment, scaling_sweep
from .spanner import BudgetError, RankError, approx_spanner, exact_spanner, max_coefficient

RESULT_COLUMNS = ["strategy", "n", "d", "N", "trials", "mean_regret", "stderr",
                  "q10", "q50", "q90", "seed"]
CURVE_COLUMNS = ["strategy", "t", "mean_regret", "stderr", "defined_trials"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_results(path: Path, summaries: list[RegretSummary]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for s in summaries:
            w.writerow([_fmt(v) for v in s.row()])


def write_curves(path: Path, summaries: list[RegretSummary]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for s in summaries:
            c = s.curve
            for t, m, e, k in zip(c["t"], c["mean"], c["stderr"], c["defined"]):
                w.writerow([s.strategy, int(t), _fmt(float(m)), _fmt(float(e)), int(k)])


def write_manifest(out: Path, config_path: str, doc: dict, outputs: list[str]) -> None:
    manifest = {
        "config_path": str(config_path),
        "config": doc,
        "tool_version": __version__,
        "seed": doc["seed"],
        "outputs": [str(out / name) for name in outputs],
    }
    (out / "manifest.json").write_text(canonical_json(manifest))


def _threads(args) -> int:
    return args.threads if args.threads else (os.cpu_count() or 1)


def cmd_run(args) -> int:
    doc = load_config(args.config)
    configs = experiment_configs(doc)
    for cfg in configs:
        _check_strategy(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curve = bool(doc["output"]["curve"])
    outputs = ["results.csv"] + (["curve.csv", "curve.svg"] if curve else [])
    write_manifest(out, args.config, doc, outputs)
    summaries: list[RegretSummary] = []
    for cfg in configs:
        summaries.extend(run_experiment(cfg, threads=_threads(args)))
    write_results(out / "results.csv", summaries)
    if curve:
        from .plotting import plot_curves

        write_curves(out / "curve.csv", summaries)
        plot_curves({f"{s.strategy} n={s.n}": s.curve for s in summaries}, out / "curve.svg")
    for s in summaries:
        print(f"{s.strategy:>16s}  n={s.n:<7d} mean={s.mean:.6g} stderr={s.stderr:.3g}")
    return 0


def cmd_sweep(args) -> int:
    doc = load_config(args.config)
    grid = doc.get("sweep") or {}
    ns = grid.get("n")
    ds = grid.get("d") or [None]
    if not ns:
        stop = doc["stopping"]
        if stop.get("type") != "schedule":
            raise ConfigError("sweep needs 'sweep.n' or a 'schedule' stopping rule")
        ns = stop["n"]
    configs = []
    for d in ds:
        configs.extend(experiment_configs(doc, d_override=d, n_grid=[int(n) for n in ns]))
    for cfg in configs:
        _check_strategy(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, args.config, doc, ["sweep.csv", "sweep.svg"])
    result = scaling_sweep(configs, threads=_threads(args))
    write_results(out / "sweep.csv", result.summaries)
    from .plotting import plot_sweep

    plot_sweep(result.summaries, out / "sweep.svg", result.slopes)
    for (name, d, N), slope in result.slopes.items():
        shown = "undefined" if slope is None else f"{slope:.4f}"
        print(f"slope {name} d={d} N={N}: {shown}")
    return 0


def _check_strategy(cfg) -> None:
    try:
        prepare_strategy(cfg)
    except (ValueError, RankError, EstimatorError) as exc:
        raise ConfigError(f"strategy {cfg.strategy.display}: {exc}") from exc


def cmd_spanner(args) -> int:
    try:
        U = load_kernel_csv(args.kernel)
    except OSError as exc:
        raise ConfigError(f"cannot read kernel {args.kernel}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        basis = exact_spanner(U) if args.mode == "exact" else approx_spanner(U, args.c)
    except RankError as exc:
        raise ConfigError(str(exc)) from exc
    print("indices: " + ",".join(str(i + 1) for i in basis.indices))
    print(f"absdet: {round(basis.absdet, 12)!r}")
    print(f"max_coeff: {round(max_coefficient(U, basis, exclude_basis=True), 12)!r}")
    print(f"C: {basis.C!r}")
    print(f"swaps: {basis.swaps}")
    return 0


def cmd_diag(args) -> int:
    doc = load_config(args.config)
    source = build_source(doc["model"])
    model = source.phases[0].model if isinstance(source, BlockSchedule) else source
    support = model.kernel.support
    N = model.N
    probs = None
    for spec in strategy_specs(doc):
        if spec.name == "alg1" and spec.probs is not None:
            probs = np.asarray(spec.probs)
    p = RandomSampler(N, probs).distribution()
    domain = np.unique(np.vstack([support.reshape(-1, model.d), model.kernel.mean()]), axis=0)
    alphas, lams = [], []
    for U in support:
        try:
            a, lam = diagnostics(U, p, domain)
        except EstimatorError as exc:
            raise ConfigError(str(exc)) from exc
        alphas.append(a)
        lams.append(lam)
    print(f"model: {model.name or 'explicit'} (N={N}, d={model.d}, kernels={support.shape[0]})")
    print(f"alpha: {max(alphas)!r}")
    print(f"beta_l2: {beta_bound(support, model.seed.extreme_points())!r}")
    print(f"lambda_min: {min(lams)!r}")
    print(f"lambda_min_max: {max(lams)!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lowrank-pe", description="Pure exploration on low-rank bandits")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="single experiment")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default="results")
    r.add_argument("--threads", type=int, default=None)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="grid over n / d / strategy")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="sweep")
    s.add_argument("--threads", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    k = sub.add_parser("spanner", help="spanner report for a kernel CSV")
    k.add_argument("--kernel", required=True)
    k.add_argument("--mode", choices=("exact", "approx"), default="exact")
    k.add_argument("--c", type=float, default=2.0)
    k.set_defaults(func=cmd_spanner)

    g = sub.add_parser("diag", help="alpha, beta and lambda_min for a configured model")
    g.add_argument("--config", required=True)
    g.set_defaults(func=cmd_diag)
    return p


def execute(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except TrialError as exc:
        print(f"runtime error in trial {exc.trial_index}: {exc.cause}", file=sys.stderr)
        return 2
    except (BudgetError, RuntimeError, ArithmeticError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
