"""Command-line interface: ``irlasso {fit,path,simulate,real-data}``.

Exit codes: 0 success, 2 configuration error, 3 solver did not converge,
4 input/output failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from irlasso import __version__
from irlasso.data_io import (
    WDBC_SCHEMA,
    ColumnSchema,
    ResultsTable,
    load_csv,
    write_path_curve,
    write_results,
)
from irlasso.errors import (
    AggregationError,
    ConfigError,
    ContractError,
    DataFormatError,
    DegenerateProblemError,
    NonFiniteIterateError,
)
from irlasso.families import GlmFamily, cross_entropy_loss
from irlasso.path import PathConfig, ScalingStrategy, fit_path, irls_fit, lambda_max
from irlasso.real_data import DEFAULT_SEED, WDBC_N_TRAIN, path_test_losses, run_real_data
from irlasso.sim import RHO_GAMMA_PAIRS, TABLE_PRESETS, SimConfig, run_table

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4
OUTPUT_DIR_ENV = "IRLASSO_OUTPUT_DIR"
DEFAULT_WDBC = Path(__file__).resolve().parents[2] / "data" / "wdbc.data"

log = logging.getLogger("irlasso")


class ConvergenceFailure(RuntimeError):
    pass


def _strategy_label(s: ScalingStrategy) -> str:
    return "irl" if s is ScalingStrategy.ITERATIVE else "constant"


def _out_path(name: str | None, default: str) -> Path:
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return Path(name) if name else base / default


def _schema(args) -> ColumnSchema:
    if args.wdbc:
        return WDBC_SCHEMA
    resp = args.response
    if resp is None:
        raise ConfigError("--response is required unless --wdbc is given")
    if resp.isdigit():
        resp = int(resp)
    ids = [int(c) if c.isdigit() else c for c in (args.id_columns or [])]
    return ColumnSchema(
        response_column=resp,
        positive_label=args.positive_label,
        has_header=not args.no_header,
        id_columns=ids,
    )


def _path_config(args) -> PathConfig:
    return PathConfig(
        num_lambdas=getattr(args, "num_lambdas", 100),
        lambda_min_ratio=getattr(args, "lambda_min_ratio", 1e-4),
        irls_tol=args.irls_tol,
        irls_max_iters=args.irls_max_iters,
        cd_tol=args.cd_tol,
        cd_max_cycles=args.cd_max_cycles,
    )


def _write_json(obj, path: Path | None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def _echo(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k != "func"}
    return json.loads(json.dumps(d, default=str))


def cmd_fit(args) -> int:
    family = GlmFamily.parse(args.family)
    scaling = ScalingStrategy.parse(args.scaling)
    data = load_csv(args.data, _schema(args)).validate(family)
    cfg = _path_config(args)
    if args.lam is None and args.lambda_frac is None:
        raise ConfigError("give --lambda or --lambda-frac")
    lam = args.lam
    lmax = lambda_max(data, family, scaling, cfg)
    if lam is None:
        lam = args.lambda_frac * lmax
    res = irls_fit(data, family, lam, scaling, None, cfg)
    report = {
        "metadata": {"version": __version__, "config": _echo(args)},
        "family": family.value,
        "scaling": _strategy_label(scaling),
        "lambda": lam,
        "lambda_max": lmax,
        "intercept": res.coef.b0,
        "coefficients": res.coef.b.tolist(),
        "nonzeros": int(np.count_nonzero(res.coef.b)),
        "converged": res.converged,
        "iterations": res.iters,
        "loss": cross_entropy_loss(family, data, res.coef),
    }
    _write_json(report, Path(args.out) if args.out else None)
    if not res.converged:
        raise ConvergenceFailure(f"IRLS did not converge in {res.iters} iterations")
    return EXIT_OK


def cmd_path(args) -> int:
    family = GlmFamily.parse(args.family)
    schema = _schema(args)
    data = load_csv(args.data, schema).validate(family)
    val = load_csv(args.validation, schema).validate(family) if args.validation else None
    cfg = _path_config(args)
    curves = []
    for name in args.scaling or ["irl", "constant"]:
        s = ScalingStrategy.parse(name)
        path = fit_path(data, family, s, cfg)
        losses = None
        if val is not None:
            losses = path_test_losses(path, val, family)
            j = int(np.nanargmin(losses[::-1]))
            j = len(losses) - 1 - j
            print(f"{_strategy_label(s)}: lambda* = {path.lambdas[j]:.6g} "
                  f"(validation loss {losses[j]:.6g}, nonzeros {np.count_nonzero(path.coefficients[j])})")
        curves.append((_strategy_label(s), path, losses))
    out = _out_path(args.out, "path.csv")
    write_path_curve(curves, out)
    _write_json({"version": __version__, "config": _echo(args)}, out.with_suffix(".meta.json"))
    print(f"wrote {out}")
    return EXIT_OK


def _sim_base(args) -> tuple[SimConfig, list]:
    params = {}
    if args.table:
        params.update(TABLE_PRESETS[args.table])
    if args.family is not None:
        params["family"] = args.family
    if args.tau is not None:
        params["tau"] = args.tau
    if args.xi is not None:
        params["xi"] = None if args.xi.lower() in ("inf", "none") else float(args.xi)
    if args.sparsify is not None:
        params["sparsify"] = args.sparsify
    if args.signal_sign is not None:
        params["signal_sign"] = args.signal_sign
    params.update(n=args.n, p=args.p, replicates=args.replicates, seed=args.seed,
                  num_lambdas=args.num_lambdas)
    if args.rho is not None or args.gamma is not None:
        if args.rho is None or args.gamma is None:
            raise ConfigError("--rho and --gamma must be given together")
        pairs = [(args.rho, args.gamma)]
    else:
        pairs = list(RHO_GAMMA_PAIRS)
    base = SimConfig(**params)
    if base.replicates < 2:
        raise AggregationError("at least 2 replicates are needed for standard errors")
    return base, pairs


def cmd_simulate(args) -> int:
    base, pairs = _sim_base(args)
    strategies = [ScalingStrategy.parse(s) for s in (args.strategies or ["irl", "constant"])]
    cells = run_table(base, strategies, pairs, threads=args.threads)
    for c in cells:
        c.method = "irl" if c.method == "iterative" else c.method
    meta = {
        "version": __version__,
        "seed": base.seed,
        "table": args.table,
        "config": base.to_dict(),
        "pairs": [list(p) for p in pairs],
        "strategies": [_strategy_label(s) for s in strategies],
    }
    out = _out_path(args.out, f"simulate.{args.format}")
    write_results(ResultsTable(cells, meta), out, args.format)
    meta_path = out.with_suffix(out.suffix + ".meta.json")
    if args.format == "csv":
        _write_json(meta, meta_path)
    for c in cells:
        print(f"{c.method:9s} ({c.rho:g},{c.gamma:g})  bias {c.mean['bias']:.2f}  "
              f"TP {c.mean['tp']:.2f} ({c.sem['tp']:.2f})  FP {c.mean['fp']:.2f} ({c.sem['fp']:.2f})  "
              f"loss {c.mean['test_loss']:.4f}  avg var {c.mean['avg_signal_variance']:.3f}"
              + (f"  failures {c.failures}" if c.failures else ""))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_real_data(args) -> int:
    data = load_csv(args.data, WDBC_SCHEMA if not args.response else _schema(args))
    cfg = _path_config(args)
    curves, summaries, (n_tr, n_te) = run_real_data(data, args.seed, args.n_train, cfg)
    out = _out_path(args.out, "real_data_path.csv")
    write_path_curve(curves, out)
    summary = {
        "metadata": {
            "version": __version__,
            "seed": args.seed,
            "n_train": n_tr,
            "n_test": n_te,
            "p": data.p,
            "config": _echo(args),
        },
        "strategies": [asdict(replace(s, strategy=_strategy_label(ScalingStrategy.parse(s.strategy))))
                       for s in summaries],
    }
    summary_path = Path(args.summary) if args.summary else out.with_suffix(".summary.json")
    _write_json(summary, summary_path)
    for s in summaries:
        print(f"{_strategy_label(ScalingStrategy.parse(s.strategy)):9s} min test loss "
              f"{s.min_test_loss:.5f}  l1 {s.l1_norm_at_min:.2f}  nonzeros {s.nonzeros_at_min}")
    print(f"wrote {out} and {summary_path}")
    return EXIT_OK


def _add_solver_opts(p):
    p.add_argument("--irls-tol", type=float, default=1e-6)
    p.add_argument("--irls-max-iters", type=int, default=50)
    p.add_argument("--cd-tol", type=float, default=1e-7)
    p.add_argument("--cd-max-cycles", type=int, default=100_000)


def _add_data_opts(p, required=True):
    p.add_argument("--data", required=required, default=None if required else str(DEFAULT_WDBC))
    p.add_argument("--response", help="response column name or 0-based index")
    p.add_argument("--positive-label", help="text label mapped to 1 (others map to 0)")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--id-columns", nargs="*", help="columns to drop")
    p.add_argument("--wdbc", action="store_true", help="use the UCI wdbc.data layout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irlasso", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit at a single lambda")
    _add_data_opts(p)
    p.add_argument("--family", default="logistic", choices=[f.value for f in GlmFamily])
    p.add_argument("--scaling", default="irl", choices=["constant", "iterative", "irl"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambda-frac", type=float, help="lambda as a fraction of lambda_max")
    p.add_argument("--out")
    _add_solver_opts(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("path", help="regularization path as a curve CSV")
    _add_data_opts(p)
    p.add_argument("--validation", help="CSV with the same schema; reports lambda*")
    p.add_argument("--family", default="logistic", choices=[f.value for f in GlmFamily])
    p.add_argument("--scaling", action="append", choices=["constant", "iterative", "irl"])
    p.add_argument("--num-lambdas", "-m", type=int, default=100)
    p.add_argument("--lambda-min-ratio", type=float, default=1e-4)
    p.add_argument("--out")
    _add_solver_opts(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("simulate", help="Monte Carlo table")
    p.add_argument("--table", choices=sorted(TABLE_PRESETS))
    p.add_argument("--family", choices=[f.value for f in GlmFamily])
    p.add_argument("--tau", type=float)
    p.add_argument("--xi", help="sparsification threshold, or 'inf' for none")
    p.add_argument("--sparsify", choices=["literal", "magnitude"])
    p.add_argument("--signal-sign", type=float, choices=[1.0, -1.0])
    p.add_argument("--rho", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--num-lambdas", "-m", type=int, default=100)
    p.add_argument("--seed", type=int, default=SimConfig.seed)
    p.add_argument("--strategies", nargs="+", choices=["constant", "iterative", "irl"])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("real-data", help="WDBC-style train/test comparison")
    _add_data_opts(p, required=False)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n-train", type=int, default=WDBC_N_TRAIN)
    p.add_argument("--num-lambdas", "-m", type=int, default=100)
    p.add_argument("--lambda-min-ratio", type=float, default=1e-4)
    p.add_argument("--out")
    p.add_argument("--summary")
    _add_solver_opts(p)
    p.set_defaults(func=cmd_real_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ContractError, AggregationError, DegenerateProblemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceFailure, NonFiniteIterateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
