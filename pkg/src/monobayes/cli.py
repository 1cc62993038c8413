"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 runtime/simulation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from monobayes.densities import make_truth
from monobayes.experiments.config import ConfigError, load_config, parse_config
from monobayes.experiments.report import emit_report, rate_svg, write_draws
from monobayes.experiments.runner import (
    ExperimentError,
    run_boundary_experiment,
    run_rate_experiment,
)
from monobayes.grenander import grenander_fit
from monobayes.mixture import adaptive_kl_partition, kl_divergence
from monobayes.posterior import effective_sample_size, run_posterior
from monobayes.summaries import (
    credible_band,
    posterior_mean_pointwise,
    posterior_median_pointwise,
)

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _read_data(path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    try:
        values = json.loads(text)
    except json.JSONDecodeError:
        values = [float(tok) for tok in text.replace(",", " ").split()]
    return np.asarray(values, dtype=float)


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_fit(args):
    raw = json.loads(Path(args.config).read_text(encoding="utf-8")) if args.config else {"scenario": "fit"}
    cfg = parse_config(raw)
    x = _read_data(args.data)
    draws = run_posterior(x, cfg.prior.build(), cfg.mcmc.build(cfg.seed if args.seed is None else args.seed))
    L = cfg.support_bound if math.isfinite(cfg.support_bound) else float(np.max(x))
    grid = np.linspace(0.0, L, args.grid)
    lower, upper = credible_band(draws, grid, args.level)
    trace = draws.values_at(L / 2.0)
    ess = effective_sample_size(trace) if trace.size >= 10 else None
    out = {
        "n": int(x.size),
        "draws": len(draws),
        "grid": grid.tolist(),
        "posterior_median": posterior_median_pointwise(draws, grid).tolist(),
        "posterior_mean": posterior_mean_pointwise(draws, grid).tolist(),
        "band_level": args.level,
        "band_lower": lower.tolist(),
        "band_upper": upper.tolist(),
        "ess_f_at_half_L": None if ess is None else ess.value,
        "acceptance_rates": draws.acceptance_rates,
    }
    _dump(out, args.output)
    if args.draws:
        with open(args.draws, "w", encoding="utf-8", newline="\n") as fh:
            for P in draws:
                fh.write(json.dumps(P.to_dict(), separators=(",", ":")) + "\n")
    return 0


def cmd_grenander(args):
    fit = grenander_fit(_read_data(args.data))
    _dump(
        {
            "knots": fit.density.knots.tolist(),
            "heights": fit.density.heights.tolist(),
            "value_at_zero": fit.value_at_zero,
        },
        args.output,
    )
    return 0


def cmd_approximate(args):
    params = {"L": args.L}
    if args.rate is not None:
        params["rate"] = args.rate
    f = make_truth(args.family, params)
    M = args.M if args.M is not None else f.value_at_zero
    P, trace = adaptive_kl_partition(f, args.eps, args.L, M)
    kl, m2 = kl_divergence(f, P.to_step(), second_moment=True)
    _dump(
        {
            "atoms": P.atoms.tolist(),
            "weights": P.weights.tolist(),
            "piece_count": trace.piece_count,
            "piece_bound": trace.piece_bound(M, args.L, args.eps),
            "steps": trace.steps,
            "epsilons": list(trace.epsilons),
            "kl": kl,
            "kl_second_moment": m2,
        },
        args.output,
    )
    return 0


def _run_experiment(args, runner, expect_loss=None):
    cfg = load_config(args.config)
    if expect_loss and cfg.experiment.loss != expect_loss:
        raise ConfigError(f"this subcommand needs loss {expect_loss!r}")
    out_dir = Path(args.output_dir or cfg.output_dir)
    report = runner(cfg, workers=args.workers)
    emit_report(report, "json", out_dir)
    emit_report(report, "csv", out_dir)
    if report.kind == "rate":
        emit_report(report, "svg", out_dir)
    write_draws(report, out_dir)
    print(f"{cfg.scenario}: verdict {report.verdict} -> {out_dir}")
    return 0


def cmd_plot(args):
    reports = [json.loads(Path(p).read_text(encoding="utf-8")) for p in args.reports]
    Path(args.output).write_text(rate_svg([r for r in reports if r.get("kind") == "rate"]), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="monobayes", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="posterior summaries for one dataset")
    p.add_argument("data", help="JSON array or whitespace-separated numbers")
    p.add_argument("--config", help="experiment-style JSON (prior and mcmc sections used)")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--draws", help="write draws as JSON lines here")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("grenander", help="Grenander NPMLE of a dataset")
    p.add_argument("data")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_grenander)

    p = sub.add_parser("approximate", help="adaptive KL step approximation of a density")
    p.add_argument("--family", default="triangular",
                   choices=["uniform", "triangular", "truncated-exponential"])
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--rate", type=float)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--M", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_approximate)

    for name, runner, loss in (
        ("rate", run_rate_experiment, None),
        ("boundary", run_boundary_experiment, None),
        ("supnorm", run_rate_experiment, "sup"),
    ):
        p = sub.add_parser(name, help=f"{name} experiment from a JSON config")
        p.add_argument("config")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--output-dir")
        p.set_defaults(func=lambda a, r=runner, l=loss: _run_experiment(a, r, l))

    p = sub.add_parser("plot", help="SVG rate plot from one or more report.json files")
    p.add_argument("reports", nargs="+")
    p.add_argument("-o", "--output", default="plot.svg")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExperimentError, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
