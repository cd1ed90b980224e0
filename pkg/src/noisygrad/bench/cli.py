"""``noisygrad-bench`` command line: reference, sweep, plot, iat-oracle, selftest.

Exit codes: 0 success, 2 configuration error, 3 numerical or stability error.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

from ..exceptions import ConfigError, NumericalError
from .config import apply_overrides, build_model, dump_config, load_config
from .iat import format_table, iat_csv, iat_table
from .plot import PLOT_KINDS, make_plot
from .reference import reference_path, run_reference, write_reference
from .selftest import run_selftest
from .sweep import run_sweep, write_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("noisygrad.bench")


def _common(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="YAML config path or preset name")
    parser.add_argument("--out", default=default, help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, default=default, help="master seed (overrides the config)")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="worker processes for independent cells")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser():
    parser = argparse.ArgumentParser(prog="noisygrad-bench", description=__doc__.splitlines()[0])
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _common(p, suppress=True)
        return p

    add("reference", "run the long MALA reference and cache its moments")
    add("sweep", "run every (method, h, n, chain) cell of the config grid")
    p = add("plot", "render SVG plus tidy CSV from results")
    p.add_argument("--kind", choices=PLOT_KINDS, default="mse_curves")
    p.add_argument("results", nargs="*", help="sweep directories, or the IAT CSV for iat_scaling")
    p = add("iat-oracle", "tabulate oracle (and optionally empirical) autocorrelation times")
    p.add_argument("--h", type=float, nargs="+", default=[0.05, 0.1, 0.2])
    p.add_argument("--gamma", type=float, nargs="+", default=[0.0])
    p.add_argument("--sigma2", type=float, nargs="+", default=[50.0, 100.0, 500.0])
    p.add_argument("--steps", type=int, default=0, help="steps per chain for empirical estimates (0: oracle only)")
    p.add_argument("--chains", type=int, default=64)
    add("selftest", "run fast property checks")
    add("show-config", "print the resolved configuration as YAML")
    return parser


def _config(args):
    if args.config is None:
        raise ConfigError("--config is required for this command")
    return apply_overrides(load_config(args.config), seed=args.seed, out=args.out)


def cmd_reference(args):
    cfg = _config(args)
    model = build_model(cfg.model, cfg.seed)
    result = run_reference(model, cfg.reference, cfg.seed, cfg.theta0)
    path = write_reference(result, reference_path(cfg.out, model))
    print(f"reference written to {path} (acceptance {result['acceptance_rate']:.3f})")
    for w in result["warnings"]:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = _config(args)
    start = time.perf_counter()
    results = run_sweep(cfg, threads=max(1, args.threads))
    csv_path, json_path = write_sweep(cfg, results)
    unstable = sum(not r.stable for r in results)
    print(f"{len(results)} cells ({unstable} unstable) in {time.perf_counter() - start:.1f}s -> {csv_path}, {json_path}")
    return EXIT_OK


def cmd_plot(args):
    paths = args.results
    if not paths:
        if args.config is None and args.out is None:
            raise ConfigError("give result paths or --config/--out")
        paths = [args.out if args.out is not None else _config(args).out]
    svg, table = make_plot(paths, args.kind)
    print(f"wrote {svg} and {table}")
    return EXIT_OK


def cmd_iat_oracle(args):
    seed = 0 if args.seed is None else args.seed
    rows = iat_table(args.h, args.gamma, args.sigma2, args.steps, args.chains, seed)
    print(format_table(rows))
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "iat.csv").write_text(iat_csv(rows), encoding="utf-8")
        print(f"wrote {out / 'iat.csv'}")
    return EXIT_OK


def cmd_selftest(args):
    ok = run_selftest(seed=0 if args.seed is None else args.seed)
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_show_config(args):
    sys.stdout.write(dump_config(_config(args)))
    return EXIT_OK


COMMANDS = {
    "reference": cmd_reference,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
    "iat-oracle": cmd_iat_oracle,
    "selftest": cmd_selftest,
    "show-config": cmd_show_config,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
