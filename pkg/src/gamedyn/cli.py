"""Command-line entry point: ``gamedyn run`` and ``gamedyn classify``."""

import argparse
import json
import logging
import sys

from .experiments import EXPERIMENTS, classify_dir, default_spec, run

log = logging.getLogger("gamedyn")

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _csv_list(text):
    return [s for s in (t.strip() for t in text.split(",")) if s]


def build_parser():
    parser = _Parser(prog="gamedyn", description="Learning-dynamics regret and passivity experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENTS)}")
    r.add_argument("--config", help="JSON file whose keys mirror the flags below")
    r.add_argument("--models", type=_csv_list, help="comma-separated model tags")
    r.add_argument("--dt", type=float, help="RK4 step (default 1e-3, at most 1e-2)")
    r.add_argument("--T", type=float, dest="T", help="horizon")
    r.add_argument("--lambda", type=float, dest="lam", help="rate parameter (default 1)")
    r.add_argument("--gamma", type=float, help="higher-order filter gain (default 1)")
    r.add_argument("--seed", type=int, help="seed for random starts")
    r.add_argument("--outdir", help="artifact directory (default results/<experiment>)")
    r.add_argument("--record-every", type=int, dest="record_every", help="keep every k-th step")
    r.add_argument("--x0", type=lambda s: [float(v) for v in _csv_list(s)], help="initial strategy, comma-separated")
    r.add_argument("--jobs", type=int, help="worker processes (default 1)")

    c = sub.add_parser("classify", help="classification table from a passivity-scan directory")
    c.add_argument("--indir", required=True)
    return parser


CONFIG_KEYS = {
    "models": "models", "dt": "dt", "T": "T", "lambda": "lam", "gamma": "gamma", "seed": "seed",
    "outdir": "outdir", "record_every": "record_every", "x0": "x0", "jobs": "jobs",
}


def _overrides(args):
    opts = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        unknown = set(cfg) - set(CONFIG_KEYS) - {"experiment"}
        if unknown:
            raise UsageError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        for key, dest in CONFIG_KEYS.items():
            if key in cfg:
                opts[dest] = cfg[key]
        if isinstance(opts.get("models"), str):
            opts["models"] = _csv_list(opts["models"])
    for dest in CONFIG_KEYS.values():
        value = getattr(args, dest, None)
        if value is not None:
            opts[dest] = value
    if "x0" in opts:
        opts["x0"] = tuple(opts["x0"])
    return opts


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.command == "classify":
            table = classify_dir(args.indir)
            for row in table:
                print(f"{row['model']:<11} regret={row['finite_regret_evidence']:<9} "
                      f"delta={row['delta_evidence']:<9} ei={row['ei_evidence']}")
            return EXIT_OK
        if args.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {args.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        spec = default_spec(args.experiment, **_overrides(args))
    except (UsageError, ValueError, OSError) as exc:
        print(f"gamedyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        code, report = run(spec)
    except OSError as exc:
        print(f"gamedyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for s in report["runs"]:
        if "error" in s:
            log.warning("%s: %s", s["label"], s["error"])
        else:
            log.info("%-24s avg_reward=%.4f sup_regret=%.4f", s["label"], s["final_avg_reward"], s["sup_regret"])
    log.info("wrote %s", spec.outdir)
    return code


if __name__ == "__main__":
    sys.exit(main())
