"""Command line entry point ``nmmb``."""
import argparse
import logging
import math
import sys
from pathlib import Path

from . import cache
from .config import parse_config, with_overrides
from .errors import ConfigurationError, DomainError, NumericalError
from .presets import PRESETS, load_preset, preset_text

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("nmmb")


def _emax(text):
    if text.lower() in ("complete", "inf", "none"):
        return math.inf
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive energy or 'complete', got {text!r}")
    if not x > 0:
        raise argparse.ArgumentTypeError("e_cut must be positive")
    return x


def _kp_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="nmmb", description=(
        "Many-body non-Markovianity in a tunnelling double well: spectral "
        "dynamics, Fock-sector reduction and trace-distance estimators."))
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write its CSV")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=list(PRESETS))
    src.add_argument("--config", type=Path, help="scenario document")
    run.add_argument("--h", type=float, help="mesh spacing")
    run.add_argument("--emax", type=_emax, help="energy cutoff, or 'complete'")
    run.add_argument("--tmax", type=float, help="final time")
    run.add_argument("--samples", type=int, help="number of time samples")
    run.add_argument("--out", type=Path, default=Path("nmmb-out"), help="output directory")
    run.add_argument("--plot", action="store_true", help="also write SVG panels")
    run.add_argument("--kp", type=_kp_list, help="k-particle distances, e.g. 1,2,3")
    run.add_argument("--no-cache", action="store_true", help="bypass the basis cache")

    c = sub.add_parser("cache", help="manage the spectral-basis cache")
    csub = c.add_subparsers(dest="action", required=True)
    csub.add_parser("clear", help="delete cached bases")
    csub.add_parser("path", help="print the cache directory")

    pr = sub.add_parser("presets", help="inspect built-in scenarios")
    psub = pr.add_subparsers(dest="action", required=True)
    psub.add_parser("list", help="list preset names")
    show = psub.add_parser("show", help="print a preset document")
    show.add_argument("name", choices=list(PRESETS))
    return p


def _run(args):
    if args.preset:
        cfg = load_preset(args.preset)
    else:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc.strerror}") from None
        cfg = parse_config(text)
    cfg = with_overrides(cfg, h=args.h, e_cut=args.emax, t_max=args.tmax,
                         n_samples=args.samples, kp=args.kp,
                         plot=True if args.plot else None)
    from .harness import run_scenario
    result = run_scenario(cfg, out_dir=args.out, use_cache=not args.no_cache)
    rep = result.report
    print(f"wrote {result.csv_path} ({rep.times.size} samples)")
    for p in result.paths[1:]:
        print(f"wrote {p}")
    print(f"witness runs: {len(rep.witnesses)}; max increase of D: {rep.max_increase:.6g}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "cache":
            if args.action == "clear":
                n = cache.clear()
                print(f"removed {n} cached basis file(s) from {cache.cache_dir()}")
            else:
                print(cache.cache_dir())
            return 0
        if args.command == "presets":
            if args.action == "list":
                for name, (desc, _) in PRESETS.items():
                    print(f"{name:8s} {desc}")
            else:
                sys.stdout.write(preset_text(args.name))
            return 0
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
