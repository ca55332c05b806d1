import argparse
import sys

from triples import __version__
from triples.errors import SpecFormatError
from triples.grid import GridSpec
from triples.log import logger, setup_logging
from triples.runner import COMMANDS, EXIT_ERROR, RunConfig, run
from triples.spec_io import parse_kappa


def parse_complex(text):
    """'i', '2i', '1+0.5i', '-1-2j' or a plain real."""
    cleaned = text.strip().replace(" ", "").replace("i", "j")
    if cleaned in ("j", "+j"):
        return 1j
    if cleaned == "-j":
        return -1j
    if cleaned.endswith("j") and cleaned[:-1] and cleaned[-2] in "+-":
        cleaned = cleaned[:-1] + "1j"
    try:
        return complex(cleaned)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def parse_kappa_arg(text):
    kappa = parse_complex(text)
    return parse_kappa({"re": kappa.real, "im": kappa.imag})


def parse_grid(text):
    """'default' or 're_min,re_max,im_min,im_max,re_count,im_count'."""
    if text == "default":
        return None
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("grid must be 'default' or six comma-separated values")
    try:
        re_min, re_max, im_min, im_max = (float(p) for p in parts[:4])
        return GridSpec(re_min, re_max, im_min, im_max, int(parts[4]), int(parts[5]))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {e}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        description="Evaluate and verify Weyl, Livšic and characteristic functions of model triples."
    )
    parser.add_argument("--version", action="version", version=f"triple_lab {__version__}")
    parser.add_argument("command", choices=COMMANDS, help="What to compute.")
    parser.add_argument("--triple", help="Triple spec file (JSON or YAML).")
    parser.add_argument("--measure", help="Measure spec file (JSON or YAML).")
    parser.add_argument("--map", help="Möbius map as 'a,b,c,d' (ad − bc > 0).")
    parser.add_argument("--z", action="append", type=parse_complex, default=[],
                        help="Evaluation point in the upper half-plane (repeatable; overrides --grid).")
    parser.add_argument("--s", action="append", type=float, default=[],
                        help="Real point to classify (repeatable).")
    parser.add_argument("--grid", type=parse_grid, default=None,
                        help="'default' or 're_min,re_max,im_min,im_max,re_count,im_count'.")
    parser.add_argument("--nu", action="append", type=float, default=[],
                        help="Homogeneous exponent ν ∈ (−1, 1) (repeatable for extension-type).")
    parser.add_argument("--side", choices=("positive", "negative"), default="positive",
                        help="Half-line of the homogeneous model.")
    parser.add_argument("--kappa", default="0", help="von Neumann parameter for homogeneous runs, e.g. '0.3+0.4i'.")
    parser.add_argument("--inverse-chain", action="store_true",
                        help="extension-type: also verify the Friedrichs/Krein inverse chain.")
    parser.add_argument("--root", default=".", help="Directory holding config.toml (default: current dir).")
    parser.add_argument("--output", "-o", help="Write the report here (default: standard output).")
    parser.add_argument("--format", choices=("json", "csv"), default="json", help="Report format.")
    parser.add_argument("--seed", type=int, help="Seed for random oracle models.")
    parser.add_argument("--workers", type=int, help="Threads for grid evaluation.")
    parser.add_argument("--tolerance", type=float, help="Override every check tolerance.")
    parser.add_argument("--n", type=int, help="Discretization size for oracle checks.")
    parser.add_argument("--quantile-cut", type=float, help="Quantile cut for discretization.")
    parser.add_argument("--no-timestamp", action="store_true", help="Omit the timestamp from JSON reports.")

    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Show detailed debug output.")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Only show errors.")
    parser.add_argument("--log-file", help="Write full debug log to a file.")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    # Set up logging before anything else
    setup_logging(verbose=args.verbose, quiet=args.quiet, log_file=args.log_file)

    try:
        config = RunConfig(
            command=args.command,
            triple=args.triple,
            measure=args.measure,
            map=args.map,
            points=tuple(args.z),
            real_points=tuple(args.s),
            nu=tuple(args.nu),
            side=args.side,
            kappa=parse_kappa_arg(args.kappa),
            grid=args.grid,
            tolerance=args.tolerance,
            format=args.format,
            output=args.output,
            seed=args.seed,
            workers=args.workers,
            n=args.n,
            quantile_cut=args.quantile_cut,
            inverse_chain=args.inverse_chain,
            root=args.root,
            timestamp=not args.no_timestamp,
        )
    except (SpecFormatError, argparse.ArgumentTypeError) as e:
        logger.error("[red]Invalid arguments:[/red] %s", e)
        return EXIT_ERROR

    return run(config).exit_code


if __name__ == "__main__":
    sys.exit(main())
