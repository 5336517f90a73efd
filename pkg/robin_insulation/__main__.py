"""
Entry point for the insulation laboratory command line.
"""
import argparse
import logging
import sys
import typing as t

from robin_insulation.core.lab import EXIT_NONCONVERGED, EXIT_USAGE, InsulationLab
from robin_insulation.utils.config_manager import ConfigManager
from robin_insulation.utils.error_handling import ConfigError, InsulationError
from robin_insulation.utils.logging_setup import setup_logging

COMMANDS = {
    "solve": "cmd_solve",
    "sweep": "cmd_sweep",
    "reference": "cmd_reference",
    "gamma": "cmd_gamma",
    "mesh-info": "cmd_mesh_info",
}

# Flags forwarded to the configuration (same names as the config file keys)
_OVERRIDES = ("domain", "beta", "mass", "mesh_h", "tol", "jobs", "out", "seed",
              "beta_grid", "m_grid", "refinements", "h_const", "eps")


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with the configuration error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file (flags win)")
    common.add_argument("--domain", help="disk:R | polygon:n:R | rectangle:w:h | convex:x1,y1;x2,y2;...")
    common.add_argument("--beta", help="heat-transfer coefficient")
    common.add_argument("--mass", help="insulation mass m")
    common.add_argument("--mesh-h", dest="mesh_h", help="target mesh size")
    common.add_argument("--tol", help="relative F-decrease tolerance of the alternating scheme")
    common.add_argument("--jobs", help="worker processes for sweep")
    common.add_argument("--out", help="output file (stdout when omitted)")
    common.add_argument("--seed", help="seed of the randomized optimality audit")
    common.add_argument("--beta-grid", dest="beta_grid", help="comma list or log:a:b:n")
    common.add_argument("--m-grid", dest="m_grid", help="comma list or log:a:b:n")
    common.add_argument("--refinements", help="uniform refinements for reference")
    common.add_argument("--h-const", dest="h_const", help="uniform profile of the layered model")
    common.add_argument("--eps", help="layer scales for gamma, comma list or log:a:b:n")
    common.add_argument("--log-level", dest="log_level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    common.add_argument("--log-dir", dest="log_dir", help="directory for a dated log file")

    parser = _Parser(prog="robin-insulation",
                     description="Numerical laboratory for optimal Robin insulation of a body.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}",
                                parser_class=_Parser)
    sub.add_parser("solve", parents=[common], help="minimize lambda(h) over profiles of mass m")
    sub.add_parser("sweep", parents=[common], help="phase diagram over beta and m grids")
    sub.add_parser("reference", parents=[common], help="FEM reference eigenvalues and disk oracles")
    sub.add_parser("gamma", parents=[common], help="thin-layer eigenvalues against their limit")
    sub.add_parser("mesh-info", parents=[common], help="mesh counts, measures and optional mesh file")
    return parser


def main(argv: t.Optional[t.Sequence[str]] = None) -> int:
    """Main entry point for the command line."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    logger = setup_logging(getattr(logging, args.log_level), args.log_dir)
    try:
        overrides = {key: getattr(args, key) for key in _OVERRIDES}
        config = ConfigManager().load_settings(args.config, overrides)
        lab = InsulationLab(config)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_USAGE

    try:
        return getattr(lab, COMMANDS[args.command])()
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except InsulationError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
