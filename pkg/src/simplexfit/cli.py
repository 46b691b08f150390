import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from simplexfit import config as settings
from simplexfit.commands import COMMANDS, Runner
from simplexfit.config import load_run_config
from simplexfit.errors import NumericalError, SimplexFitError
from simplexfit.utils.intro import print_intro
from simplexfit.utils.ui import Spinner, UI


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simplexfit",
        description="Fit and diagnose nonlinear simplex regression models with varying dispersion.",
    )
    parser.add_argument("--quiet", action="store_true", help="Suppress the banner, progress and tables.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("fit", "Fit the model and write estimates and residuals."),
        ("envelope", "Simulated envelope for the standardized residuals."),
        ("influence", "Local influence and case-deletion diagnostics."),
        ("mc-study", "Monte Carlo study of the residual distribution."),
        ("simulate", "Generate a synthetic dataset."),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="JSON run document.")
        sub.add_argument("--seed", type=int, default=None, help="Overrides the document's seed.")
        sub.add_argument("--out-dir", default=None, help="Overrides the document's output directory.")
        sub.add_argument("--workers", type=int, default=None, help="Threads for replicate loops.")
        sub.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO) if not args.quiet else logging.WARNING,
        format="%(asctime)s - SIMPLEXFIT - %(message)s",
        datefmt="%H:%M:%S",
    )
    Spinner.silenced = args.quiet
    if not args.quiet:
        print_intro()

    try:
        config = load_run_config(args.config, seed=args.seed, out_dir=args.out_dir)
        runner = Runner(config, args.config, quiet=args.quiet, workers=args.workers)
        runner.logger.log_command(args.command, args.config)
        COMMANDS[args.command](runner)
    except SimplexFitError as e:
        UI().print_error(str(e))
        return e.exit_status
    except KeyboardInterrupt:
        UI().print_error("Interrupted")
        return 130
    except Exception as e:
        logging.getLogger(__name__).debug("Unhandled failure", exc_info=True)
        UI().print_error(f"{type(e).__name__}: {e}")
        return NumericalError.exit_status
    return 0


if __name__ == "__main__":
    sys.exit(main())
