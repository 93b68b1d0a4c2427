import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from .. import config
from ..errors import ConfigError, FeasibilityError
from .handlers import RunConfig, cmd_bound, cmd_enumerate, cmd_errexp, cmd_oracle, cmd_simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FEASIBILITY = 3
EXIT_NUMERIC = 4

COMMANDS = {
    "bound": cmd_bound,
    "simulate": cmd_simulate,
    "enumerate": cmd_enumerate,
    "errexp": cmd_errexp,
    "oracle": cmd_oracle,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--construction", choices=["gfq", "met", "gfq01", "met01"])
    p.add_argument("--field", dest="gf", help="field order q or p^m")
    p.add_argument("--modulus", type=int, help="packed coefficients of the defining polynomial")
    p.add_argument("--outer", help="hamming:t | uniform-pc:h:k | ldpc:dv:dc:h | file:PATH")
    p.add_argument("--dist", help="r10, rq-met or a distribution file")
    p.add_argument("--ha", type=int, help="part-A length for multi-edge constructions")
    p.add_argument("--delta", help="start:stop:step, stop inclusive")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raptor-bounds",
                                     description="ML failure-probability bounds for Raptor codes over GF(q)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="upper and lower bounds on P_F per overhead")
    _common(p)
    p.add_argument("--lrfc", action="store_true", default=None, help="add the random fountain reference column")
    p.add_argument("--s2-method", choices=["krawtchouk", "triplets"])

    p = sub.add_parser("simulate", help="Monte Carlo failure rate")
    _common(p)
    p.add_argument("--target-failures", type=int)
    p.add_argument("--max-trials", type=int)
    p.add_argument("--n-codes", type=int)
    p.add_argument("--trials-per-code", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--decoder", choices=["ge", "inactivation"])

    p = sub.add_parser("enumerate", help="export an outer-code enumerator")
    _common(p)
    p.add_argument("--which", help="weight, bivariate_weight, composition, bivariate_composition, "
                                   "biweight or bicomposition")
    p.add_argument("--dump-code", help="also write the outer generator matrix")

    p = sub.add_parser("errexp", help="error-exponent lower bound and ML threshold")
    _common(p)
    p.add_argument("--rates", help="comma-separated outer rates")
    p.add_argument("--eps", help="epsilon grid start:stop:step")
    p.add_argument("--kernel", choices=["pi_limit", "varrho"])

    p = sub.add_parser("oracle", help="exact failure probability for tiny instances")
    _common(p)
    return parser


def log_level() -> int:
    # DEBUG 开关优先于 LOG_LEVEL
    if config.DEBUG:
        return logging.DEBUG
    return getattr(logging, config.LOG_LEVEL, logging.INFO)


def setup_logging() -> None:
    logging.basicConfig(
        level=log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, validate and dispatch; returns the process exit code."""
    setup_logging()
    args = build_parser().parse_args(argv)
    given = {k: v for k, v in vars(args).items() if v is not None}
    try:
        cfg = RunConfig(**given)
        logger.info("resolved configuration: %s", cfg.model_dump())
        path = COMMANDS[cfg.command](cfg)
    except ValidationError as exc:
        fields = ", ".join(".".join(str(x) for x in err["loc"]) for err in exc.errors())
        print(f"error: invalid {fields}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: invalid {exc.field or 'configuration'}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FeasibilityError as exc:
        print(f"error: {exc} (predicted size {exc.predicted})", file=sys.stderr)
        return EXIT_FEASIBILITY
    except ArithmeticError as exc:
        logger.error("numerical check failed: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(path)
    return EXIT_OK
