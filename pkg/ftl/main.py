import argparse
import logging
import os
import sys
import sentry_sdk
from pydantic import ValidationError
from . import experiment, regions, selftest, typemap
from .errors import FTLException, UsageError
from .schemas import RunConfig

if "SENTRY_URL" in os.environ:
    sentry_sdk.init(os.environ["SENTRY_URL"], traces_sample_rate=0)

logger = logging.getLogger("ftl")

COMMANDS = (typemap, regions, experiment, selftest)

# flag -> path inside RunConfig
OVERRIDES = {
    "preset": ("preset",),
    "seed": ("seed",),
    "out": ("out_dir",),
    "kmax": ("k_max",),
    "stages": ("counterexample", "stages"),
    "resolution": ("patch", "resolution"),
    "alpha": ("region", "alpha"),
}


def common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument(
        "--preset", help="domain preset (sphere, egg-m2, egg-m3, quartic)"
    )
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--stages", type=int, help="number of counterexample stages")
    parser.add_argument("--kmax", type=int, help="largest commutator degree")
    parser.add_argument("--resolution", type=int, help="patch grid points per axis")
    parser.add_argument("--log-level", help="overrides FTL_LOG_LEVEL")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftl",
        description="boundary limits of holomorphic functions along approach regions",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parents = [common_parser()]
    for module in COMMANDS:
        module.register(subparsers, parents)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """defaults, then the config file, then command line flags"""
    try:
        cfg = RunConfig.parse_file(args.config) if args.config else RunConfig()
    except FileNotFoundError:
        raise UsageError(f"config file {args.config} does not exist")
    except ValidationError as exc:
        raise UsageError(f"invalid config file {args.config}: {exc}")

    data = cfg.dict()
    for flag, path in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        target = data
        for key in path[:-1]:
            target = target[key]
        target[path[-1]] = value
    try:
        return RunConfig.parse_obj(data)
    except ValidationError as exc:
        raise UsageError(str(exc))


def configure_logging(level: str = None):
    level = (level or os.environ.get("FTL_LOG_LEVEL", "INFO")).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        cfg = load_config(args)
        files = args.func(cfg)
    except FTLException as exc:
        logger.error("%s failed: %s", args.command, exc)
        return exc.exit_code
    except Exception:
        sentry_sdk.capture_exception()
        logger.exception("%s crashed", args.command)
        return 1
    for path in files:
        logger.info("output: %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
