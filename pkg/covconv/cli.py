"""Command-line entry point.

Subcommands write one JSON document to stdout; logs and diagnostics go to
stderr. Exit codes: 0 success or passing check, 1 failing check or numerical
/ domain error, 2 bad configuration or arguments.
"""

import argparse
import logging
import sys

from .checks import CHECKS, build_field, build_spec, run_check
from .config import config, load_experiment
from .convolution import convolve_field
from .display import emit_json
from .errors import ConfigError, CovConvError
from .exporters import DataExporter
from .geometry import TangentVec, geodesic_integrate, metric_norm, parallel_transport, polyline_path
from .presets import MANIFOLDS, make_manifold
from .rep import so3_tensor_multiplicities
from .tensors import VECTOR, TensorValue
from .utils import parse_points, parse_vector, to_jsonable

logger = logging.getLogger(__name__)


VECTOR_OPTIONS = ("--x", "--v", "--vector", "--points", "--params")


def _attach_option_values(argv: list[str]) -> list[str]:
    """Rewrite `--v -0.5,0` as `--v=-0.5,0` so argparse does not read the value as an option."""
    out = []
    i = 0
    while i < len(argv):
        token = argv[i]
        if token in VECTOR_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--"):
            out.append(f"{token}={argv[i + 1]}")
            i += 2
            continue
        out.append(token)
        i += 1
    return out


def _add_manifold_args(parser: argparse.ArgumentParser):
    parser.add_argument("--manifold", required=True, help=f"one of: {', '.join(MANIFOLDS)}")
    parser.add_argument("--params", type=parse_vector, default=[], help="preset parameters, e.g. 2.0")
    parser.add_argument("--steps", type=int, default=None, help="RK4 steps (per segment for polylines)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covconv", description="Covariant convolution on charted manifolds")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        help="logging level (default from COVCONV_LOG_LEVEL)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("geodesic", help="integrate a geodesic from x with initial velocity v")
    _add_manifold_args(p)
    p.add_argument("--x", type=parse_vector, required=True)
    p.add_argument("--v", type=parse_vector, required=True)
    p.add_argument("--csv", default=None, help="also write the sampled path and velocities as CSV")

    p = sub.add_parser("transport", help="parallel transport a vector along a polyline")
    _add_manifold_args(p)
    p.add_argument("--points", type=parse_points, required=True, help="polyline corners 'a,b;c,d;...'")
    p.add_argument("--vector", type=parse_vector, required=True)

    p = sub.add_parser("convolve", help="run the convolution described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--csv", default=None, help="also write outputs as CSV")

    p = sub.add_parser("check", help="run a named check")
    p.add_argument("name", choices=sorted(CHECKS))
    p.add_argument("--config", default=None, help="defaults to the shipped configs/<name>.json")
    p.add_argument("--save", action="store_true", help="also save the report to <export_dir>/<name>_report.json")

    p = sub.add_parser("decompose", help="SO(3) multiplicities in the n-th tensor power of a vector")
    p.add_argument("--n", type=int, required=True)

    return parser


def _check_dim(m, label: str, values):
    if len(values) != m.dim:
        raise ConfigError(f"--{label} needs {m.dim} components on {m.name}, got {len(values)}")


def _cmd_geodesic(args) -> int:
    m = make_manifold(args.manifold, args.params)
    _check_dim(m, "x", args.x)
    _check_dim(m, "v", args.v)
    path = geodesic_integrate(m, TangentVec(args.x, args.v), args.steps)
    if args.csv:
        DataExporter.save_points_csv(path.samples, path.velocities, VECTOR, args.csv, prefix="velocity")
    emit_json(
        {
            "manifold": m.name,
            "x": args.x,
            "v": args.v,
            "steps": path.samples.shape[0] - 1,
            "end": path.end,
            "end_velocity": path.velocities[-1],
            "speed_start": metric_norm(m, path.start, path.velocities[0]),
            "speed_end": metric_norm(m, path.end, path.velocities[-1]),
        }
    )
    return 0


def _cmd_transport(args) -> int:
    m = make_manifold(args.manifold, args.params)
    _check_dim(m, "vector", args.vector)
    for p in args.points:
        _check_dim(m, "points", p)
    path = polyline_path(args.points, args.steps)
    start = TensorValue(VECTOR, path.start, args.vector)
    moved = parallel_transport(m, path, start)
    emit_json(
        {
            "manifold": m.name,
            "start": path.start,
            "end": path.end,
            "vector": args.vector,
            "transported": moved.components,
            "norm_start": metric_norm(m, path.start, start.components),
            "norm_end": metric_norm(m, path.end, moved.components),
        }
    )
    return 0


def _cmd_convolve(args) -> int:
    cfg = load_experiment(args.config)
    spec = build_spec(cfg)
    f = build_field(cfg, spec.manifold)
    outputs = convolve_field(spec, f)
    if args.csv:
        DataExporter.save_points_csv([o.base for o in outputs], [o.components for o in outputs],
                                     spec.kernel.rank_out, args.csv)
    emit_json(
        {
            "manifold": spec.manifold.name,
            "rank_out": spec.kernel.rank_out.as_list(),
            "points": [{"coords": o.base, "output": o.components} for o in outputs],
        }
    )
    return 0


def _cmd_check(args) -> int:
    path = args.config or config.config_dir / f"{args.name}.json"
    report = run_check(load_experiment(path), args.name)
    if args.save:
        config.ensure_dirs()
        saved = DataExporter.save_json(to_jsonable(report.to_dict()), f"{args.name}_report")
        logger.info("Report saved to %s", saved)
    emit_json(report.to_dict())
    return 0 if report.passed else 1


def _cmd_decompose(args) -> int:
    emit_json(so3_tensor_multiplicities(args.n).to_dict())
    return 0


COMMANDS = {
    "geodesic": _cmd_geodesic,
    "transport": _cmd_transport,
    "convolve": _cmd_convolve,
    "check": _cmd_check,
    "decompose": _cmd_decompose,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_option_values(list(sys.argv[1:] if argv is None else argv)))
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=(args.log_level or config.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )

    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as e:
        print(f"covconv: config error: {e}", file=sys.stderr)
        return 2
    except CovConvError as e:
        print(f"covconv: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())
