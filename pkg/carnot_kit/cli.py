"""Command-line entry point ``carnot-kit``.

Subcommands: ``dist``, ``probe``, ``hopflax``, ``figure-slice`` and
``verify``. Options resolve as flags > ``--config`` JSON file > defaults.
Exit codes: 0 pass, 2 solver failure, 3 expectation contradicted,
4 bad configuration.
"""

import argparse
import json
import logging
import math
import re
import sys
from pathlib import Path
from typing import Any
from typing import Callable
from typing import TextIO

import numpy as np
import pandas
from pydantic import BaseModel
from pydantic import ValidationError

from carnot_kit import __version__
from carnot_kit import settings
from carnot_kit.backends import DistanceBackend
from carnot_kit.backends import make_backend
from carnot_kit.data_models.geodesics import OracleOptions
from carnot_kit.data_models.geodesics import ShootingOptions
from carnot_kit.data_models.group import GroupSpec
from carnot_kit.data_models.hopf_lax import HopfLaxOptions
from carnot_kit.data_models.hopf_lax import HopfLaxProblem
from carnot_kit.data_models.probe import ProbeConfig
from carnot_kit.data_models.probe import PsiProfile
from carnot_kit.data_models.report import ExperimentConfig
from carnot_kit.enums import BackendEnum
from carnot_kit.enums import BuiltinGroupEnum
from carnot_kit.enums import ExitCodeEnum
from carnot_kit.enums import FieldNameEnum
from carnot_kit.enums import ReportFormatEnum
from carnot_kit.enums import SuiteEnum
from carnot_kit.enums import VerdictEnum
from carnot_kit.exceptions import CarnotKitException
from carnot_kit.exceptions import ConfigurationError
from carnot_kit.exceptions import DivergenceError
from carnot_kit.exceptions import OracleFailureError
from carnot_kit.exceptions import UnreachedTargetError
from carnot_kit.export import FLOAT_FORMAT
from carnot_kit.export import csv_header
from carnot_kit.export import figure_slice_frame
from carnot_kit.export import model_to_json_text
from carnot_kit.export import probe_report_frame
from carnot_kit.export import write_csv
from carnot_kit.fields import ScalarField
from carnot_kit.fields import compose_with_psi
from carnot_kit.fields import d0_field
from carnot_kit.fields import d0_squared_backend_field
from carnot_kit.fields import d0_squared_field
from carnot_kit.fields import negated
from carnot_kit.groups import check_point
from carnot_kit.groups import get_group
from carnot_kit.heisenberg import d0_squared_exact_many
from carnot_kit.hopf_lax import dist_to_set_field
from carnot_kit.hopf_lax import hopf_lax_field
from carnot_kit.hopf_lax import hopf_lax_value
from carnot_kit.probe import first_order_limit
from carnot_kit.probe import semiconcavity_scan
from carnot_kit.probe import probe_grid
from carnot_kit.utils import get_current_time_iso
from carnot_kit.utils import parse_point
from carnot_kit.verify import verify

logger = logging.getLogger(__name__)

SOLVER_FAILURES = (UnreachedTargetError, OracleFailureError, DivergenceError)
LIMIT_RTOL = 0.01
DEFAULT_SET = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]

_LIMIT_PATTERN = re.compile(
    r"^(?P<coef>[+-]?(\d+(\.\d*)?|\.\d+)?)\*?sqrt\(pi\)$"
)


class CliContext:
    """Resolved common options of one invocation."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.config = _load_config(args.config)
        self.seed = int(self.option("seed", 0))
        self.seed_given = self.option("seed", None) is not None
        self.threads = int(self.option("threads", settings.default_threads()))
        if self.threads < 1:
            raise ConfigurationError("threads must be at least 1")
        self.output = self.option("output", None)
        self.format = ReportFormatEnum(
            self.option("format", ReportFormatEnum.JSON)
        )
        self.log_dir = self.option("log_dir", None)

    def option(self, name: str, default: Any) -> Any:
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        return self.config.get(name, default)

    def experiment(self, command: str, **params: Any) -> ExperimentConfig:
        return ExperimentConfig(
            command=command,
            group=self.option("group", None),
            seed=self.seed,
            output=self.output,
            format=self.format,
            params=params,
        )


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as error:
        raise ConfigurationError(f"cannot read config {path}: {error}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must hold a JSON object")
    return {key.replace("-", "_"): value for key, value in data.items()}


def _emit(ctx: CliContext, text: str) -> None:
    if ctx.output is None:
        sys.stdout.write(text)
        return
    Path(ctx.output).write_text(text)


def _emit_model(ctx: CliContext, model: BaseModel, name: str) -> None:
    _emit(ctx, model_to_json_text(model))
    if ctx.log_dir is not None:
        filepath = settings.log_json_artifact(
            model.model_dump(mode="json"), name, ctx.log_dir
        )
        logger.info("artifact logged to %s", filepath)


def _emit_frame(ctx: CliContext, frame: pandas.DataFrame) -> None:
    if ctx.output is None:
        sys.stdout.write(csv_header())
        frame.to_csv(
            sys.stdout,
            index=False,
            float_format=FLOAT_FORMAT,
            lineterminator="\n",
        )
        return
    write_csv(frame, ctx.output)


def parse_limit(text: str) -> float:
    """Reads ``-8sqrt(pi)``, ``-8*sqrt(pi)`` or a plain number."""
    cleaned = text.replace(" ", "")
    match = _LIMIT_PATTERN.match(cleaned)
    if match:
        coef = match.group("coef")
        if coef in ("", "+"):
            factor = 1.0
        elif coef == "-":
            factor = -1.0
        else:
            factor = float(coef)
        return factor * math.sqrt(math.pi)
    try:
        return float(cleaned)
    except ValueError:
        raise ConfigurationError(f"cannot parse limit {text!r}") from None


def parse_direction(text: str, spec: GroupSpec) -> list[float]:
    """``e1``, ``e2``, ... or explicit comma separated coordinates."""
    match = re.fullmatch(r"e(\d+)", text.strip())
    if match:
        index = int(match.group(1))
        if not 1 <= index <= spec.n1:
            raise ConfigurationError(
                f"{spec.name} has horizontal directions e1..e{spec.n1}"
            )
        direction = [0.0] * spec.n1
        direction[index - 1] = 1.0
        return direction
    vector = np.asarray(parse_point(text))
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise ConfigurationError("direction must be nonzero")
    return (vector / norm).tolist()


def default_backend_kind(spec: GroupSpec) -> BackendEnum:
    if spec.name == BuiltinGroupEnum.HEISENBERG:
        return BackendEnum.EXACT
    if spec.name == BuiltinGroupEnum.ENGEL:
        return BackendEnum.ORACLE
    return BackendEnum.SHOOTING


def _backend(ctx: CliContext, spec: GroupSpec) -> DistanceBackend:
    kind = ctx.option("backend", None) or default_backend_kind(spec)
    return make_backend(
        kind,
        spec,
        shooting_options=ShootingOptions(seed=ctx.seed),
        oracle_options=OracleOptions(seed=ctx.seed),
        workers=ctx.threads,
    )


def make_field(
    name: FieldNameEnum | str,
    spec: GroupSpec,
    backend: DistanceBackend,
    cloud: list[list[float]] | None = None,
) -> ScalarField:
    """Field registry of the ``probe`` command."""
    try:
        field_name = FieldNameEnum(name)
    except ValueError:
        raise ConfigurationError(f"unknown field {name!r}") from None
    exact = backend.kind == BackendEnum.EXACT
    builders: dict[FieldNameEnum, Callable[[], ScalarField]] = {
        FieldNameEnum.D0SQ: lambda: (
            d0_squared_field() if exact else d0_squared_backend_field(backend)
        ),
        FieldNameEnum.D0: lambda: d0_field(backend),
        FieldNameEnum.NEG_D0SQ: lambda: negated(
            d0_squared_field() if exact else d0_squared_backend_field(backend)
        ),
        FieldNameEnum.D0_CUBED: lambda: compose_with_psi(
            PsiProfile(exponent=3.0), d0_field(backend)
        ),
        FieldNameEnum.DIST_TO_SET_SQ: lambda: dist_to_set_field(
            spec, cloud or DEFAULT_SET, backend, squared=True
        ),
    }
    return builders[field_name]()


def cmd_dist(ctx: CliContext) -> int:
    spec = get_group(ctx.option("group", BuiltinGroupEnum.HEISENBERG))
    point = check_point(spec, parse_point(ctx.option("point", "")))
    backend = _backend(ctx, spec)
    try:
        distance, residual = backend.solve(point)
    except SOLVER_FAILURES as error:
        best = getattr(error, "best_residual", None)
        if best is None:
            best = getattr(error, "residual", None)
        _emit(
            ctx,
            json.dumps(
                {"error": str(error), "best_residual": best}, sort_keys=True
            )
            + "\n",
        )
        return ExitCodeEnum.SOLVER_FAILURE
    line = {
        "backend": backend.kind.value,
        "d": distance,
        "d2": distance * distance,
        "group": spec.name,
        "point": point.tolist(),
        "residual": residual,
    }
    _emit(ctx, json.dumps(line, sort_keys=True) + "\n")
    return ExitCodeEnum.OK


def _probe_points(ctx: CliContext, spec: GroupSpec) -> list[list[float]]:
    points = ctx.option("point", None) or []
    if isinstance(points, str):
        points = [points]
    parsed = [parse_point(p) if isinstance(p, str) else p for p in points]
    if ctx.option("center_axis", False):
        parsed.append([0.0] * (spec.n - 1) + [1.0])
    if parsed:
        return parsed
    if spec.name == BuiltinGroupEnum.HEISENBERG:
        return probe_grid(seed=ctx.seed).tolist()
    rng = np.random.default_rng(ctx.seed)
    return rng.uniform(-1.0, 1.0, size=(20, spec.n)).tolist()


def _probe_config(ctx: CliContext, spec: GroupSpec) -> ProbeConfig:
    ladder = ctx.option("ladder", None)
    if isinstance(ladder, str):
        ladder = parse_point(ladder)
    growth = ctx.option("blowup_growth", None)
    if spec.name == BuiltinGroupEnum.ENGEL:
        ladder = ladder or list(settings.ENGEL_LADDER)
        growth = growth or settings.ENGEL_BLOWUP_GROWTH
    elif spec.name != BuiltinGroupEnum.HEISENBERG:
        ladder = ladder or list(settings.SHOOTING_LADDER)
    values: dict[str, Any] = {"seed": ctx.seed, "workers": ctx.threads}
    if ladder:
        values["ladder"] = ladder
    if growth:
        values["blowup_growth"] = growth
    directions = ctx.option("random_directions", None)
    if directions is not None:
        values["random_directions"] = directions
    return ProbeConfig(**values)


def cmd_probe(ctx: CliContext) -> int:
    spec = get_group(ctx.option("group", BuiltinGroupEnum.HEISENBERG))
    backend = _backend(ctx, spec)
    field = make_field(
        ctx.option("field", FieldNameEnum.D0SQ),
        spec,
        backend,
        ctx.option("set", None),
    )
    points = _probe_points(ctx, spec)
    config = _probe_config(ctx, spec)
    expect = ctx.option("expect", None)
    direction = ctx.option("dir", None)
    dirs = None if direction is None else [parse_direction(direction, spec)]

    if int(ctx.option("order", 2)) == 1:
        target = None
        if expect is not None:
            if not expect.startswith("limit="):
                raise ConfigurationError(
                    "--order 1 takes --expect limit=<value>"
                )
            target = parse_limit(expect.removeprefix("limit="))
        direction_vector = dirs[0] if dirs else [1.0] + [0.0] * (spec.n1 - 1)
        contradicted = False
        estimates = []
        for p in points:
            estimate = first_order_limit(
                field, p, direction_vector, config.ladder
            )
            estimates.append(estimate)
            if target is not None and abs(estimate.value - target) > (
                LIMIT_RTOL * abs(target)
            ):
                contradicted = True
        text = "".join(model_to_json_text(e) for e in estimates)
        _emit(ctx, text)
        return (
            ExitCodeEnum.EXPECTATION_CONTRADICTED
            if contradicted
            else ExitCodeEnum.OK
        )

    report = semiconcavity_scan(field, points, dirs=dirs, config=config)
    if ctx.format == ReportFormatEnum.CSV:
        _emit_frame(ctx, probe_report_frame(report))
    else:
        _emit_model(ctx, report, "probe")
    if expect is None:
        return ExitCodeEnum.OK
    try:
        wanted = VerdictEnum(expect)
    except ValueError:
        raise ConfigurationError(
            f"--expect takes bounded or blowup here, got {expect!r}"
        ) from None
    if report.verdict != wanted:
        logger.warning("verdict %s contradicts %s", report.verdict, wanted)
        return ExitCodeEnum.EXPECTATION_CONTRADICTED
    return ExitCodeEnum.OK


def cmd_hopflax(ctx: CliContext) -> int:
    try:
        text = Path(ctx.args.problem).read_text()
    except OSError as error:
        raise ConfigurationError(f"cannot read problem: {error}") from None
    problem = HopfLaxProblem.model_validate_json(text)
    spec = get_group(problem.group)
    kind = problem.backend or default_backend_kind(spec)
    backend = make_backend(kind, spec, workers=ctx.threads)
    update: dict[str, Any] = {"workers": ctx.threads}
    if ctx.seed_given:
        update["seed"] = ctx.seed
    options = HopfLaxOptions.model_validate(
        {**problem.options.model_dump(), **update}
    )
    run_probe = problem.probe or bool(ctx.option("probe", False))
    lines = []
    for t in problem.times:
        verdict = None
        if run_probe:
            field = hopf_lax_field(
                spec, problem.g, problem.phi, t, backend, options
            )
            report = semiconcavity_scan(
                field,
                problem.points,
                config=ProbeConfig(seed=ctx.seed, workers=ctx.threads),
            )
            verdict = report.verdict
        for p in problem.points:
            result = hopf_lax_value(
                spec, problem.g, problem.phi, t, p, backend, options
            )
            result.probe_verdict = verdict
            lines.append(result.model_dump_json() + "\n")
    _emit(ctx, "".join(lines))
    return ExitCodeEnum.OK


def _axis_values(text: str, resolution: int) -> np.ndarray:
    bounds = parse_point(text)
    if len(bounds) != 2 or not bounds[0] < bounds[1]:
        raise ConfigurationError(f"range must read low,high; got {text!r}")
    return np.round(np.linspace(bounds[0], bounds[1], resolution), 12)


def cmd_figure_slice(ctx: CliContext) -> int:
    spec = get_group(ctx.option("group", BuiltinGroupEnum.HEISENBERG))
    if spec.name != BuiltinGroupEnum.HEISENBERG:
        raise ConfigurationError("figure-slice covers the heisenberg group")
    resolution = int(ctx.option("resolution", 41))
    if resolution < 2:
        raise ConfigurationError("resolution must be at least 2")
    xs = _axis_values(ctx.option("x_range", "-2,2"), resolution)
    zs = _axis_values(ctx.option("z_range", "-2,2"), resolution)
    grid_x, grid_z = np.meshgrid(xs, zs, indexing="ij")
    points = np.stack(
        [grid_x, np.zeros_like(grid_x), grid_z], axis=-1
    ).reshape(-1, 3)
    values = d0_squared_exact_many(points).reshape(grid_x.shape)
    _emit_frame(ctx, figure_slice_frame(xs, zs, values))
    return ExitCodeEnum.OK


def cmd_verify(ctx: CliContext) -> int:
    suite = SuiteEnum(ctx.args.suite)
    report = verify(
        suite,
        seed=ctx.seed,
        workers=ctx.threads,
        config=ctx.experiment("verify", suite=suite.value),
    )
    _emit_model(ctx, report, f"verify-{suite.value}")
    if report.passed:
        return ExitCodeEnum.OK
    return ExitCodeEnum.EXPECTATION_CONTRADICTED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--output", help="output file (default stdout)")
    common.add_argument(
        "--format", choices=[f.value for f in ReportFormatEnum]
    )
    common.add_argument("--config", help="JSON file with option defaults")
    common.add_argument("--verbose", "-v", action="count", default=0)
    common.add_argument("--log-dir", help="directory for JSON artifacts")

    parser = argparse.ArgumentParser(
        prog=settings.PACKAGE_NAME,
        description="Numerics on step-2 Carnot groups.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    backends = [b.value for b in BackendEnum]

    dist = sub.add_parser("dist", parents=[common], help="CC distance")
    dist.add_argument("--group")
    dist.add_argument("--point", help="coordinates such as 0,0,1")
    dist.add_argument("--backend", choices=backends)
    dist.set_defaults(handler=cmd_dist)

    probe = sub.add_parser(
        "probe", parents=[common], help="semiconcavity probe"
    )
    probe.add_argument("--group")
    probe.add_argument("--field", choices=[f.value for f in FieldNameEnum])
    probe.add_argument("--backend", choices=backends)
    probe.add_argument("--point", action="append", help="repeatable")
    probe.add_argument("--center-axis", action="store_true", default=None)
    probe.add_argument("--ladder", help="decreasing levels, e.g. 0.1,0.01")
    probe.add_argument("--dir", help="e1, e2, ... or coordinates")
    probe.add_argument("--order", type=int, choices=[1, 2])
    probe.add_argument("--random-directions", type=int)
    probe.add_argument("--blowup-growth", type=float)
    probe.add_argument(
        "--expect", help="bounded, blowup or limit=<value> with --order 1"
    )
    probe.set_defaults(handler=cmd_probe)

    hopflax = sub.add_parser(
        "hopflax", parents=[common], help="Hopf-Lax values"
    )
    hopflax.add_argument("problem", help="problem JSON document")
    hopflax.add_argument("--probe", action="store_true", default=None)
    hopflax.set_defaults(handler=cmd_hopflax)

    figure = sub.add_parser(
        "figure-slice", parents=[common], help="d0^2 on the plane y = 0"
    )
    figure.add_argument("--group")
    figure.add_argument("--x-range", help="low,high (default -2,2)")
    figure.add_argument("--z-range", help="low,high (default -2,2)")
    figure.add_argument("--resolution", type=int)
    figure.set_defaults(handler=cmd_figure_slice)

    check = sub.add_parser("verify", parents=[common], help="check suites")
    check.add_argument("suite", choices=[s.value for s in SuiteEnum])
    check.set_defaults(handler=cmd_verify)
    return parser


def _configure_logging(verbosity: int, stream: TextIO) -> None:
    if verbosity <= 0:
        return
    logging.basicConfig(
        level=logging.DEBUG if verbosity > 1 else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=stream,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose, sys.stderr)
    try:
        ctx = CliContext(args)
        started = get_current_time_iso()
        code: int = args.handler(ctx)
        logger.info("%s started %s exited %d", args.command, started, code)
        return code
    except SOLVER_FAILURES as error:
        print(f"solver failure: {error}", file=sys.stderr)
        return ExitCodeEnum.SOLVER_FAILURE
    except (CarnotKitException, ValidationError, ValueError) as error:
        print(f"bad configuration: {error}", file=sys.stderr)
        return ExitCodeEnum.BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
