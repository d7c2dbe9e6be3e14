"""
Command-line interface.

    python -m app state --graph t --p 6 --lambda 100
    python -m app transitions --graph t --p 6.05
    python -m app diagram --graph tadpole --csv out/diagram.csv --ppm out/diagram.ppm
    python -m app asymptotics --regime pinf --graph t
    python -m app profile --graph t --p 4 --lambda 2 --csv out/profile.csv
    python -m app oracle --graph tadpole --p 6 --zmin 0.1 --zmax 1.2 --n 10
    python -m app selftest

Configuration comes from flags only. Exit codes: 0 success, 1 computation
failure, 2 usage error.
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app.core.config import CliSettings
from app.core.exceptions import NumericsError
from app.schemas.asymptotics import Regime
from app.schemas.model import GraphKind, ModelParams
from app.services.asymptotics import AsymptoticsService
from app.services.export_service import ExportService
from app.services.ode_oracle import OracleService
from app.services.scalar_model import peak
from app.services.stability import StabilityService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

GRAPHS = {"t": GraphKind.T_GRAPH, "tadpole": GraphKind.TADPOLE}
TEST_DIR = Path(__file__).resolve().parent.parent / "test"


class UsageError(Exception):
    """Flag combination rejected before any computation."""


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--json", action="store_true", help="print a JSON document to stdout")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="process-pool size for diagram and oracle")
    common.add_argument("--quad-tol", type=float, help="quadrature tolerance")
    common.add_argument("--tol-z", type=float, help="root tolerance for z")
    common.add_argument("--eps-sign", type=float, help="sign threshold of ∂Θ/∂λ")
    common.add_argument("--delta-star", type=float, help="relative λ* window")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="python -m app",
        description="NLS ground-states on the 𝒯 and tadpole graphs: stability and transitions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--graph", choices=sorted(GRAPHS), default="t")

    state = sub.add_parser("state", parents=[common], help="ground-state record and verdict")
    graph_arg(state)
    state.add_argument("--p", type=float, required=True)
    state.add_argument("--lambda", dest="lam", type=float, required=True)

    transitions = sub.add_parser("transitions", parents=[common], help="sign pattern of ∂Θ/∂λ")
    graph_arg(transitions)
    transitions.add_argument("--p", type=float, required=True)
    transitions.add_argument("--lmin", type=float)
    transitions.add_argument("--lmax", type=float)
    transitions.add_argument("--scan", type=int)

    diagram = sub.add_parser("diagram", parents=[common], help="(λ, p) phase diagram")
    graph_arg(diagram)
    diagram.add_argument("--pmin", type=float)
    diagram.add_argument("--pmax", type=float)
    diagram.add_argument("--lmin", type=float)
    diagram.add_argument("--lmax", type=float)
    diagram.add_argument("--nx", type=int)
    diagram.add_argument("--ny", type=int)
    diagram.add_argument("--csv", type=Path, required=True)
    diagram.add_argument("--ppm", type=Path)

    asymptotics = sub.add_parser("asymptotics", parents=[common], help="asymptotic ratio tests")
    asymptotics.add_argument("--regime", choices=[r.value for r in Regime], required=True)
    graph_arg(asymptotics)
    asymptotics.add_argument("--p", type=float, help="exponent for the λ-side regimes (default 4)")
    asymptotics.add_argument("--out", type=Path, help="also write the JSON report here")

    profile = sub.add_parser("profile", parents=[common], help="sampled ground-state")
    graph_arg(profile)
    profile.add_argument("--p", type=float, required=True)
    profile.add_argument("--lambda", dest="lam", type=float, required=True)
    profile.add_argument("--csv", type=Path, required=True)

    oracle = sub.add_parser("oracle", parents=[common], help="closed form against shooting")
    graph_arg(oracle)
    oracle.add_argument("--p", type=float, required=True)
    oracle.add_argument("--zmin", type=float)
    oracle.add_argument("--zmax", type=float)
    oracle.add_argument("--n", type=int, default=10)
    oracle.add_argument("--csv", type=Path, help="write the table here instead of stdout")

    selftest = sub.add_parser("selftest", parents=[common], help="run the property suite")
    selftest.add_argument("--quick", action="store_true", help="skip tests marked slow")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, object]:
    """Map flags onto CliSettings fields; unset flags keep the defaults."""
    mapping = {
        "quad_tol": "QUAD_TOL",
        "tol_z": "TOL_Z",
        "eps_sign": "EPS_SIGN",
        "delta_star": "DELTA_STAR",
    }
    if args.command == "transitions":
        mapping.update({"lmin": "SCAN_LAMBDA_MIN", "lmax": "SCAN_LAMBDA_MAX", "scan": "SCAN_POINTS"})
    elif args.command == "diagram":
        mapping.update({
            "lmin": "DIAGRAM_LAMBDA_MIN", "lmax": "DIAGRAM_LAMBDA_MAX",
            "pmin": "DIAGRAM_P_MIN", "pmax": "DIAGRAM_P_MAX",
            "nx": "DIAGRAM_NX", "ny": "DIAGRAM_NY",
        })
    return {field: getattr(args, flag) for flag, field in mapping.items() if getattr(args, flag, None) is not None}


def _validate(args: argparse.Namespace) -> None:
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    if getattr(args, "p", None) is not None and not args.p > 2.0:
        raise UsageError("--p must exceed 2")
    if getattr(args, "lam", None) is not None and not args.lam > 0.0:
        raise UsageError("--lambda must be positive")
    if args.command == "asymptotics" and args.regime in ("lambda-small", "lambda-large"):
        if args.p is not None and abs(args.p - 6.0) <= 1e-12:
            raise UsageError("the λ-side regimes exclude p = 6")
    if args.command == "oracle":
        if args.n < 1:
            raise UsageError("--n must be at least 1")
        top = peak(args.p)
        zmin = args.zmin if args.zmin is not None else 0.05 * top
        zmax = args.zmax if args.zmax is not None else 0.95 * top
        if not 0.0 < zmin <= zmax < top:
            raise UsageError(f"need 0 < zmin <= zmax < φ(0) = {top:.6g}")
        args.zmin, args.zmax = zmin, zmax


def _cmd_state(args, config, export: ExportService) -> int:
    service = StabilityService(config)
    params = ModelParams(p=args.p, graph=GRAPHS[args.graph])
    record, verdict = service.classify_state(params, args.lam)
    if args.json:
        export.write_json({"record": record, "verdict": verdict}, stream=sys.stdout)
    else:
        print(f"graph={args.graph} p={args.p:g} lambda={args.lam:g}")
        print(f"z={record.phase.z:.12g} y={record.phase.y:.12g}")
        print(f"theta1={record.theta1:.12g} theta={record.theta:.12g}")
        print(f"dtheta_dlambda={record.dtheta_dlambda:.12g}")
        print(f"verdict={verdict.kind.value}")
    return EXIT_OK


def _cmd_transitions(args, config, export: ExportService) -> int:
    service = StabilityService(config)
    params = ModelParams(p=args.p, graph=GRAPHS[args.graph])
    report = service.detect_transitions(params)
    if args.json:
        export.write_json({"report": report}, stream=sys.stdout)
    else:
        print(f"pattern={report.pattern.value}")
        for change in report.sign_changes:
            print(f"lambda={change.lambda_:.9g} {change.direction.value}")
    return EXIT_OK


def _cmd_diagram(args, config, export: ExportService) -> int:
    service = StabilityService(config)
    diagram = service.phase_diagram(GRAPHS[args.graph], workers=args.workers)
    export.write_phase_csv(diagram, args.csv)
    if args.ppm is not None:
        export.write_phase_ppm(diagram, args.ppm)
    counts: Dict[str, int] = {}
    for row in diagram.cells:
        for verdict in row:
            counts[verdict.kind.value] = counts.get(verdict.kind.value, 0) + 1
    if args.json:
        export.write_json({"counts": counts, "csv": str(args.csv)}, stream=sys.stdout)
    else:
        print(" ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return EXIT_OK


def _cmd_asymptotics(args, config, export: ExportService) -> int:
    service = AsymptoticsService(config)
    check = service.run(Regime(args.regime), GRAPHS[args.graph], args.p)
    export.write_json({"check": check}, path=args.out, stream=sys.stdout)
    return EXIT_OK if check.passed else EXIT_FAILURE


def _cmd_profile(args, config, export: ExportService) -> int:
    service = OracleService(config)
    params = ModelParams(p=args.p, graph=GRAPHS[args.graph])
    profile = service.reconstruct_profile(params, args.lam)
    export.write_profile_csv(profile, args.csv)
    if args.json:
        export.write_json({"profile": profile}, stream=sys.stdout)
    else:
        print(f"vertex_value={profile.vertex_value:.12g} mass={profile.mass:.12g}")
    return EXIT_OK


def _cmd_oracle(args, config, export: ExportService) -> int:
    service = OracleService(config)
    params = ModelParams(p=args.p, graph=GRAPHS[args.graph])
    z_values = np.linspace(args.zmin, args.zmax, args.n)
    rows = service.oracle_table(params, z_values, workers=args.workers)
    if args.csv is not None:
        export.write_oracle_csv(rows, args.csv)
    elif args.json:
        export.write_json({"rows": [r.model_dump() for r in rows]}, stream=sys.stdout)
    else:
        print("\n".join(export.header_lines() + export.oracle_lines(rows)))
    return EXIT_OK


def _cmd_selftest(args, config, export: ExportService) -> int:
    import pytest

    pytest_args = [str(TEST_DIR), "-q"]
    if args.quick:
        pytest_args += ["-m", "not slow"]
    return EXIT_OK if pytest.main(pytest_args) == 0 else EXIT_FAILURE


COMMANDS = {
    "state": _cmd_state,
    "transitions": _cmd_transitions,
    "diagram": _cmd_diagram,
    "asymptotics": _cmd_asymptotics,
    "profile": _cmd_profile,
    "oracle": _cmd_oracle,
    "selftest": _cmd_selftest,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=args.log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    try:
        _validate(args)
        config = CliSettings(**_overrides(args))
    except (UsageError, ValidationError) as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    export = ExportService(argv=["python -m app", *argv], config=config)
    try:
        return COMMANDS[args.command](args, config, export)
    except NumericsError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run())
