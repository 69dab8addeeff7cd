#!/usr/bin/env python3
"""
graspstab Command Runner
Stability checks, disturbance searches, force maps and slip-state counts for grasp files
"""

import argparse
import io
import json
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from dotenv import load_dotenv  # noqa: E402

from config_loader import config  # noqa: E402
from errors import GraspStabError, ResourceLimitError  # noqa: E402

logger = logging.getLogger("graspstab")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3

LOG_LEVELS = {"error": logging.ERROR, "warning": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def setup_logging(level: Optional[str] = None) -> None:
    """Stream handler on stderr plus a rotating file when logging.log_dir is configured"""
    name = (level or os.getenv("GRASPSTAB_LOG") or config.log_level).lower()
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_dir = config.log_dir
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(
            RotatingFileHandler(os.path.join(log_dir, "graspstab.log"), maxBytes=5_000_000, backupCount=3)
        )
    logging.basicConfig(
        level=LOG_LEVELS.get(name, logging.WARNING),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def _numbers(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _range(text: str) -> List[float]:
    """a:b:step, both ends included"""
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    if step <= 0 or b < a:
        raise argparse.ArgumentTypeError("range needs step > 0 and stop >= start")
    count = int((b - a) / step + 1e-9) + 1
    return [a + k * step for k in range(count)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graspstab", description="Quasi-static grasp stability analysis")
    parser.add_argument("--log-level", choices=sorted(LOG_LEVELS), help="overrides GRASPSTAB_LOG")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, solver: bool = True) -> None:
        p.add_argument("file", help="grasp description (JSON)")
        p.add_argument("--fc", type=_numbers, help="commanded actuator forces, comma-separated")
        p.add_argument("--json-out", help="write the full result record as canonical JSON")
        if solver:
            p.add_argument("--solver", choices=["relaxation", "iterative"], default="relaxation")
            p.add_argument("--eta", type=float, help="contact normal uncertainty (rad)")
            p.add_argument("--robust", action="store_true", help="use the configured normal uncertainty")
            p.add_argument("--q", type=int, help="refinement exponent of the relaxation solver")

    p = sub.add_parser("check", help="is the grasp stable under a wrench")
    common(p)
    p.add_argument("--w", type=_numbers, required=True, help="fx,fy,fz,tx,ty,tz (planar: fx,fy,tz)")
    p.add_argument("--diagnostics", help="append per-round refinement records (JSON lines)")

    p = sub.add_parser("maxdist", help="largest resistible disturbance along a direction")
    common(p)
    p.add_argument("--d", type=_numbers, required=True, help="disturbance direction")

    p = sub.add_parser("optimize", help="actuator commands minimizing the largest one")
    common(p)
    p.add_argument("--w", type=_numbers, required=True)
    p.add_argument("--torque-caps", type=_numbers)
    p.add_argument("--max-normal", type=float)

    p = sub.add_parser("map", help="resistible-force map over a wrench plane")
    common(p)
    p.add_argument("--plane", default="xy")
    p.add_argument("--u", type=_numbers, help="first plane direction (overrides --plane)")
    p.add_argument("--v", type=_numbers, help="second plane direction")
    p.add_argument("--allow-mixed", action="store_true", help="accept force/torque mixed plane vectors")
    p.add_argument("--step", type=float, help="angular step in degrees")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV output path (stdout when omitted)")

    p = sub.add_parser("enum2d", help="planar slip and detach state counts")
    common(p, solver=False)
    p.add_argument("--w", type=_numbers, help="also decide stability under fx,fy,tz")

    p = sub.add_parser("sweep-preload", help="max disturbance over one actuator's command")
    common(p)
    p.add_argument("--actuator", type=int, required=True)
    p.add_argument("--values", type=_range, required=True, help="start:stop:step")
    p.add_argument("--direction", type=_numbers, required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="CSV output path (stdout when omitted)")

    p = sub.add_parser("closure", help="force-closure baseline")
    common(p, solver=False)
    return parser


def _options(args, loaded):
    from analysis import SolverOptions

    eta = args.eta
    if eta is None and args.robust:
        eta = config.default_eta
    if eta is None:
        eta = loaded.defaults.eta
    return SolverOptions(
        solver=args.solver,
        eta=eta,
        relaxation=loaded.defaults.relaxation_settings(args.q),
        iterative=loaded.defaults.iterative_config(),
    )


def _emit_json(args, record: Dict) -> None:
    if getattr(args, "json_out", None):
        from grasp_io import write_canonical

        write_canonical(record, args.json_out)


def _emit_csv(args, writer: Callable, rows) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer(rows, fh)
    else:
        buf = io.StringIO()
        writer(rows, buf)
        sys.stdout.write(buf.getvalue())


def cmd_check(args, loaded) -> int:
    from analysis import Verdict, stability_check

    verdict = stability_check(loaded.model, args.w, args.fc, _options(args, loaded), args.diagnostics)
    print(f"{loaded.model.name}: {verdict.verdict.value}")
    _emit_json(args, verdict.to_dict())
    return {Verdict.STABLE: EXIT_OK, Verdict.UNSTABLE: EXIT_NEGATIVE}.get(verdict.verdict, EXIT_SOLVER)


def cmd_maxdist(args, loaded) -> int:
    from analysis import MagnitudeStatus, max_disturbance

    result = max_disturbance(loaded.model, args.d, args.fc, _options(args, loaded))
    print(f"{loaded.model.name}: {result.magnitude:.6g} N ({result.status.value})")
    _emit_json(args, result.to_dict())
    return {
        MagnitudeStatus.OK: EXIT_OK,
        MagnitudeStatus.CAPPED: EXIT_OK,
        MagnitudeStatus.INFEASIBLE: EXIT_NEGATIVE,
    }.get(result.status, EXIT_SOLVER)


def cmd_optimize(args, loaded) -> int:
    from analysis import optimize_actuators

    result = optimize_actuators(loaded.model, args.w, _options(args, loaded), args.torque_caps, args.max_normal)
    if result.feasible:
        print(f"{loaded.model.name}: max command {result.objective:.6g}, f_c = {[round(v, 6) for v in result.f_c]}")
    else:
        print(f"{loaded.model.name}: no actuator command holds the grasp")
    _emit_json(args, result.to_dict())
    return EXIT_OK if result.feasible else EXIT_NEGATIVE


def _settings(args):
    from analysis import QuerySettings

    return QuerySettings.from_config(workers=getattr(args, "workers", None))


def cmd_map(args, loaded) -> int:
    from analysis import MagnitudeStatus, force_map, plane_basis
    from grasp_io import write_map_csv

    if args.u is not None or args.v is not None:
        if args.u is None or args.v is None:
            raise argparse.ArgumentTypeError("--u and --v go together")
        plane = (args.u, args.v)
    else:
        plane = plane_basis(loaded.model, args.plane)
    rows = force_map(
        loaded.model, plane, args.fc, _options(args, loaded), _settings(args), args.step, args.allow_mixed
    )
    _emit_csv(args, write_map_csv, rows)
    _emit_json(args, {"rows": [r.to_dict() for r in rows]})
    return EXIT_SOLVER if any(r.status == MagnitudeStatus.ERROR for r in rows) else EXIT_OK


def cmd_sweep(args, loaded) -> int:
    from analysis import MagnitudeStatus, preload_sweep
    from grasp_io import write_sweep_csv

    rows = preload_sweep(
        loaded.model, args.actuator, args.values, args.direction, args.fc, _options(args, loaded), _settings(args)
    )
    _emit_csv(args, write_sweep_csv, rows)
    _emit_json(args, {"rows": [r.to_dict() for r in rows]})
    return EXIT_SOLVER if any(r.status == MagnitudeStatus.ERROR for r in rows) else EXIT_OK


def cmd_enum2d(args, loaded) -> int:
    from planar import count_bound, enumerate_detach_states, enumerate_slip_states, planar_stability
    from errors import InvalidInputError

    grasp = loaded.model
    if not grasp.is_planar:
        raise InvalidInputError("enum2d needs a planar grasp file")
    slip = enumerate_slip_states(grasp)
    detach = enumerate_detach_states(grasp, grasp.preloads, grasp.stiffness)
    bound = count_bound(grasp.m)
    generic, regions = bound["cells"], bound["regions"]
    print(f"{grasp.name}: m={grasp.m}")
    print(f"  slip cells: {slip.cell_count} (generic count {generic}, region bound {regions})")
    print(f"  distinct slip states: {len(slip.states)}")
    print(f"  detach states: {len(detach)}")
    record: Dict = {
        "slip_cells": slip.cell_count,
        "slip_states": len(slip.states),
        "detach_states": len(detach),
        "generic_count": generic,
        "region_bound": regions,
    }
    code = EXIT_OK
    if args.w is not None:
        verdict = planar_stability(grasp, args.w)
        print(f"  under w={args.w}: {verdict.status}")
        record["verdict"] = verdict.to_dict()
        code = EXIT_OK if verdict.stable else EXIT_NEGATIVE
    _emit_json(args, record)
    return code


def cmd_closure(args, loaded) -> int:
    from analysis import force_closure_check

    verdict = force_closure_check(loaded.model)
    print(f"{loaded.model.name}: {verdict.status}")
    _emit_json(args, verdict.to_dict())
    return EXIT_OK if verdict.closure else EXIT_NEGATIVE


COMMANDS = {
    "check": cmd_check,
    "maxdist": cmd_maxdist,
    "optimize": cmd_optimize,
    "map": cmd_map,
    "enum2d": cmd_enum2d,
    "sweep-preload": cmd_sweep,
    "closure": cmd_closure,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one subcommand and return its exit code"""
    load_dotenv(project_root / ".env")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_INPUT
    setup_logging(args.log_level)

    from grasp_io import parse_grasp_file

    try:
        loaded = parse_grasp_file(args.file)
        return COMMANDS[args.command](args, loaded)
    except ResourceLimitError as e:
        logger.error(f"[ERROR] {e.message}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return EXIT_SOLVER
    except GraspStabError as e:
        logger.error(f"[ERROR] {e.message}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code
    except argparse.ArgumentTypeError as e:
        logger.error(f"[ERROR] {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
