"""
Command-line entry point.

    flow-topopt run --case pipe_bend --levels 0 --out results
    flow-topopt run --config my_case.ini
    flow-topopt verify
    flow-topopt mesh-info --case bypass --levels 3 --reference
    flow-topopt mesh-info --case rugby --levels 0 --dump meshes/rugby

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from dotenv import load_dotenv
from loguru import logger

from flow_topopt import __version__
from flow_topopt.config import default_output_dir, load_config, override_config
from flow_topopt.errors import ConfigError, FlowTopOptError, MeshError
from flow_topopt.export import write_mesh_text
from flow_topopt.fem.cases import CaseName, generate_case_mesh
from flow_topopt.fem.mesh import dof_counts, reference_dof_table, refined_counts
from flow_topopt.optimizer import objective_report, run
from flow_topopt.presets import DEFAULT_RESOLUTION, REFERENCE_LEVEL0, preset_config
from flow_topopt.schema.mesh import DofReport
from flow_topopt.schema.params import InitialPhaseKind
from flow_topopt.verification import run_checks

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILURE = 2

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}"


def configure_logging(verbose: bool = False) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO", format=LOG_FORMAT)


def _case(value: str) -> CaseName:
    try:
        return CaseName(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown case '{value}', expected one of {[c.value for c in CaseName]}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flow-topopt",
                                     description="Phase-field topology optimization of Stokes flow")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every outer iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="optimize a benchmark case")
    run_parser.add_argument("--case", type=_case, help="benchmark case (required without --config)")
    run_parser.add_argument("--config", type=Path, help="INI file with overrides of the case preset")
    run_parser.add_argument("--out", type=Path, help="output directory")
    run_parser.add_argument("--seed", type=int, help="start from a seeded uniform-random phase field")
    run_parser.add_argument("--levels", type=int, help="number of uniform refinements K")
    run_parser.add_argument("--outer", type=int, help="state solves per level N")
    run_parser.add_argument("--inner", type=int, help="phase steps per state solve M")
    run_parser.add_argument("--resolution", type=int, help="grid steps per unit length at level 0")
    run_parser.add_argument("--no-wall-time", action="store_true",
                            help="write zeros in the seconds column for reproducible histories")
    run_parser.add_argument("--plot", action="store_true", help="also write an HTML history plot")

    sub.add_parser("verify", help="run the discretization self-checks")

    info_parser = sub.add_parser("mesh-info", help="print mesh sizes and DOF counts per level")
    info_parser.add_argument("--case", type=_case, required=True)
    info_parser.add_argument("--levels", type=int, default=3)
    info_parser.add_argument("--resolution", type=int, help="grid steps per unit length at level 0")
    info_parser.add_argument("--reference", action="store_true",
                             help="use the published level-0 sizes instead of the structured mesh")
    info_parser.add_argument("--dump", type=Path, metavar="STEM",
                             help="also write the level-0 mesh to STEM.node and STEM.ele")
    return parser


def _run_config(args: argparse.Namespace):
    if args.config is not None:
        config = load_config(args.config)
        if args.case is not None and args.case != config.case:
            raise ConfigError("case", f"--case {args.case.value} contradicts the config file "
                                      f"({config.case.value})")
    elif args.case is not None:
        config = preset_config(args.case, directory=default_output_dir())
    else:
        raise ConfigError("case", "either --case or --config is required")

    updates = {}
    iterations = {k: getattr(args, k) for k in ("levels", "outer", "inner") if getattr(args, k) is not None}
    if iterations:
        updates["iterations"] = iterations
    if args.resolution is not None:
        updates["resolution"] = args.resolution
    if args.seed is not None:
        updates["initial"] = {"kind": InitialPhaseKind.RANDOM, "seed": args.seed}
    output = {}
    if args.out is not None:
        output["directory"] = str(args.out)
    if args.no_wall_time:
        output["record_wall_time"] = False
    if args.plot:
        output["plot"] = True
    if output:
        updates["output"] = output
    return override_config(config, **updates) if updates else config


def command_run(args: argparse.Namespace) -> int:
    config = _run_config(args)
    result = run(config)
    report = objective_report(result.phi, result.solution, result.duals, config.phase)
    print(f"run {result.run_id}: case {config.case.value}, {len(result.history)} outer iterations")
    print(report.as_str)
    print(f"dissipated power: {report.dissipated:.6g}")
    for path in result.exports:
        print(f"wrote {path}")
    return EXIT_OK


def command_verify(args: argparse.Namespace) -> int:
    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<20} {r.detail}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_FAILURE


def dof_rows(case: CaseName, levels: int, resolution: Optional[int] = None,
             reference: bool = False) -> List[DofReport]:
    """Per-level sizes; counts beyond level 0 follow the refinement recurrences"""
    if reference:
        return reference_dof_table(*REFERENCE_LEVEL0[case], levels=levels)
    base = dof_counts(generate_case_mesh(case, resolution or DEFAULT_RESOLUTION[case]))
    rows = [base]
    v, e, t = base.vertices, base.edges, base.cells
    for level in range(1, levels + 1):
        v, e, t = refined_counts(v, e, t)
        rows.append(DofReport(level=level, vertices=v, edges=e, cells=t))
    return rows


def command_mesh_info(args: argparse.Namespace) -> int:
    if args.levels < 0:
        raise ConfigError("levels", "must be non-negative")
    if args.dump is not None and args.reference:
        raise ConfigError("dump", "the published sizes have no mesh to write")
    rows = dof_rows(args.case, args.levels, args.resolution, args.reference)
    table = pd.DataFrame([r.as_row() for r in rows])
    print(table.to_string(index=False))
    if args.dump is not None:
        mesh = generate_case_mesh(args.case, args.resolution or DEFAULT_RESOLUTION[args.case])
        for path in write_mesh_text(mesh, args.dump):
            print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"run": command_run, "verify": command_verify, "mesh-info": command_mesh_info}


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; those are invalid input here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    configure_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MeshError) as exc:
        logger.error("Invalid input: {}", exc)
        return EXIT_INVALID
    except (FlowTopOptError, OSError) as exc:
        logger.error("Run failed: {}", exc)
        return EXIT_FAILURE


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
