"""Command line interface for the planning suite.

Exit codes: 0 success, 1 validation or usage error, 2 infeasibility,
3 solver or runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .budget import InfeasibleAllocationError, allocate_baseline, allocate_fair
from .clustering import cluster_neighborhood
from .generate import GenConfig, generate_synthetic
from .instance import InstanceError, parse_instance, serialize_instance
from .metrics import CityReport, format_city_table
from .planning import InfeasibleBudgetError
from .scenario import ScenarioConfig, run_two_stage, serialize_run

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER = 3


class UsageError(Exception):
    """Raised instead of argparse's SystemExit so main can map exit codes."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102  (argparse hook)
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ugsopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance document")
    p.add_argument("file", type=Path)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("config", type=Path, help="JSON file of generator settings")
    p.add_argument("-o", "--output", type=Path, required=True)

    p = sub.add_parser("allocate", help="stage-1 budget split")
    p.add_argument("file", type=Path)
    p.add_argument("--mode", choices=("fair", "baseline"), default="fair")
    p.add_argument("--delta", type=float, default=None)

    p = sub.add_parser("cluster", help="k-means demand aggregation per neighborhood")
    p.add_argument("file", type=Path)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("solve", help="full two-stage run")
    p.add_argument("file", type=Path)
    p.add_argument("--mode", choices=("fair", "baseline"), default="fair")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--gap", type=float, default=1e-6)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--cluster-k", default=None,
                   help="clusters per neighborhood: an integer or 'auto'")
    p.add_argument("--u0-multiplier", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", type=Path, default=None)

    p = sub.add_parser("metrics", help="print the report table of a stored run")
    p.add_argument("run", type=Path)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--workers", type=int, default=2)

    return parser


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _cmd_validate(args) -> int:
    inst = parse_instance(_read(args.file))
    print(f"ok: {inst.city} ({len(inst.neighborhoods)} neighborhoods, "
          f"{len(inst.segments)} segments)")
    return EXIT_OK


def _cmd_gen(args) -> int:
    doc = json.loads(_read(args.config))
    try:
        cfg = GenConfig(**doc)
    except TypeError as exc:
        raise UsageError(f"bad generator config: {exc}") from None
    inst = generate_synthetic(cfg)
    args.output.write_text(serialize_instance(inst))
    print(f"wrote {args.output} ({inst.city})")
    return EXIT_OK


def _cmd_allocate(args) -> int:
    inst = parse_instance(_read(args.file))
    if args.mode == "baseline":
        allocation = allocate_baseline(inst)
    else:
        allocation = allocate_fair(inst, delta=args.delta)
    print(json.dumps({"mode": allocation.mode, "budgets": allocation.budgets,
                      "objective": allocation.objective,
                      "binding": allocation.binding},
                     indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_cluster(args) -> int:
    inst = parse_instance(_read(args.file))
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    seed = args.seed if args.seed is not None else (inst.seed or 0)
    out = {}
    for nbhd in inst.neighborhoods:
        clustering = cluster_neighborhood(nbhd, min(args.k, len(nbhd.demand_points)),
                                          seed)
        out[nbhd.id] = {"k": clustering.k, "seed": clustering.seed,
                        "inertia": clustering.inertia,
                        "assignment": clustering.assignment}
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def _parse_cluster_k(raw):
    if raw is None or raw == "auto":
        return raw
    try:
        return int(raw)
    except ValueError:
        raise UsageError("--cluster-k must be an integer or 'auto'") from None


def _cmd_solve(args) -> int:
    inst = parse_instance(_read(args.file))
    try:
        cfg = ScenarioConfig(mode=args.mode, delta=args.delta, gap_tol=args.gap,
                             time_limit_s=args.time_limit,
                             cluster_k=_parse_cluster_k(args.cluster_k),
                             u0_multiplier=args.u0_multiplier, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    run = run_two_stage(inst, cfg)
    payload = serialize_run(run)
    if args.output:
        args.output.write_text(payload)
        print(f"wrote {args.output} ({run.run_id}, {run.status})")
    else:
        print(payload, end="")
    if run.status != "done":
        failed = [r["id"] for r in run.neighborhoods if r.get("status") == "failed"]
        print(f"run failed in neighborhoods: {', '.join(failed)}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_metrics(args) -> int:
    doc = json.loads(_read(args.run))
    city = doc.get("city")
    if not city:
        print("run has no completed neighborhoods to report", file=sys.stderr)
        return EXIT_SOLVER
    report = CityReport(rows=city["rows"],
                        weighted_share_pct=city["weighted_share_pct"])
    print(format_city_table(report), end="")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import serve

    serve(args.store, bind=args.bind, max_workers=args.workers)
    return EXIT_OK


_HANDLERS = {
    "validate": _cmd_validate,
    "gen": _cmd_gen,
    "allocate": _cmd_allocate,
    "cluster": _cmd_cluster,
    "solve": _cmd_solve,
    "metrics": _cmd_metrics,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"ugsopt: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"ugsopt: not valid JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InstanceError as exc:
        print(f"ugsopt: invalid instance: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InfeasibleAllocationError, InfeasibleBudgetError) as exc:
        print(f"ugsopt: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (RuntimeError, OSError, ValueError) as exc:
        print(f"ugsopt: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
