"""Command-line front end.

Subcommands::

    intree build-tree INTERESTS [--rule R] [--out TREE] [--majors-out MAJORS]
    intree run --trace T --tree TREE [--router R ...] [overrides]
    intree sweep --trace T --tree TREE --sweep-var buffer --sweep-values 5MB,10MB
    intree validate-trace TRACE [--trace-format sightings]
    intree synth --out-dir DIR

Exit codes: 0 success, 1 runtime error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

from .config import SimConfig, coerce, make_config, parse_config_lines
from .engine import format_decisions_csv, map_runs, mean_report, report_fields, run
from .interest_tree import (
    MAJOR_RULES,
    InterestMembership,
    InterestTree,
    assign_major_interests,
    dump_majors,
    dump_tree,
    layer_stats,
    load_tree,
    tree_from_interest_file,
)
from .routing import ROUTERS
from .trace import TRACE_FORMATS, TraceFormatError, dump_trace, load_trace, rebase, validate_trace

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

SWEEP_VARS = {
    "buffer": "buffer_capacity",
    "ttl": "ttl",
    "duration": "duration",
    "alpha": "alpha",
    "beta": "beta",
    "gamma": "gamma",
}

METRIC_HEADER = "created,delivered,relayed,delivery_ratio,overhead,avg_latency_s,avg_hop_count"


class UsageError(Exception):
    """Bad flags or unreadable inputs; maps to exit code 2."""


@dataclass
class SweepSpec:
    variable: str
    values: list
    fixed: SimConfig = field(default_factory=SimConfig)
    routers: list[str] = field(default_factory=lambda: ["int-tree"])

    def __post_init__(self):
        if self.variable not in SWEEP_VARS:
            raise UsageError(f"unknown sweep variable {self.variable!r}; choose from {', '.join(SWEEP_VARS)}")
        if not self.values:
            raise UsageError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise UsageError(f"sweep values must be strictly increasing: {self.values}")
        for r in self.routers:
            _check_router(r)

    @property
    def config_field(self) -> str:
        return SWEEP_VARS[self.variable]

    def configs(self) -> list[tuple[object, str, SimConfig]]:
        """(value, router, config) in output order."""
        return [
            (v, r, self.fixed.replace(**{self.config_field: v}, router=r))
            for v in self.values
            for r in self.routers
        ]


def _check_router(name: str) -> None:
    if name not in ROUTERS:
        raise UsageError(f"unknown router {name!r}; choose from {', '.join(ROUTERS)}")


def _read_lines(path: str) -> list[str]:
    try:
        with open(path) as fh:
            return fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _routers(raw: Sequence[str] | None, default: str) -> list[str]:
    if not raw:
        names = [default]
    else:
        names = [n.strip() for item in raw for n in item.split(",") if n.strip()]
    if names == ["all"]:
        names = list(ROUTERS)
    for n in names:
        _check_router(n)
    return names


def _config(args) -> SimConfig:
    lines = _read_lines(args.config) if args.config else []
    try:
        return make_config(
            None,
            parse_config_lines(lines),
            seed=args.seed,
            runs=args.runs,
            buffer_capacity=args.buffer,
            ttl=args.ttl,
            duration=args.duration,
            alpha=args.alpha,
            beta=args.beta,
            gamma=args.gamma,
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad configuration: {exc}") from None


def _load_inputs(args):
    if not os.path.exists(args.trace):
        raise UsageError(f"trace file not found: {args.trace}")
    if not os.path.exists(args.tree):
        raise UsageError(f"tree file not found: {args.tree}")
    try:
        trace = load_trace(args.trace, args.trace_format)
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc.strerror}") from None
    except TraceFormatError as exc:
        raise UsageError(f"{args.trace}: {exc}") from None
    if args.trace_format == "sightings":
        trace = rebase(trace)
    tree = _load_tree(args.tree, args.majors, args.rule)
    return trace, tree


def _load_tree(tree_path: str, majors_path: str | None, rule: str) -> InterestTree:
    try:
        tree = load_tree(_read_lines(tree_path), _read_lines(majors_path) if majors_path else None)
        if not tree.major_interest:
            # derive majors from the tree's own member sets
            memberships = [InterestMembership(c, m) for c, m in tree.members.items() if c != 0]
            tree = tree.with_majors(assign_major_interests(memberships, rule))
    except ValueError as exc:
        raise UsageError(f"{tree_path}: {exc}") from None
    return tree


def _banner(config: SimConfig, routers: Sequence[str], extra: str = "") -> None:
    print("# configuration", file=sys.stderr)
    for line in config.dump().splitlines():
        print(f"#   {line}", file=sys.stderr)
    print(f"#   routers = {','.join(routers)}", file=sys.stderr)
    if extra:
        print(f"#   {extra}", file=sys.stderr)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands


def cmd_build_tree(args) -> int:
    lines = _read_lines(args.interests)
    try:
        tree = tree_from_interest_file(lines, args.rule)
    except ValueError as exc:
        raise UsageError(f"{args.interests}: {exc}") from None
    if len(tree.communities) <= 1:
        raise UsageError(f"{args.interests}: no interests found")
    tree_text = dump_tree(tree)
    if args.out:
        _emit(tree_text, args.out)
        majors_out = args.majors_out or args.out + ".majors"
        _emit(dump_majors(tree), majors_out)
    elif args.majors_out:
        _emit(dump_majors(tree), args.majors_out)
    report = ["layer,interests,nodes"]
    rows = layer_stats(tree)
    report += [f"{row.layer},{row.interest_count},{row.node_count}" for row in rows]
    leaves = sum(1 for c in tree.communities if c != 0 and tree.is_leaf(c))
    report.append(
        f"# {len(rows)} layers, {len(tree.communities) - 1} interests, "
        f"{leaves} leaves, {len(set(tree.major_interest.values()))} major interests"
    )
    if not args.out:
        sys.stdout.write(tree_text)
        report = ["#"] + ["# " + r if not r.startswith("#") else r for r in report]
    print("\n".join(report))
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config(args)
    routers = _routers(args.router, config.router)
    if len(routers) == 1:
        config = config.replace(router=routers[0])
    trace, tree = _load_inputs(args)
    _banner(config, routers, f"trace = {args.trace} ({len(trace)} events, {trace.node_count} nodes)")
    jobs = [
        (config.replace(router=r, seed=config.seed + i), trace, tree)
        for r in routers
        for i in range(config.runs)
    ]
    reports = map_runs(jobs)
    rows = [f"router,run,{METRIC_HEADER}"]
    for k, r in enumerate(routers):
        chunk = reports[k * config.runs:(k + 1) * config.runs]
        if args.per_run:
            rows += [f"{r},{i},{report_fields(rep)}" for i, rep in enumerate(chunk)]
        rows.append(f"{r},mean,{report_fields(mean_report(chunk))}")
    _emit("\n".join(rows) + "\n", args.out)
    if args.decisions:
        first = config.replace(router=routers[0])
        result = run(first, trace, tree, record_decisions=True)
        _emit(format_decisions_csv(result.decisions), args.decisions)
    return EXIT_OK


def sweep_csv(plan: SweepSpec, trace, tree, workers: int | None = None) -> str:
    """Long-format sweep table; aggregate rows carry ``aggregate=1`` and ``run=mean``."""
    runs = plan.fixed.runs
    points = plan.configs()
    jobs = [(cfg.replace(seed=cfg.seed + i), trace, tree) for _, _, cfg in points for i in range(runs)]
    reports = map_runs(jobs, workers)
    rows = [f"variable,value,router,run,aggregate,{METRIC_HEADER}"]
    for k, (value, router, _) in enumerate(points):
        chunk = reports[k * runs:(k + 1) * runs]
        label = _value_label(plan.variable, value)
        rows += [f"{plan.variable},{label},{router},{i},0,{report_fields(rep)}" for i, rep in enumerate(chunk)]
        rows.append(f"{plan.variable},{label},{router},mean,1,{report_fields(mean_report(chunk))}")
    return "\n".join(rows) + "\n"


def _value_label(variable: str, value) -> str:
    if variable == "buffer":
        return f"{value / (1024 * 1024):g}MB"
    if variable in ("ttl", "duration"):
        return f"{value:g}s"
    return f"{value:g}"


def cmd_sweep(args) -> int:
    if not args.sweep_var:
        raise UsageError("sweep needs --sweep-var")
    if args.sweep_var not in SWEEP_VARS:
        raise UsageError(f"unknown sweep variable {args.sweep_var!r}; choose from {', '.join(SWEEP_VARS)}")
    if not args.sweep_values:
        raise UsageError("sweep needs --sweep-values")
    key = SWEEP_VARS[args.sweep_var]
    try:
        values = [coerce(key, v.strip())[1] for v in args.sweep_values.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad sweep value: {exc}") from None
    config = _config(args)
    plan = SweepSpec(args.sweep_var, values, config, _routers(args.router, config.router))
    trace, tree = _load_inputs(args)
    _banner(config, plan.routers, f"sweep {args.sweep_var} over {args.sweep_values}")
    _emit(sweep_csv(plan, trace, tree), args.out)
    return EXIT_OK


def cmd_validate_trace(args) -> int:
    if not os.path.exists(args.trace):
        raise UsageError(f"trace file not found: {args.trace}")
    try:
        trace = load_trace(args.trace, args.trace_format)
    except TraceFormatError as exc:
        print(f"{args.trace}: invalid: {exc}")
        return EXIT_RUNTIME
    problems = validate_trace(trace)
    contacts = trace.contacts()
    print(
        f"{args.trace}: {len(trace)} events, {len(contacts)} contacts, "
        f"{trace.node_count} nodes, duration {trace.duration:g}s"
    )
    for p in problems:
        print(f"  problem: {p}")
    if args.canonical_out:
        with open(args.canonical_out, "w") as fh:
            dump_trace(rebase(trace) if args.trace_format == "sightings" else trace, fh)
    return EXIT_RUNTIME if problems else EXIT_OK


def cmd_synth(args) -> int:
    from .scenarios import clustered_scenario

    sc = clustered_scenario(
        node_count=args.nodes,
        leaves=args.leaves,
        duration=args.duration or 21600.0,
        within_mean=args.within_mean,
        seed=args.seed,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "trace.csv"), "w") as fh:
        dump_trace(sc.trace, fh)
    with open(os.path.join(args.out_dir, "tree.csv"), "w") as fh:
        fh.write(dump_tree(sc.tree))
    with open(os.path.join(args.out_dir, "tree.csv.majors"), "w") as fh:
        fh.write(dump_majors(sc.tree))
    with open(os.path.join(args.out_dir, "interests.csv"), "w") as fh:
        fh.write("node_id,interest_id\n")
        for m in sc.interests:
            fh.writelines(f"{n},{m.interest_id}\n" for n in sorted(m.members))
    print(f"wrote trace.csv, tree.csv, tree.csv.majors, interests.csv to {args.out_dir}")
    return EXIT_OK


# -- argument parsing


def _sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--trace", required=True, help="contact trace file")
    p.add_argument("--trace-format", choices=TRACE_FORMATS, default="canonical")
    p.add_argument("--tree", required=True, help="tree file written by build-tree")
    p.add_argument("--majors", help="node_id,community_id file (default: TREE.majors if present)")
    p.add_argument("--rule", choices=MAJOR_RULES, default="highest-id", help="major-interest rule when no majors file")
    p.add_argument("--router", action="append", help="router name, comma list or 'all'; repeatable")
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.add_argument("--buffer", help="buffer size, e.g. 5MB")
    p.add_argument("--ttl", help="message TTL, e.g. 360min")
    p.add_argument("--duration", help="simulated time, e.g. 21600s")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="intree", description="Interest-tree DTN routing simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-tree", help="build an interest tree from node_id,interest_id records")
    p.add_argument("interests")
    p.add_argument("--rule", choices=MAJOR_RULES, default="highest-id")
    p.add_argument("--out", help="tree file; majors go to OUT.majors unless --majors-out is given")
    p.add_argument("--majors-out")
    p.set_defaults(func=cmd_build_tree)

    p = sub.add_parser("run", help="simulate and print one aggregate CSV row per router")
    _sim_flags(p)
    p.add_argument("--per-run", action="store_true", help="also print one row per run")
    p.add_argument("--decisions", help="write the first router's first-run decision trace here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one parameter; long-format CSV")
    _sim_flags(p)
    p.add_argument("--sweep-var", help=f"one of {', '.join(SWEEP_VARS)}")
    p.add_argument("--sweep-values", help="comma-separated, strictly increasing, units allowed")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-trace", help="parse a trace and report structural problems")
    p.add_argument("trace")
    p.add_argument("--trace-format", choices=TRACE_FORMATS, default="canonical")
    p.add_argument("--canonical-out", help="also write the parsed trace in time,kind,a,b form")
    p.set_defaults(func=cmd_validate_trace)

    p = sub.add_parser("synth", help="write a community-clustered synthetic trace and tree")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--nodes", type=int, default=30)
    p.add_argument("--leaves", type=int, default=6)
    p.add_argument("--within-mean", type=float, default=1000.0, help="mean gap between same-community contacts (s)")
    p.add_argument("--duration", type=float)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tree", None) and getattr(args, "majors", "unset") is None:
        candidate = args.tree + ".majors"
        if os.path.exists(candidate):
            args.majors = candidate
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"intree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - report, do not trace back
        print(f"intree: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
