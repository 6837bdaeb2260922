#!python

# native imports
import argparse
import json
import logging
import os
import sys
import typing
from fractions import Fraction

logger = logging.getLogger()

# forient imports
import forient
from forient import reporting
from forient.config import Config, get_update_table
from forient.errors import (
    CapExceededError,
    ContractError,
    InfeasibleError,
    InstanceFormatError,
)
from forient.instance import Instance, load_instance, random_instance
from forient.utils import format_rational, parse_rational, rational_to_json, recursive_update

# third party imports
import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_CAP = 3
EXIT_CONTRACT = 4

common = argparse.ArgumentParser(add_help=False)
common.add_argument(
    "--output",
    "-o",
    type=str,
    help="Output directory for log.txt, events.jsonl, results, tables and figures.",
    default=None,
)
common.add_argument(
    "--config",
    "-c",
    type=str,
    help="Config yaml which will be used to update the default config.",
    default=None,
)
common.add_argument(
    "--config-dict",
    type=str,
    help="JSON dict which will be used to update the default config.",
    default="{}",
)
common.add_argument(
    "--decimal",
    action="store_true",
    default=None,
    help="Render rationals as decimals in human readable output.",
)

parser = argparse.ArgumentParser(
    prog="forient",
    description="Minimum cost f-orientable subgraphs by iterative rounding",
)
parser.add_argument(
    "--version",
    "-v",
    action="store_true",
    help="Print version and exit",
)
subparsers = parser.add_subparsers(dest="command")

solve_parser = subparsers.add_parser("solve", parents=[common], help="Buy edges by iterative rounding.")
solve_parser.add_argument("instance", type=str, help="Instance file (JSON or YAML).")
solve_parser.add_argument(
    "--max-violations-per-round",
    type=int,
    default=None,
    help="Rows added per separation call at most.",
)
solve_parser.add_argument(
    "--emit-lp", action="store_true", default=None, help="Keep the LP of every round."
)
solve_parser.add_argument(
    "--audit-copartitions",
    action="store_true",
    default=None,
    help="Keep co-partition rows for (k, l) demands and compare.",
)
solve_parser.add_argument(
    "--verify-basis",
    action="store_true",
    default=None,
    help="Extract and check a strongly cross-free basis in every round.",
)
solve_parser.add_argument("--threshold", type=str, default=None, help="Fixing threshold p/q.")

certify_parser = subparsers.add_parser("certify", parents=[common], help="Re-verify a result.")
certify_parser.add_argument("instance", type=str, help="Instance file.")
certify_parser.add_argument("result", type=str, help="Result JSON written by solve.")

oracle_parser = subparsers.add_parser("oracle", parents=[common], help="Exact optimum by enumeration.")
oracle_parser.add_argument("instance", type=str, help="Instance file.")

orient_parser = subparsers.add_parser(
    "orient", parents=[common], help="Covering orientation of the free edges."
)
orient_parser.add_argument("instance", type=str, help="Instance file.")

analyze_parser = subparsers.add_parser(
    "analyze",
    parents=[common],
    help="Strongly cross-free basis and domination forest of the first relaxation.",
)
analyze_parser.add_argument("instance", type=str, help="Instance file.")
analyze_parser.add_argument("--max-violations-per-round", type=int, default=None)

gap_parser = subparsers.add_parser("gap", parents=[common], help="Integrality gap of the ladder instances.")
gap_parser.add_argument("--n-min", type=int, default=None)
gap_parser.add_argument("--n-max", type=int, default=None)
gap_parser.add_argument("--k", type=int, default=None)

gen_parser = subparsers.add_parser("gen", parents=[common], help="Random feasible instances.")
gen_parser.add_argument("--seed", type=int, default=None)
gen_parser.add_argument("--count", type=int, default=1)
gen_parser.add_argument("--kind", choices=["kl", "table"], default=None)
gen_parser.add_argument(
    "--structure",
    choices=["cycles", "prism", "mixed"],
    default=None,
    help="Shape of G*, prisms have a fractional relaxation optimum.",
)

bench_parser = subparsers.add_parser(
    "bench", parents=[common], help="Iterative rounding against the exact optimum."
)
bench_parser.add_argument("--seed", type=int, default=None)
bench_parser.add_argument("--count", type=int, default=None)
bench_parser.add_argument("--structure", choices=["cycles", "prism", "mixed"], default=None)

# command line flag -> config path
FLAG_PATHS = {
    "max_violations_per_round": "solver.max_violations_per_round",
    "emit_lp": "output.emit_lp",
    "audit_copartitions": "solver.audit_copartitions",
    "verify_basis": "solver.verify_basis_structure",
    "threshold": "solver.threshold",
    "decimal": "output.decimal",
    "seed": "general.seed",
    "kind": "generator.demand_kind",
    "structure": "generator.structure",
}
GAP_FLAG_PATHS = {"n_min": "gap.n_min", "n_max": "gap.n_max", "k": "gap.k"}
BENCH_FLAG_PATHS = {"count": "bench.count"}


def _nested(path: str, value: typing.Any) -> dict:
    update = value
    for key in reversed(path.split(".")):
        update = {key: update}
    return update


def parse_config(args: argparse.Namespace) -> Config:
    """Default config updated by the config file, the config dict and explicit flags, in that order.

    Parameters
    ----------

    args : argparse.Namespace
        Command line arguments.

    Returns
    -------

    config : Config
        Merged config.
    """
    config = Config.default()
    layers = []
    if args.config is not None:
        layer = Config(os.path.basename(args.config))
        layer.from_yaml(args.config)
        layers.append(layer)

    try:
        update = json.loads(args.config_dict)
    except json.JSONDecodeError as e:
        raise ValueError(f"could not parse --config-dict: {e}")
    if update:
        layers.append(Config("config_dict", update))

    paths = dict(FLAG_PATHS)
    if args.command == "gap":
        paths.update(GAP_FLAG_PATHS)
    if args.command == "bench":
        paths.update(BENCH_FLAG_PATHS)
    flags = {}
    for flag, path in paths.items():
        value = getattr(args, flag, None)
        if value is not None:
            recursive_update(flags, _nested(path, value))
    if flags:
        layers.append(Config("command_line", flags))

    config.update(layers, print_modifications=True)
    if layers:
        logger.debug("config updates:\n" + get_update_table(Config.default(), layers).to_string())
    return config


def set_log_level(level: typing.Union[str, int]) -> None:
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    if not isinstance(level, int):
        raise ValueError(f"unknown log level {level!r}")
    root = logging.getLogger()
    root.setLevel(level)
    for handler in root.handlers:
        handler.setLevel(level)


def solver_kwargs(config: Config) -> dict:
    return {
        "max_violations_per_round": int(config.get("solver.max_violations_per_round")),
        "threshold": parse_rational(str(config.get("solver.threshold")), "solver.threshold"),
        "audit_copartitions": bool(config.get("solver.audit_copartitions")),
        "verify_basis_structure": bool(config.get("solver.verify_basis_structure")),
        "use_flow_precheck": bool(config.get("solver.use_flow_precheck")),
        "max_separation_rounds": int(config.get("solver.max_separation_rounds")),
        "emit_lp": bool(config.get("output.emit_lp")),
        "cap": int(config.get("caps.separation_max_nodes")),
        "enumeration_cap": int(config.get("caps.enumeration_max_nodes")),
    }


def generator_kwargs(config: Config) -> dict:
    return {
        "n_min": int(config.get("generator.n_min")),
        "n_max": int(config.get("generator.n_max")),
        "max_purchasable": int(config.get("generator.max_purchasable")),
        "extra_edges": int(config.get("generator.extra_edges")),
        "demand_kind": config.get("generator.demand_kind"),
        "max_cost": int(config.get("generator.max_cost")),
        "structure": str(config.get("generator.structure")),
    }


def read_instance(path: str, config: Config) -> Instance:
    inst = load_instance(path, cap=int(config.get("caps.supermodularity_max_nodes")))
    logger.progress(
        f"instance {inst.name or os.path.basename(path)}: {inst.n} nodes, "
        f"{len(inst.free_edges)} free and {inst.n_purchasable} purchasable edges, demand {inst.demand}"
    )
    return inst


def emit(args: argparse.Namespace, name: str, data: typing.Any) -> None:
    """Write `data` as ``<output>/<name>.json``, or print it when there is no output folder."""
    text = json.dumps(reporting.to_jsonable(data), indent=2)
    if args.output is None:
        print(text)
        return
    os.makedirs(args.output, exist_ok=True)
    with open(os.path.join(args.output, f"{name}.json"), "w") as f:
        f.write(text + "\n")


def _formatter(config: Config) -> typing.Callable:
    decimal = bool(config.get("output.decimal"))
    return lambda value: "-" if value is None else format_rational(value, decimal)


def _format_frame(frame, fmt):
    return frame.apply(lambda column: column.map(lambda v: fmt(v) if isinstance(v, Fraction) else v))


def command_solve(args, config, pipeline) -> int:
    from forient.solver import solve

    inst = read_instance(args.instance, config)
    result = solve(inst, reporter=pipeline, **solver_kwargs(config))
    fmt = _formatter(config)

    emit(args, "result", result.to_dict())
    pipeline.log_data("rounds", result.rounds_frame())
    if config.get("output.emit_lp"):
        for record in result.rounds:
            if args.output is not None:
                with open(os.path.join(args.output, f"round_{record.index}.lp"), "w") as f:
                    f.write(record.lp_text)
            else:
                logger.info(f"round {record.index}:\n{record.lp_text}")

    logger.progress(f"chosen edges: {[list(e) for e in result.chosen_edges]}")
    logger.progress(f"cost {fmt(result.total_cost)}, relaxation bound {fmt(result.lp_lower_bound)}, ratio {fmt(result.ratio)}")
    if result.rounds:
        logger.info("rounds:\n" + result.rounds_frame().to_string(index=False))
    return EXIT_OK


def command_certify(args, config, pipeline) -> int:
    from forient.solver import AugResult, certify

    inst = read_instance(args.instance, config)
    with open(args.result, "r") as f:
        result = AugResult.from_dict(json.load(f))
    certificate = certify(
        result,
        inst,
        cap=int(config.get("caps.separation_max_nodes")),
        enumeration_cap=int(config.get("caps.enumeration_max_nodes")),
    )
    for check in certificate.checks:
        status = "PASS" if check.passed else "FAIL"
        logger.progress(f"[{status}] {check.name} {check.detail}".rstrip())
    emit(args, "certificate", certificate.to_dict())
    return EXIT_OK if certificate.passed else EXIT_CONTRACT


def command_oracle(args, config, pipeline) -> int:
    from forient.oracle import exact_opt

    inst = read_instance(args.instance, config)
    result = exact_opt(
        inst,
        node_cap=int(config.get("caps.oracle_max_nodes")),
        purchasable_cap=int(config.get("caps.oracle_max_purchasable")),
    )
    logger.progress(f"optimum {_formatter(config)(result.cost)} buying {list(result.chosen)}")
    emit(
        args,
        "oracle",
        {
            "cost": rational_to_json(result.cost),
            "chosen": list(result.chosen),
            "chosen_edges": [list(inst.purchasable_edges[j]) for j in result.chosen],
            "checked": result.checked,
        },
    )
    return EXIT_OK


def command_orient(args, config, pipeline) -> int:
    from forient.orient import extract_orientation, is_f_orientable

    inst = read_instance(args.instance, config)
    cap = int(config.get("caps.enumeration_max_nodes"))
    graph = inst.free_graph
    verdict = is_f_orientable(graph, inst.demand, cap=cap, root=inst.root)
    if not verdict:
        logger.error(f"free edges are not orientable, violated by {verdict.witness}")
        emit(args, "orientation", {"orientable": False, "witness": str(verdict.witness)})
        return EXIT_INFEASIBLE
    orientation = extract_orientation(graph, inst.demand, cap=cap)
    logger.progress(f"arcs: {[list(a) for a in orientation.arcs()]}")
    emit(args, "orientation", {"orientable": True, **orientation.to_dict()})
    return EXIT_OK


def _log_forest(forest, node, depth=0):
    logger.info(f"{'    ' * depth}{forest.nodes[node]['pocp']}")
    for child in sorted(forest.successors(node)):
        _log_forest(forest, child, depth + 1)


def command_analyze(args, config, pipeline) -> int:
    from forient.graph import nodes_from_mask
    from forient.solver import first_relaxation
    from forient.uncross import domination_forest, extract_strongly_crossfree_basis

    inst = read_instance(args.instance, config)
    system, solution = first_relaxation(
        inst,
        max_violations_per_round=int(config.get("solver.max_violations_per_round")),
        cap=int(config.get("caps.separation_max_nodes")),
        max_separation_rounds=int(config.get("solver.max_separation_rounds")),
    )
    family = extract_strongly_crossfree_basis(solution.values, system)
    forest = domination_forest(family)
    checks = family.check()
    fmt = _formatter(config)

    logger.progress(
        f"relaxation optimum {fmt(solution.objective)}, {len(family.coordinates)} fractional edges, "
        f"basis of {len(family)} rows"
    )
    for root in sorted(n for n in forest.nodes if forest.in_degree(n) == 0):
        _log_forest(forest, root)
    logger.progress(f"checks: {checks}")

    parents = {child: parent for parent, child in forest.edges}
    emit(
        args,
        "analysis",
        {
            "objective": solution.objective,
            "values": list(solution.values),
            "fractional": [int(j) for j in family.coordinates],
            "basis": [
                {
                    "index": i,
                    "kind": p.kind,
                    "parts": [nodes_from_mask(s) for s in p.parts],
                    "parent": parents.get(i),
                }
                for i, p in enumerate(family.members)
            ],
            "checks": checks,
        },
    )
    return EXIT_OK if all(checks.values()) else EXIT_CONTRACT


def command_gap(args, config, pipeline) -> int:
    from forient.gaplab import gap_report
    from forient.plotting import plot_gap

    n_min, n_max = int(config.get("gap.n_min")), int(config.get("gap.n_max"))
    if n_min > n_max:
        raise ValueError(f"--n-min {n_min} is larger than --n-max {n_max}")
    report = gap_report(
        range(n_min, n_max + 1),
        k=int(config.get("gap.k")),
        brute_force_cap=int(config.get("caps.gap_brute_force_max_n")),
        enumeration_cap=int(config.get("caps.enumeration_max_nodes")),
        vertex_cap=int(config.get("caps.gap_vertex_max_nodes")),
        reporter=pipeline,
    )
    pipeline.log_data("gap", report)
    pipeline.log_figure("gap", plot_gap(report))
    logger.progress("integrality gap:\n" + _format_frame(report, _formatter(config)).to_string(index=False))
    emit(args, "gap", report.to_dict(orient="records"))
    return EXIT_OK


def command_gen(args, config, pipeline) -> int:
    seed = int(config.get("general.seed"))
    rng = np.random.default_rng(seed)
    instances = [
        random_instance(rng, name=f"random_{seed}_{i}", **generator_kwargs(config))
        for i in range(args.count)
    ]
    if args.output is not None:
        os.makedirs(args.output, exist_ok=True)
        for inst in instances:
            inst.save(os.path.join(args.output, f"{inst.name}.json"))
    elif len(instances) == 1:
        print(instances[0].to_json())
    else:
        print(json.dumps([inst.to_dict() for inst in instances], indent=2))
    logger.progress(f"generated {len(instances)} instances with seed {seed}")
    return EXIT_OK


def command_bench(args, config, pipeline) -> int:
    from forient.oracle import benchmark
    from forient.plotting import plot_ratio_histogram

    kwargs = generator_kwargs(config)
    kwargs.pop("n_max")
    kwargs.pop("max_purchasable")
    solver = solver_kwargs(config)
    solver["emit_lp"] = False
    threshold = solver["threshold"]
    bench = benchmark(
        int(config.get("bench.count")),
        seed=int(config.get("general.seed")),
        n_max=int(config.get("bench.n_max")),
        max_purchasable=int(config.get("bench.max_purchasable")),
        solver_kwargs=solver,
        generator_kwargs=kwargs,
        node_cap=int(config.get("caps.oracle_max_nodes")),
        purchasable_cap=int(config.get("caps.oracle_max_purchasable")),
        reporter=pipeline,
    )
    pipeline.log_data("bench", bench)
    if len(bench):
        pipeline.log_figure("bench", plot_ratio_histogram(bench, bound=float(1 / threshold)))
    logger.progress("benchmark:\n" + _format_frame(bench, _formatter(config)).to_string(index=False))
    emit(args, "bench", bench.to_dict(orient="records"))
    above = [r for r in bench["ratio"] if r is not None and r > 1 / threshold]
    return EXIT_CONTRACT if above else EXIT_OK


COMMANDS = {
    "solve": command_solve,
    "certify": command_certify,
    "oracle": command_oracle,
    "orient": command_orient,
    "analyze": command_analyze,
    "gap": command_gap,
    "gen": command_gen,
    "bench": command_bench,
}


def run(argv: typing.Optional[typing.List[str]] = None) -> int:
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.version:
        print(f"{forient.__version__}")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE

    import matplotlib

    # no display for figures
    matplotlib.use("Agg")

    reporting.init_logging(args.output)
    try:
        config = parse_config(args)
        set_log_level(config.get("general.log_level", "INFO"))
        pipeline = reporting.output_pipeline(args.output, figures=bool(config.get("output.figures")))
        with pipeline:
            return COMMANDS[args.command](args, config, pipeline)
    except InstanceFormatError as e:
        logger.error(f"malformed input: {e}")
        return EXIT_USAGE
    except CapExceededError as e:
        logger.error(str(e))
        return EXIT_CAP
    except InfeasibleError as e:
        logger.error(str(e))
        return EXIT_INFEASIBLE
    except ContractError as e:
        import traceback

        logger.info(traceback.format_exc())
        logger.error(f"internal contract violated: {e}")
        return EXIT_CONTRACT
    except (ValueError, KeyError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(run())
