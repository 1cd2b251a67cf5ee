"""Command-line entry point wiring files, parameters, and pipelines.

Subcommands: demo-gen, learn, recognize, predict, optimize-topology,
asr-sim, bench, report.  Numeric parameters resolve flag > environment
variable (prefix ISM_) > config file > built-in default.  Exit codes:
0 success, 2 bad arguments, 3 file/parse error, 4 domain error; failures
emit a one-line JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import serialize
from .core import RecognitionParams
from .errors import IsmError
from .harness.asr import AsrParams, run_asr_simulation
from .harness.datasets import ScenarioSpec, generate_demonstration, generate_perturbed_test_set
from .harness.metrics import bench_prediction, bench_recognition, optimize_topology
from .prediction import compute_shortest_paths, generate_cloud_of_pose_predictions
from .topology import TopologySearchParams, complete_topology, star_topology
from .tree import learn_tree_from_topology, recognize_scene

_ENV_PREFIX = "ISM_"


class CliUsageError(Exception):
    """Arguments are structurally invalid for the chosen subcommand."""

_PARAM_DEFAULTS = {
    "bin_size": 0.1,
    "tau_pos": 0.1,
    "tau_rot": 30.0,
    "keep_threshold": 0.5,
    "eps_r": 0.6,
    "max_results": 32,
    "seed": 0,
}

_PARAM_TYPES = {
    "bin_size": float,
    "tau_pos": float,
    "tau_rot": float,
    "keep_threshold": float,
    "eps_r": float,
    "max_results": int,
    "seed": int,
}


def _resolve_param(name: str, flag_value, config: dict):
    if flag_value is not None:
        return flag_value
    env_value = os.environ.get(_ENV_PREFIX + name.upper())
    cast = _PARAM_TYPES[name]
    if env_value is not None:
        return cast(env_value)
    if name in config:
        return cast(config[name])
    return _PARAM_DEFAULTS[name]


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _recognition_params(args, config: dict) -> RecognitionParams:
    return RecognitionParams(
        bin_size=_resolve_param("bin_size", args.bin_size, config),
        tau_pos=_resolve_param("tau_pos", args.tau_pos, config),
        tau_rot=_resolve_param("tau_rot", args.tau_rot, config),
        result_keep_threshold=_resolve_param("keep_threshold", args.keep_threshold, config),
        eps_r=_resolve_param("eps_r", args.eps_r, config),
        max_results_per_ism=_resolve_param("max_results", args.max_results, config),
    )


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="optional JSON config file with parameter defaults")
    parser.add_argument("--bin-size", type=float, dest="bin_size")
    parser.add_argument("--tau-pos", type=float, dest="tau_pos")
    parser.add_argument("--tau-rot", type=float, dest="tau_rot")
    parser.add_argument("--keep-threshold", type=float, dest="keep_threshold")
    parser.add_argument("--eps-r", type=float, dest="eps_r")
    parser.add_argument("--max-results", type=int, dest="max_results")
    parser.add_argument("--seed", type=int, dest="seed")


def _parse_grid(text: str) -> list:
    """Parse 'n=3..10;l=25,100,400' into a list of (n, l) cells."""

    def parse_values(spec: str) -> list:
        values = []
        for part in spec.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                values.extend(range(int(lo), int(hi) + 1))
            else:
                values.append(int(part))
        return values

    axes = {}
    for chunk in text.split(";"):
        key, _, spec = chunk.partition("=")
        axes[key.strip()] = parse_values(spec)
    if set(axes) != {"n", "l"}:
        raise ValueError(f"grid must define n and l, got {sorted(axes)}")
    return [(n, l) for n in axes["n"] for l in axes["l"]]


def _resolve_topology(flag: str, dataset, params, args, config):
    if flag == "star":
        return star_topology(dataset.object_ids())
    if flag == "complete":
        return complete_topology(dataset.object_ids())
    if flag == "optimized":
        seed = _resolve_param("seed", args.seed, config)
        test_set = generate_perturbed_test_set(
            dataset,
            "mixed",
            magnitude=2.0 * params.tau_pos,
            count=args.test_count,
            seed=seed,
        )
        search = TopologySearchParams(max_rounds=args.iterations, lambda_fp=args.lambda_fp)
        return optimize_topology(dataset, test_set, params, search)
    if flag.startswith("file:"):
        return serialize.load_topology(flag[len("file:"):])
    raise ValueError(f"unknown topology {flag!r}; use star|complete|optimized|file:<path>")


def _cmd_demo_gen(args) -> int:
    if args.scenario:
        spec = serialize.load_scenario(args.scenario)
    else:
        spec = ScenarioSpec(
            object_count=args.objects,
            trajectory_length=args.length,
            motion=args.motion.replace("-", "_"),
            jitter_sigma=args.jitter_sigma,
            jitter_rot_sigma_deg=args.jitter_rot_sigma,
            workspace=args.workspace,
            group_count=args.groups,
            seed=args.seed if args.seed is not None else 0,
        )
    dataset = generate_demonstration(spec)
    serialize.save_dataset(args.out, dataset)
    print(f"wrote demonstration with {len(dataset.trajectories)} objects, length {dataset.length} to {args.out}")
    return 0


def _cmd_learn(args) -> int:
    config = _load_config(args.config)
    params = _recognition_params(args, config)
    dataset = serialize.load_dataset(args.dataset)
    topology = _resolve_topology(args.topology, dataset, params, args, config)
    tree = learn_tree_from_topology(dataset, topology)
    serialize.save_tree(args.out, tree)
    print(
        f"learned tree '{tree.category_label}' with {len(tree.isms)} ISMs "
        f"({tree.height + 1} levels) from {len(topology.relations)} relations to {args.out}"
    )
    return 0


def _cmd_recognize(args) -> int:
    config = _load_config(args.config)
    params = _recognition_params(args, config)
    tree = serialize.load_tree(args.tree)
    states = serialize.load_configuration(args.input)
    instances = recognize_scene(states, tree, params)
    if args.out:
        serialize.save_report(args.out, instances, tree.category_label)
    if instances:
        for i, instance in enumerate(instances):
            print(f"instance {i}: confidence {instance.confidence:.2f}")
    else:
        print("no instances")
    return 0


def _cmd_predict(args) -> int:
    config = _load_config(args.config)
    params = _recognition_params(args, config)
    tree = serialize.load_tree(args.tree)
    states = serialize.load_configuration(args.input)
    instances = recognize_scene(states, tree, params)
    if not instances:
        raise IsmError("no scene instance recognized; nothing to predict from")
    paths = compute_shortest_paths(tree)
    rng = np.random.default_rng(_resolve_param("seed", args.seed, config))
    cloud = generate_cloud_of_pose_predictions(instances[0], paths, args.n_p, tree, rng)
    serialize.save_cloud(args.out, cloud)
    print(f"predicted {args.n_p} poses for each of {len(cloud)} missing objects to {args.out}")
    return 0


def _cmd_optimize_topology(args) -> int:
    config = _load_config(args.config)
    params = _recognition_params(args, config)
    dataset = serialize.load_dataset(args.dataset)
    seed = _resolve_param("seed", args.seed, config)
    test_set = generate_perturbed_test_set(
        dataset, "mixed", magnitude=2.0 * params.tau_pos, count=args.test_count, seed=seed
    )
    search = TopologySearchParams(max_rounds=args.iterations, lambda_fp=args.lambda_fp)
    topology = optimize_topology(dataset, test_set, params, search)
    serialize.save_topology(args.out, topology)
    print(f"optimized topology with {len(topology.relations)} relations to {args.out}")
    return 0


def _cmd_asr_sim(args) -> int:
    if args.replay:
        for record in serialize.load_asr_log_lines(args.replay):
            if "summary" in record:
                summary = record["summary"]
                print(f"adopted views: {summary['adopted_views']}")
                print(f"found: {', '.join(summary['found'])}")
                for label, confidence in summary["instances"].items():
                    print(f"instance {label}: confidence {confidence:.2f}")
            else:
                view = record["view"]
                at = f"({view[0]:.2f}, {view[1]:.2f}, {view[2]:.0f}deg)" if view else "-"
                print(f"{record['state']:24s} view {at:28s} detected {record['detected']}")
        return 0

    if not args.world or not args.tree:
        raise CliUsageError("asr-sim needs --world and at least one --tree (or --replay)")
    config = _load_config(args.config)
    params = _recognition_params(args, config)
    world = serialize.load_world(args.world)
    trees = [serialize.load_tree(path) for path in args.tree]
    informed = []
    if args.informed_from:
        dataset = serialize.load_dataset(args.informed_from)
        for oid in dataset.object_ids():
            informed.extend(p.position for p in dataset.trajectories[oid].poses[:1])
    boxes = [tuple(zip(box[0::2], box[1::2])) for box in (args.box or [])]
    asr_params = AsrParams(
        recognition=RecognitionParams(
            bin_size=params.bin_size,
            tau_pos=params.tau_pos,
            tau_rot=params.tau_rot,
            result_keep_threshold=min(params.result_keep_threshold, 0.05),
            eps_r=min(params.eps_r, 0.1),
            max_results_per_ism=params.max_results_per_ism,
        ),
        mode=args.mode,
        n_predictions=args.n_p,
        informed_positions=informed,
        bounding_boxes=boxes,
        seed=_resolve_param("seed", args.seed, config),
    )
    log = run_asr_simulation(world, trees, asr_params)
    if args.out:
        serialize.save_asr_log(args.out, log)
    print(f"adopted {log.adopted_views} views, found {len(log.found_ids)} objects")
    for label, instance in sorted(log.final_instances.items()):
        print(f"instance {label}: confidence {instance.confidence:.2f}")
    return 0


def _cmd_bench(args) -> int:
    grid = _parse_grid(args.grid)
    if args.kind == "recognition":
        rows = bench_recognition(grid, repeats=args.repeats)
    else:
        rows = bench_prediction(grid, n_predictions=args.n_p, repeats=args.repeats)
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["n", "l", "mean_s", "std_s"])
        for row in rows:
            writer.writerow([row.object_count, row.trajectory_length, f"{row.mean_s:.6f}", f"{row.std_s:.6f}"])
    print(f"wrote {len(rows)} benchmark rows to {args.out}")
    return 0


def _cmd_report(args) -> int:
    doc = serialize.load_report(args.report)
    print(f"category: {doc['category']}")
    for i, instance in enumerate(doc["instances"]):
        print(f"instance {i}: confidence {instance['confidence']:.2f}")
        for result in instance["results"]:
            print(f"  ISM {result['ism']}")
            header = f"    {'Object':24s} {'Simil.':>7s} {'Pos.':>6s} {'Orient.':>8s}"
            print(header)
            for p in result["participants"]:
                name = f"{p['class']}/{p['instance']}"
                print(
                    f"    {name:24s} {p['similarity']:7.2f} {p['position']:6.2f} {p['orientation']:8.2f}"
                )
            print(f"    {'Obj. Function':24s} {result['objective']:7.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ismtrees",
        description="Learn, recognize, and predict scene categories from object trajectories.",
        epilog=(
            "Numeric parameters can also be set via environment variables: "
            "ISM_BIN_SIZE, ISM_TAU_POS, ISM_TAU_ROT, ISM_KEEP_THRESHOLD, "
            "ISM_EPS_R, ISM_MAX_RESULTS, ISM_SEED."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-gen", help="generate a synthetic demonstration dataset")
    p.add_argument("--scenario", help="scenario spec JSON (overrides the flags below)")
    p.add_argument("--objects", type=int, default=4)
    p.add_argument("--length", type=int, default=10)
    p.add_argument("--motion", choices=["static", "jitter", "rigid-groups"], default="jitter")
    p.add_argument("--jitter-sigma", type=float, default=0.01)
    p.add_argument("--jitter-rot-sigma", type=float, default=1.0)
    p.add_argument("--workspace", type=float, default=1.0)
    p.add_argument("--groups", type=int, default=2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_demo_gen)

    p = sub.add_parser("learn", help="learn a scene-category tree from a demonstration")
    p.add_argument("--dataset", required=True)
    p.add_argument("--topology", default="star", help="star|complete|optimized|file:<path>")
    p.add_argument("--iterations", type=int, default=5, help="search rounds for --topology optimized")
    p.add_argument("--lambda-fp", type=float, default=1.0, dest="lambda_fp")
    p.add_argument("--test-count", type=int, default=40, dest="test_count")
    p.add_argument("--out", required=True)
    _add_param_flags(p)
    p.set_defaults(func=_cmd_learn)

    p = sub.add_parser("recognize", help="recognize scene instances in a configuration")
    p.add_argument("--tree", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_recognize)

    p = sub.add_parser("predict", help="predict poses of missing objects")
    p.add_argument("--tree", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--n-p", type=int, default=100, dest="n_p")
    p.add_argument("--out", required=True)
    _add_param_flags(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("optimize-topology", help="search a relation topology")
    p.add_argument("--dataset", required=True)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--lambda-fp", type=float, default=1.0, dest="lambda_fp")
    p.add_argument("--test-count", type=int, default=40, dest="test_count")
    p.add_argument("--out", required=True)
    _add_param_flags(p)
    p.set_defaults(func=_cmd_optimize_topology)

    p = sub.add_parser("asr-sim", help="run the active-search simulation")
    p.add_argument("--world")
    p.add_argument("--tree", action="append", default=[])
    p.add_argument("--mode", choices=["full", "sweep_only", "bbox"], default="full")
    p.add_argument("--n-p", type=int, default=50, dest="n_p")
    p.add_argument("--informed-from", dest="informed_from", help="dataset JSON for informed views")
    p.add_argument(
        "--box",
        action="append",
        type=lambda s: [float(v) for v in s.split(",")],
        help="bounding box x0,x1,y0,y1,z0,z1 for bbox mode (repeatable)",
    )
    p.add_argument("--replay", help="render a stored log instead of running")
    p.add_argument("--out")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_asr_sim)

    p = sub.add_parser("bench", help="runtime benchmarks")
    p.add_argument("--kind", choices=["recognition", "prediction"], default="recognition")
    p.add_argument("--grid", default="n=3..6;l=25", help="e.g. n=3..10;l=25,100,400")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--n-p", type=int, default=100, dest="n_p")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("report", help="render a recognition report as a table")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def _error_record(exc: Exception) -> str:
    return json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}})


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliUsageError as exc:
        print(_error_record(exc), file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, serialize.FileFormatError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return 3
    except (IsmError, ValueError, TypeError, KeyError) as exc:
        print(_error_record(exc), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
