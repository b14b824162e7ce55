"""Command-line interface: plan, collab, bench, oracle, serve."""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import numpy as np

from .policy import (
    CostParams,
    brute_force_value,
    exhaustive_value,
    policy_to_json,
    random_instance,
    solve_policy,
)
from .search import (
    NoPathUnderAnyHypothesis,
    build_decision_tree,
    catalog_to_json,
    plan_with_hypotheses,
)
from .service import SessionServer
from .sim import run_mode1_episode, run_mode2_episode, scripted_human_for, ScriptedHuman
from .suite import data_path, render_report, run_suite, save_report
from .world import load_scenario, rasterize


def _resolve_scenario(path: str) -> str:
    import os
    if os.path.exists(path):
        return path
    bundled = data_path(path)
    if os.path.exists(bundled):
        return bundled
    return path  # let load_scenario raise with the original name


def cmd_plan(args) -> int:
    scene = load_scenario(_resolve_scenario(args.scenario))
    gt = None
    if args.ground_truth:
        with open(args.ground_truth) as f:
            gt = json.load(f)
    try:
        result = run_mode1_episode(scene, args.policy, ground_truth=gt)
    except NoPathUnderAnyHypothesis as e:
        print(f"planning failed: {e}", file=sys.stderr)
        return 1
    for entry in result.transcript:
        if entry[0] == "query_traversability":
            _, ids, answers = entry
            rendered = ", ".join(f"{oid}={'passable' if answers[oid] else 'blocked'}"
                                 for oid in ids)
            print(f"query: {', '.join(ids)} -> {rendered}")
        elif entry[0] == "leg":
            print(f"leg {entry[1]}: cost {entry[2]:.3f} m")
    if result.targets:
        print(f"targets: {', '.join(result.targets)}")
    print(f"outcome: {result.outcome}"
          + (f" ({result.reason})" if result.reason else ""))
    print(f"query events: {result.query_events}, objects verified: "
          f"{result.objects_verified}, interaction cost: {result.accrued_cost:.1f}")
    print("waypoints: " + json.dumps([list(p) for p in result.waypoints],
                                     separators=(",", ":")))
    if args.dump_tree:
        dumps = []
        position = scene.start
        raster = rasterize(scene)
        goals = [scene.goal]
        if result.targets:
            from .sim import _goal_point
            goals = [_goal_point(scene, raster, oid) for oid in result.targets]
        for goal in goals:
            catalog = plan_with_hypotheses(scene, start=position, goal=goal)
            tree = build_decision_tree(catalog)
            dumps.append(catalog_to_json(catalog, tree))
            position = goal
        with open(args.dump_tree, "w") as f:
            json.dump(dumps if len(dumps) > 1 else dumps[0], f, indent=2)
        print(f"decision tree written to {args.dump_tree}")
    if args.out:
        with open(args.out, "w") as f:
            json.dump({
                "outcome": result.outcome,
                "targets": list(result.targets),
                "waypoints": [list(p) for p in result.waypoints],
                "query_events": result.query_events,
                "objects_verified": result.objects_verified,
                "accrued_cost": result.accrued_cost,
                "path_cost": result.path_cost,
            }, f, indent=2)
    return 0 if result.success else 1


def cmd_collab(args) -> int:
    scene = load_scenario(_resolve_scenario(args.layout))
    if args.human.endswith(".json"):
        with open(args.human) as f:
            spec = json.load(f)
        human = ScriptedHuman(plan=tuple(spec["plan"]),
                              speed=float(spec.get("speed", 1.0)),
                              behavior=spec.get("behavior", "rational"),
                              heading_noise=float(spec.get("heading_noise", 0.0)))
    else:
        human = scripted_human_for(scene, args.human)
    log, metrics = run_mode2_episode(scene, human, robot_policy=args.policy,
                                     seed=args.seed)
    print(f"outcome: {metrics.outcome}")
    print(f"time: {metrics.time:.2f} s, total dist: {metrics.total_dist:.2f} m "
          f"(human {metrics.human_dist:.2f}, robot {metrics.robot_dist:.2f})")
    print(f"avg true-target prob: {metrics.avg_true_target_prob:.3f}, "
          f"top-1 accuracy: {metrics.top1_accuracy:.3f}")
    if args.log:
        with open(args.log, "w") as f:
            for rec in log.ticks:
                f.write(json.dumps({
                    "t": round(rec.t, 6), "human": list(rec.human),
                    "robot": list(rec.robot), "belief": rec.belief,
                    "target": rec.decision_target, "mode": rec.decision_mode,
                    "completions": list(rec.completions),
                }) + "\n")
    if args.out:
        with open(args.out, "w") as f:
            json.dump({
                "outcome": metrics.outcome, "time": metrics.time,
                "total_dist": metrics.total_dist, "human_dist": metrics.human_dist,
                "robot_dist": metrics.robot_dist,
                "avg_true_target_prob": metrics.avg_true_target_prob,
                "top1_accuracy": metrics.top1_accuracy,
                "expected_remaining_dist": list(metrics.expected_remaining_dist),
            }, f, indent=2)
    return 0 if metrics.outcome == "completed" else 1


def cmd_bench(args) -> int:
    report = run_suite(args.suite, seed=args.seed)
    print(render_report(report))
    if args.out:
        save_report(report, args.out)
        print(f"\nreport written to {args.out}")
    return 0


def cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed)
    matches = 0
    for _ in range(args.trials):
        tree, priors, costs = random_instance(rng, max_n=args.max_n)
        dp = solve_policy(tree, priors, costs).root_value
        bf = brute_force_value(tree, priors, costs)
        if abs(dp - bf) <= 1e-12 and dp <= exhaustive_value(tree, costs) + 1e-12:
            matches += 1
    print(f"{matches}/{args.trials} match")
    return 0 if matches == args.trials else 1


def cmd_policy_table(args) -> int:
    scene = load_scenario(_resolve_scenario(args.scenario))
    catalog = plan_with_hypotheses(scene)
    tree = build_decision_tree(catalog)
    priors = {o.id: o.prior for o in scene.uncertain_objects
              if o.id in tree.relevant_ids}
    policy = solve_policy(tree, priors, CostParams(lambda1=args.lambda1,
                                                   lambda2=args.lambda2))
    doc = policy_to_json(policy)
    if args.out:
        with open(args.out, "w") as f:
            json.dump(doc, f, indent=2)
    else:
        json.dump(doc, sys.stdout, indent=2)
        print()
    return 0


def cmd_serve(args) -> int:
    scene = load_scenario(_resolve_scenario(args.scenario))
    server = SessionServer(scene, args.mode, tick_dt=args.dt,
                           robot_policy=args.policy, log_path=args.log)
    print(f"serving {args.mode} session on {args.host}:{args.port} "
          f"(NDJSON or WebSocket)")
    try:
        asyncio.run(server.serve_forever(args.host, args.port))
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointplan",
        description="Human-robot joint planning: querying under uncertainty "
                    "and intent-aware collaboration.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run one instructed-planning scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", choices=["optimal", "exhaustive", "none"],
                   default="optimal")
    p.add_argument("--ground-truth", help="JSON file {object_id: passable bool}")
    p.add_argument("--dump-tree", metavar="PATH",
                   help="write the candidate catalog + decision tree as JSON")
    p.add_argument("--out", help="write the result summary as JSON")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("collab", help="run one collaboration episode")
    p.add_argument("--layout", required=True)
    p.add_argument("--human", default="rational_a",
                   help="rational_a | rational_b | ambiguous | script.json")
    p.add_argument("--policy", choices=["intent", "nearest"], default="intent")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", help="write the per-tick episode log (JSON lines)")
    p.add_argument("--out", help="write metrics as JSON")
    p.set_defaults(func=cmd_collab)

    p = sub.add_parser("bench", help="run a bundled or user suite")
    p.add_argument("--suite", required=True, help="mode1 | mode2 | suite.json path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write the machine-readable report")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="cross-check the DP against brute force")
    p.add_argument("--max-n", type=int, default=3)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("policy-table", help="export the query policy tables")
    p.add_argument("--scenario", required=True)
    p.add_argument("--lambda1", type=float, default=10.0)
    p.add_argument("--lambda2", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_policy_table)

    p = sub.add_parser("serve", help="host live sessions over TCP/WebSocket")
    p.add_argument("--scenario", required=True)
    p.add_argument("--mode", choices=["mode1", "mode2"], required=True)
    p.add_argument("--policy", choices=["intent", "nearest"], default="intent")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--log", help="append all session messages to this JSONL file")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
