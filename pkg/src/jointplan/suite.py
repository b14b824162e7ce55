"""Batch suite runner: per-method tables with mean and standard error.

Suites are JSON index files referencing scenario files (bundled or user
supplied). Reports are deterministic for a given seed and serialize to both
machine-readable JSON and a plain-text table.
"""

from __future__ import annotations

import json
import math
import os
from importlib import resources

import numpy as np

from .intent import IntentParams
from .sim import run_mode1_episode, run_mode2_episode, scripted_human_for
from .world import load_scenario


def data_path(relpath: str) -> str:
    """Absolute path of a bundled data file."""
    return str(resources.files("jointplan").joinpath("data", relpath))


def _resolve(path: str, base_dir: str | None) -> str:
    if os.path.isabs(path) or os.path.exists(path):
        return path
    if base_dir and os.path.exists(os.path.join(base_dir, path)):
        return os.path.join(base_dir, path)
    bundled = data_path(path)
    if os.path.exists(bundled):
        return bundled
    raise FileNotFoundError(f"scenario file '{path}' not found")


def load_suite(path: str) -> tuple[dict, str]:
    """Load a suite spec; bundled aliases "mode1"/"mode2" are accepted."""
    if path in ("mode1", "mode2"):
        path = data_path(os.path.join(path, "suite.json"))
    with open(path) as f:
        return json.load(f), os.path.dirname(os.path.abspath(path))


def _num(value: float):
    """Round for reports; NaN becomes None so reports stay strict JSON."""
    return None if math.isnan(value) else round(value, 6)


def mean_se(values) -> tuple[float, float]:
    xs = [float(v) for v in values
          if v is not None and not math.isnan(float(v))]
    if not xs:
        return float("nan"), float("nan")
    mean = sum(xs) / len(xs)
    if len(xs) < 2:
        return mean, 0.0
    var = sum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
    return mean, math.sqrt(var / len(xs))


def run_mode1_suite(suite: dict, base_dir: str | None = None) -> dict:
    strategies = suite.get("strategies", ["optimal", "exhaustive", "none"])
    rows = []
    for rel in suite["scenarios"]:
        scene = load_scenario(_resolve(rel, base_dir))
        name = os.path.splitext(os.path.basename(rel))[0]
        for strategy in strategies:
            result = run_mode1_episode(scene, strategy)
            rows.append({
                "scenario": name,
                "strategy": strategy,
                "outcome": result.outcome,
                "success": result.success,
                "query_events": result.query_events,
                "objects_verified": result.objects_verified,
                "target_queries": result.target_queries,
                "path_cost": round(result.path_cost, 6),
                "accrued_cost": round(result.accrued_cost, 6),
            })
    summary = {}
    for strategy in strategies:
        mine = [r for r in rows if r["strategy"] == strategy]
        ev_m, ev_se = mean_se([r["query_events"] for r in mine])
        ob_m, ob_se = mean_se([r["objects_verified"] for r in mine])
        summary[strategy] = {
            "episodes": len(mine),
            "success_rate": sum(r["success"] for r in mine) / len(mine),
            "query_events_mean": ev_m, "query_events_se": ev_se,
            "objects_verified_mean": ob_m, "objects_verified_se": ob_se,
        }
    return {"mode": "mode1", "summary": summary, "episodes": rows,
            "simple": suite.get("simple", []), "complex": suite.get("complex", [])}


def run_mode2_suite(suite: dict, base_dir: str | None = None,
                    seed: int | None = None) -> dict:
    behaviors = suite.get("behaviors", ["rational_a", "rational_b", "ambiguous"])
    policies = suite.get("policies", ["intent", "nearest"])
    seeds = suite.get("seeds", [101, 202])
    if seed is not None:
        seeds = [seed + k for k in range(len(seeds))]
    rows = []
    curves = {}
    for li, rel in enumerate(suite["layouts"]):
        scene = load_scenario(_resolve(rel, base_dir))
        name = os.path.splitext(os.path.basename(rel))[0]
        for bi, behavior in enumerate(behaviors):
            for base_seed in seeds:
                episode_seed = int(np.random.SeedSequence(
                    [base_seed, li, bi]).generate_state(1)[0])
                for policy in policies:
                    human = scripted_human_for(scene, behavior)
                    log, metrics = run_mode2_episode(
                        scene, human, robot_policy=policy,
                        intent_params=IntentParams(), seed=episode_seed)
                    rows.append({
                        "layout": name, "behavior": behavior, "policy": policy,
                        "seed": base_seed, "outcome": metrics.outcome,
                        "time": round(metrics.time, 6),
                        "total_dist": round(metrics.total_dist, 6),
                        "human_dist": round(metrics.human_dist, 6),
                        "robot_dist": round(metrics.robot_dist, 6),
                        "avg_true_target_prob": _num(metrics.avg_true_target_prob),
                        "top1_accuracy": _num(metrics.top1_accuracy),
                    })
                    curves.setdefault(policy, []).append(
                        [round(v, 6) for v in metrics.expected_remaining_dist])
    summary = {}
    for policy in policies:
        mine = [r for r in rows if r["policy"] == policy]
        entry = {"episodes": len(mine),
                 "completed": sum(r["outcome"] == "completed" for r in mine)}
        for key in ("time", "total_dist", "human_dist"):
            m, se = mean_se([r[key] for r in mine])
            entry[f"{key}_mean"] = m
            entry[f"{key}_se"] = se
        summary[policy] = entry
    intent_rows = [r for r in rows if r["policy"] == "intent"]
    intent_metrics = {}
    for label, match in (("rational", lambda b: b.startswith("rational")),
                         ("ambiguous", lambda b: b == "ambiguous"),
                         ("overall", lambda b: True)):
        subset = [r for r in intent_rows if match(r["behavior"])]
        pm, pse = mean_se([r["avg_true_target_prob"] for r in subset])
        am, ase = mean_se([r["top1_accuracy"] for r in subset])
        intent_metrics[label] = {"avg_true_target_prob_mean": pm,
                                 "avg_true_target_prob_se": pse,
                                 "top1_accuracy_mean": am,
                                 "top1_accuracy_se": ase}
    return {"mode": "mode2", "summary": summary, "intent_metrics": intent_metrics,
            "episodes": rows, "curves": curves}


def run_suite(path: str, seed: int | None = None) -> dict:
    suite, base_dir = load_suite(path)
    if suite.get("mode") == "mode2":
        return run_mode2_suite(suite, base_dir, seed=seed)
    return run_mode1_suite(suite, base_dir)


def render_report(report: dict) -> str:
    """Plain-text tables from a suite report."""
    lines = []
    if report["mode"] == "mode1":
        lines.append(f"{'strategy':<12} {'success':>8} {'events':>14} {'objects':>14}")
        for strategy, s in report["summary"].items():
            lines.append(
                f"{strategy:<12} {s['success_rate'] * 100:7.1f}% "
                f"{s['query_events_mean']:6.2f} ± {s['query_events_se']:<5.2f} "
                f"{s['objects_verified_mean']:6.2f} ± {s['objects_verified_se']:<5.2f}")
    else:
        lines.append(f"{'policy':<10} {'time (s)':>16} {'total dist (m)':>18} "
                     f"{'human dist (m)':>18}")
        for policy, s in report["summary"].items():
            lines.append(
                f"{policy:<10} {s['time_mean']:7.2f} ± {s['time_se']:<5.2f} "
                f"{s['total_dist_mean']:9.2f} ± {s['total_dist_se']:<5.2f} "
                f"{s['human_dist_mean']:9.2f} ± {s['human_dist_se']:<5.2f}")
        lines.append("")
        lines.append(f"{'intent metric':<16} {'rational':>16} {'ambiguous':>16} "
                     f"{'overall':>16}")
        im = report["intent_metrics"]
        for key, label in (("avg_true_target_prob", "true-target prob"),
                           ("top1_accuracy", "top-1 accuracy")):
            cells = [
                f"{im[b][key + '_mean'] * 100:5.1f}% ± {im[b][key + '_se'] * 100:4.1f}%"
                for b in ("rational", "ambiguous", "overall")]
            lines.append(f"{label:<16} {cells[0]:>16} {cells[1]:>16} {cells[2]:>16}")
    return "\n".join(lines)


def save_report(report: dict, path: str) -> None:
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
