"""
Acceptance runner - runs the scenarios in tasks/*.yaml and scores them.

    python -m eval.run_eval                    # every task file
    python -m eval.run_eval tasks/ml_gap.yaml  # just one
    python -m eval.run_eval --code-map codes/ldpc_96_48.alist=96.33.964.alist
"""

import argparse
import json
import logging
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from eqml.config import RunConfig, build_run_config, setup_logging
from eqml.harness import diagnose_flips, flip_means, run_sweep
from eqml.oracle import oracle_compare
from eval.scoring import (
    check_event_agreement,
    check_fer_ratio,
    check_flip_shape,
    check_i_avg_ratio,
    check_ml_gap,
    check_ml_optimal,
    summarize,
)

logger = logging.getLogger(__name__)


class EvalRunner:
    """Runs acceptance scenarios in-process"""

    def __init__(self, results_dir: str = "results", progress: bool = True, code_map: Optional[Dict[str, str]] = None):
        self.results_dir = Path(results_dir)
        self.results_dir.mkdir(exist_ok=True)
        self.progress = progress
        # fixture path -> replacement alist, e.g. the published (96,48) file
        self.code_map = dict(code_map or {})

    def load_tasks(self, task_file: str) -> List[Dict[str, Any]]:
        with open(task_file, "r") as f:
            data = yaml.safe_load(f) or {}
            return data.get("tasks", [])

    def _swap_code(self, cfg: RunConfig) -> RunConfig:
        if cfg.code in self.code_map:
            return cfg.model_copy(update={"code": self.code_map[cfg.code]})
        return cfg

    def arm_config(self, task: Dict[str, Any], arm: str) -> RunConfig:
        return self._swap_code(build_run_config(task.get("base", {}), **task["arms"][arm]))

    # -- one method per scenario kind ---------------------------------------

    def _sweep_arms(self, task: Dict[str, Any]) -> Dict[str, list]:
        return {arm: run_sweep(self.arm_config(task, arm), progress=self.progress) for arm in task["arms"]}

    def eval_fer_ratio(self, task: Dict[str, Any]) -> Dict[str, Any]:
        expect = task["expect"]
        sweeps = self._sweep_arms(task)
        points = []
        for test, ref in zip(sweeps[expect["arm"]], sweeps[expect["reference"]]):
            check = check_fer_ratio(test.fer, ref.fer, expect["max_ratio"])
            check.update(ebn0_db=test.ebn0_db, frames=test.frames, reference_frames=ref.frames)
            points.append(check)
        return {"points": points, "passed": all(p["passed"] for p in points)}

    def eval_i_avg_ratio(self, task: Dict[str, Any]) -> Dict[str, Any]:
        expect = task["expect"]
        sweeps = self._sweep_arms(task)
        points = []
        for test, ref in zip(sweeps[expect["arm"]], sweeps[expect["reference"]]):
            check = check_i_avg_ratio(test.i_avg, ref.i_avg, expect["max_ratio"], test.fer, ref.fer, expect["max_fer_ratio"])
            check.update(ebn0_db=test.ebn0_db, frames=test.frames)
            points.append(check)
        return {"points": points, "passed": all(p["passed"] for p in points)}

    def eval_ml_gap(self, task: Dict[str, Any]) -> Dict[str, Any]:
        expect = task["expect"]
        points = []
        for arm in task["arms"]:
            for stats in oracle_compare(self.arm_config(task, arm), progress=self.progress):
                optimal = check_ml_optimal(stats.fer_ml, stats.fer_decoder, stats.paired_sigma)
                entry = {"arm": arm, "ebn0_db": stats.ebn0_db, "frames": stats.frames, "optimal": optimal}
                passed = optimal["passed"]
                if arm == expect["arm"]:
                    gap = check_ml_gap(stats.fer_decoder, stats.fer_ml, expect["max_ratio"])
                    entry["gap"] = gap
                    passed = passed and gap["passed"]
                    if "min_event_agreement" in expect:
                        agreement = check_event_agreement(stats.event_agreement_rate, stats.error_events, expect["min_event_agreement"])
                        entry["agreement"] = agreement
                        passed = passed and agreement["passed"]
                entry["passed"] = passed
                points.append(entry)
        return {"points": points, "passed": all(p["passed"] for p in points)}

    def eval_flip_shape(self, task: Dict[str, Any]) -> Dict[str, Any]:
        expect = task.get("expect", {})
        cfg = self._swap_code(build_run_config(task.get("base", {})))
        traces = diagnose_flips(cfg, task.get("frames", 1000), progress=self.progress)
        means = flip_means(traces)
        check = check_flip_shape(
            means.get("converged", []),
            means.get("failed", []),
            window=expect.get("window", 10),
            max_rel_variation=expect.get("max_rel_variation", 0.2),
        )
        check["populations"] = {k: sum(1 for t in traces if t.outcome == k) for k in ("converged", "failed")}
        return check

    KINDS = {
        "fer_ratio": eval_fer_ratio,
        "i_avg_ratio": eval_i_avg_ratio,
        "ml_gap": eval_ml_gap,
        "flip_shape": eval_flip_shape,
    }

    def evaluate_task(self, task: Dict[str, Any]) -> Dict[str, Any]:
        task_id = task.get("id", "unknown")
        kind = task.get("kind", "")

        print(f"\n{'=' * 60}")
        print(f"Task: {task_id} ({kind})")
        if task.get("description"):
            print(task["description"])

        if kind not in self.KINDS:
            print(f"✗ FAIL unknown kind {kind!r}")
            return {"task_id": task_id, "kind": kind, "passed": False, "error": f"unknown kind {kind!r}"}

        started = time.time()
        try:
            result = self.KINDS[kind](self, task)
        except ValueError as e:
            logger.error("task %s failed to run: %s", task_id, e)
            result = {"passed": False, "error": str(e)}
        elapsed = time.time() - started

        for point in result.get("points", []):
            print(f"  {json.dumps(point, default=str)}")
        print(f"Elapsed: {elapsed:.1f}s")
        print(f"Result: {'✓ PASS' if result['passed'] else '✗ FAIL'}")
        return {"task_id": task_id, "kind": kind, "elapsed_s": elapsed, **result}

    def run_eval_suite(self, task_files: List[str]) -> Dict[str, Any]:
        all_results = []

        print("\n" + "=" * 60)
        print("🧪 EQML ACCEPTANCE RUN")
        print("=" * 60)

        for task_file in task_files:
            print(f"\nLoading tasks from: {task_file}")
            for task in self.load_tasks(task_file):
                all_results.append(self.evaluate_task(task))

        summary = {"timestamp": datetime.now().isoformat(), **summarize(all_results), "results": all_results}

        print("\n" + "=" * 60)
        print("📊 ACCEPTANCE SUMMARY")
        print("=" * 60)
        print(f"Total Tasks: {summary['total_tasks']}")
        print(f"Passed: {summary['passed']} ({summary['pass_rate']:.1%})")
        print(f"Failed: {summary['failed']}")
        print("=" * 60)

        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        results_file = self.results_dir / f"eval_results_{timestamp}.json"
        with open(results_file, "w") as f:
            json.dump(summary, f, indent=2, default=str)

        print(f"\n✅ Results saved to: {results_file}")
        return summary


def parse_code_map(pairs: List[str]) -> Dict[str, str]:
    code_map = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"--code-map expects FIXTURE=REPLACEMENT, got {pair!r}")
        fixture, replacement = pair.split("=", 1)
        code_map[fixture] = replacement
    return code_map


def main(argv: Optional[List[str]] = None) -> int:
    setup_logging("WARNING")
    parser = argparse.ArgumentParser(description="Run the acceptance scenarios in tasks/")
    parser.add_argument("task_files", nargs="*")
    parser.add_argument("--code-map", action="append", default=[], metavar="FIXTURE=ALIST", help="run tasks on another alist file")
    args = parser.parse_args(argv)
    task_files = args.task_files or sorted(str(p) for p in Path("tasks").glob("*.yaml"))

    existing_files = [f for f in task_files if Path(f).exists()]
    if not existing_files:
        print("❌ Error: No task files found")
        return 1

    try:
        code_map = parse_code_map(args.code_map)
    except ValueError as e:
        print(f"❌ Error: {e}")
        return 1

    summary = EvalRunner(code_map=code_map).run_eval_suite(existing_files)
    return 0 if summary["failed"] == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
