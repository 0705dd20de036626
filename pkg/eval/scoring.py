"""
Scoring utilities for the acceptance scenarios.
Each check takes plain numbers and returns a dict with `passed` plus the
values it looked at, so the runner can print and save them as they are.
"""

import math
from typing import Any, Dict, List, Sequence


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return 0.0 if numerator == 0 else math.inf
    return numerator / denominator


def check_fer_ratio(fer: float, reference_fer: float, max_ratio: float) -> Dict[str, Any]:
    """
    FER of the arm under test against a reference arm.

    Args:
        fer: FER of the arm under test
        reference_fer: FER of the reference arm
        max_ratio: largest acceptable fer / reference_fer

    Returns:
        Dict with the ratio and whether it is within bounds
    """
    ratio = _ratio(fer, reference_fer)
    return {"fer": fer, "reference_fer": reference_fer, "ratio": ratio, "max_ratio": max_ratio, "passed": ratio <= max_ratio}


def check_i_avg_ratio(
    i_avg: float,
    reference_i_avg: float,
    max_ratio: float,
    fer: float,
    reference_fer: float,
    max_fer_ratio: float,
) -> Dict[str, Any]:
    """
    Latency saving with a bounded FER cost, e.g. PPS against LDS.

    Args:
        i_avg / reference_i_avg: average iterations per frame of both arms
        max_ratio: largest acceptable i_avg / reference_i_avg
        fer / reference_fer: FERs of both arms
        max_fer_ratio: largest acceptable fer / reference_fer

    Returns:
        Dict with both ratios
    """
    latency = _ratio(i_avg, reference_i_avg)
    fer_check = check_fer_ratio(fer, reference_fer, max_fer_ratio)
    return {
        "i_avg_ratio": latency,
        "max_ratio": max_ratio,
        "fer_ratio": fer_check["ratio"],
        "max_fer_ratio": max_fer_ratio,
        "passed": latency <= max_ratio and fer_check["passed"],
    }


def check_ml_gap(fer_decoder: float, fer_ml: float, max_ratio: float) -> Dict[str, Any]:
    ratio = _ratio(fer_decoder, fer_ml)
    return {"fer_decoder": fer_decoder, "fer_ml": fer_ml, "ratio": ratio, "max_ratio": max_ratio, "passed": ratio <= max_ratio}


def check_event_agreement(rate: float, events: int, min_rate: float) -> Dict[str, Any]:
    """Share of error-event frames on which the decoder returned the ML word."""
    return {"event_agreement_rate": rate, "error_events": events, "min_rate": min_rate, "passed": events > 0 and rate >= min_rate}


def check_ml_optimal(fer_ml: float, fer_decoder: float, sigma: float, n_sigma: float = 3.0) -> Dict[str, Any]:
    """ML should never lose to another decoder beyond statistical noise."""
    slack = n_sigma * sigma
    return {"fer_ml": fer_ml, "fer_decoder": fer_decoder, "slack": slack, "passed": fer_ml <= fer_decoder + slack}


def check_flip_shape(
    converged_mean: Sequence[float],
    failed_mean: Sequence[float],
    window: int = 10,
    max_rel_variation: float = 0.2,
) -> Dict[str, Any]:
    """
    Converged frames stop flipping while failed ones settle on a plateau.

    Args:
        converged_mean: per-iteration mean flip % of converged frames
        failed_mean: per-iteration mean flip % of failed frames
        window: number of final iterations treated as the plateau
        max_rel_variation: largest (max - min) / mean over the plateau

    Returns:
        Dict with the final converged mean, plateau mean and its variation
    """
    if len(converged_mean) == 0 or len(failed_mean) == 0:
        return {"passed": False, "reason": "a population is empty"}

    plateau: List[float] = list(failed_mean)[-window:]
    plateau_mean = sum(plateau) / len(plateau)
    variation = (max(plateau) - min(plateau)) / plateau_mean if plateau_mean > 0 else math.inf
    final = float(converged_mean[-1])
    return {
        "converged_final": final,
        "failed_plateau": plateau_mean,
        "plateau_variation": variation,
        "max_rel_variation": max_rel_variation,
        "passed": final < plateau_mean and variation < max_rel_variation,
    }


def summarize(results: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    total = len(results)
    passed = sum(1 for r in results if r.get("passed"))
    return {
        "total_tasks": total,
        "passed": passed,
        "failed": total - passed,
        "pass_rate": passed / total if total else 0.0,
    }
