"""
Plain BP baselines - min-sum and sum-product, no reprocessing.
With budget_fair set they get the iteration budget the full reprocessing
tree could spend.
"""

from eqml.bp import LlrFrame, decode
from eqml.code_model import TannerGraph
from eqml.config import RunConfig
from eqml.pipelines import bp_config
from eqml.reprocess import DecodeOutcome, first_pass_outcome


def handle_ms(graph: TannerGraph, frame: LlrFrame, cfg: RunConfig, frame_id: int = 0, trace: bool = False) -> DecodeOutcome:
    run = decode(graph, frame, bp_config(cfg, cfg.baseline_max_iters, "min-sum"))
    return first_pass_outcome(run)


def handle_spa(graph: TannerGraph, frame: LlrFrame, cfg: RunConfig, frame_id: int = 0, trace: bool = False) -> DecodeOutcome:
    run = decode(graph, frame, bp_config(cfg, cfg.baseline_max_iters, "sum-product"))
    return first_pass_outcome(run)
