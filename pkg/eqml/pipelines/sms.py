"""
SMS - the j_max least reliable channel positions are picked at once and
all 2^j_max sign patterns run as a single stage.
"""

from eqml.bp import LlrFrame, decode
from eqml.code_model import TannerGraph
from eqml.config import RunConfig
from eqml.pipelines import bp_config, tree_config
from eqml.reprocess import DecodeOutcome, run_reprocessing


def handle_sms(graph: TannerGraph, frame: LlrFrame, cfg: RunConfig, frame_id: int = 0, trace: bool = False) -> DecodeOutcome:
    first = decode(graph, frame, bp_config(cfg, cfg.i_max))
    return run_reprocessing(graph, frame, "reliability", tree_config(cfg, "sms"), first, frame_id=frame_id, trace=trace)
