"""
EQML - edge-wise selection driven by V2C sign flips, with the PPS or LDS
stopping rule. Every test gets the same budget i_max.
"""

from eqml.bp import LlrFrame, decode
from eqml.code_model import TannerGraph
from eqml.config import RunConfig
from eqml.pipelines import bp_config, tree_config
from eqml.reprocess import DecodeOutcome, run_reprocessing


def handle_eqml_ews(graph: TannerGraph, frame: LlrFrame, cfg: RunConfig, frame_id: int = 0, trace: bool = False) -> DecodeOutcome:
    first = decode(graph, frame, bp_config(cfg, cfg.i_max))
    return run_reprocessing(graph, frame, "ews", tree_config(cfg, "eqml"), first, frame_id=frame_id, trace=trace)
