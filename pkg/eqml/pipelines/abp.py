"""
ABP with node-wise selection - the reprocessing baseline.
Stage j runs with its own iteration budget I_j (i_max when not given).
"""

from eqml.bp import LlrFrame, decode
from eqml.code_model import TannerGraph
from eqml.config import RunConfig
from eqml.pipelines import bp_config, tree_config
from eqml.reprocess import DecodeOutcome, run_reprocessing


def handle_abp_nws(graph: TannerGraph, frame: LlrFrame, cfg: RunConfig, frame_id: int = 0, trace: bool = False) -> DecodeOutcome:
    # Step 1: conventional decode
    first = decode(graph, frame, bp_config(cfg, cfg.i_max))

    # Step 2: reprocess only if it failed
    return run_reprocessing(graph, frame, "nws", tree_config(cfg, "abp"), first, frame_id=frame_id, trace=trace)
