"""
The router - maps a decoder name to the pipeline that runs it.
"""

from typing import Callable, Dict

from eqml.bp import LlrFrame
from eqml.code_model import TannerGraph
from eqml.config import DecoderName, RunConfig
from eqml.pipelines.abp import handle_abp_nws
from eqml.pipelines.baseline import handle_ms, handle_spa
from eqml.pipelines.eqml import handle_eqml_ews
from eqml.pipelines.sms import handle_sms
from eqml.reprocess import DecodeOutcome

Handler = Callable[..., DecodeOutcome]

HANDLERS: Dict[str, Handler] = {
    "ms": handle_ms,
    "spa": handle_spa,
    "abp-nws": handle_abp_nws,
    "eqml-ews": handle_eqml_ews,
    "sms": handle_sms,
}


def route_decoder(name: DecoderName) -> Handler:
    try:
        return HANDLERS[name]
    except KeyError:
        raise ValueError(f"unknown decoder {name!r}, expected one of {sorted(HANDLERS)}") from None


def run_decoder(graph: TannerGraph, frame: LlrFrame, cfg: RunConfig, frame_id: int = 0, trace: bool = False) -> DecodeOutcome:
    """Decodes one frame with whatever decoder the config names."""
    return route_decoder(cfg.decoder)(graph, frame, cfg, frame_id=frame_id, trace=trace)
