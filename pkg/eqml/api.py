"""
FastAPI app - decodes single LLR frames over HTTP.
One real endpoint: /decode
"""

import time
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from eqml import __version__
from eqml.bp import LlrFrame
from eqml.code_model import TannerGraph, load_alist
from eqml.config import DecoderName, MetricName, StopRule, build_run_config, settings
from eqml.router import run_decoder

app = FastAPI(
    title="EQML decoder",
    description="LDPC decoding with BP, ABP, SMS and EQML reprocessing",
    version=__version__,
)


@lru_cache(maxsize=8)
def load_graph(path: str) -> TannerGraph:
    return load_alist(path)


def resolve_code_file(name: str) -> Path:
    """
    Maps a requested code to a file inside the codes directory. A bare file
    name is looked up there; anything that resolves outside it is refused.
    """
    codes_dir = Path(settings.codes_dir).resolve()
    path = Path(name)
    if not path.is_absolute() and not path.is_file():
        path = codes_dir / path.name
    resolved = path.resolve()
    if not resolved.is_relative_to(codes_dir):
        raise ValueError("code_file must name an alist file in the codes directory")
    if not resolved.is_file():
        raise ValueError(f"no code file named {path.name!r} in the codes directory")
    return resolved


class DecodeRequest(BaseModel):
    """One frame of channel LLRs plus decoder knobs"""

    llrs: List[float]
    decoder: DecoderName = "eqml-ews"
    stop_rule: Optional[StopRule] = None
    j_max: int = Field(default_factory=lambda: settings.j_max, ge=1, le=settings.j_max_limit)
    i_max: int = Field(default_factory=lambda: settings.i_max, ge=1, le=1000)
    metric: MetricName = "correlation"
    code_file: Optional[str] = None

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "llrs": [2.1, 1.7, -0.3, 2.4, 0.8, 1.9, 2.2],
                "decoder": "eqml-ews",
                "code_file": "codes/hamming_7_4.alist",
            }
        }
    )


class DecodeResponse(BaseModel):
    status: str
    codeword: Optional[List[int]]
    tests_used: int
    total_iterations: int
    latency_ms: float
    metadata: Dict[str, Any] = {}


@app.get("/")
def root():
    return {
        "message": "EQML decoder API",
        "endpoints": {
            "/decode": "POST - Decode one LLR frame",
            "/health": "GET - Health check",
        },
    }


@app.get("/health")
def health():
    return {"status": "healthy", "version": __version__}


@app.post("/decode", response_model=DecodeResponse)
def decode_frame(request: DecodeRequest) -> DecodeResponse:
    start_time = time.time()

    try:
        # Step 1: settle the run config and the code
        cfg = build_run_config(
            code=request.code_file,
            decoder=request.decoder,
            stop_rule=request.stop_rule,
            j_max=request.j_max,
            i_max=request.i_max,
            metric=request.metric,
        )
        graph = load_graph(str(resolve_code_file(cfg.code)))
        frame = LlrFrame(request.llrs)
        if len(frame) != graph.n_vars:
            raise ValueError(f"got {len(frame)} LLRs, code has {graph.n_vars} variables")

        # Step 2: decode
        outcome = run_decoder(graph, frame, cfg)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=str(e))

    latency_ms = (time.time() - start_time) * 1000
    return DecodeResponse(
        status=outcome.status,
        codeword=None if outcome.codeword is None else [int(b) for b in outcome.codeword],
        tests_used=outcome.tests_used,
        total_iterations=outcome.total_iterations,
        latency_ms=round(latency_ms, 2),
        metadata={
            "decoder": cfg.decoder,
            "stop_rule": cfg.stop_rule,
            "t_f": outcome.t_f,
            "pruned_tests": outcome.pruned_tests,
            "candidates": outcome.candidates,
            "selections": outcome.selections,
        },
    )
