"""
Exhaustive ML decoding for small codes, and a paired ML-vs-decoder run.
"""

import csv
import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from eqml.bp import LlrFrame
from eqml.code_model import CodewordBasis
from eqml.config import MetricName, RunConfig, settings
from eqml.harness import (
    Job,
    SimContext,
    build_context,
    current_context,
    draw_frame,
    fmt,
    meta_path,
    run_point,
    stop_reached,
    worker_pool,
)
from eqml.reprocess import metric_scores
from eqml.router import run_decoder

logger = logging.getLogger(__name__)


class DimensionTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_dimension: int = settings.oracle_max_dimension


def enumerate_codewords(basis: CodewordBasis, limits: OracleLimits = OracleLimits()) -> np.ndarray:
    """
    All 2^K codewords in Gray-code order; step i XORs in the basis vector
    of the lowest set bit of i.
    """
    k = basis.dimension
    if k > limits.max_dimension:
        raise DimensionTooLarge(f"code dimension {k} is above the enumeration cap {limits.max_dimension}")

    words = np.zeros((2 ** k, basis.n_vars), dtype=np.uint8)
    current = np.zeros(basis.n_vars, dtype=np.uint8)
    for i in range(1, 2 ** k):
        flip = (i & -i).bit_length() - 1
        current ^= basis.basis[flip]
        words[i] = current
    return words


class MlDecoder:
    """Holds the codeword table so repeated frames skip the enumeration."""

    def __init__(self, basis: CodewordBasis, limits: OracleLimits = OracleLimits()):
        self.basis = basis
        self.codewords = enumerate_codewords(basis, limits)

    def decode(self, frame: LlrFrame, metric: MetricName = "correlation") -> np.ndarray:
        if len(frame) != self.codewords.shape[1]:
            raise ValueError(f"frame has {len(frame)} LLRs, code has {self.codewords.shape[1]} variables")
        scores = metric_scores(self.codewords, frame, metric)
        best = scores.max()
        tied = self.codewords[scores >= best - 1e-12 * max(1.0, abs(best))]
        if len(tied) == 1:
            return tied[0].copy()
        # lexicographically smallest
        return np.array(min(tied.tolist()), dtype=np.uint8)


def ml_decode(basis: CodewordBasis, frame: LlrFrame, metric: MetricName = "correlation", limits: OracleLimits = OracleLimits()) -> np.ndarray:
    return MlDecoder(basis, limits).decode(frame, metric)


# ---------------------------------------------------------------------------
# paired comparison


@dataclass
class PairedStats:
    ebn0_db: float
    frames: int = 0
    ml_errors: int = 0
    decoder_errors: int = 0
    ml_only: int = 0
    decoder_only: int = 0
    disagreements: int = 0
    # frames where reprocessing ran or ML missed the transmitted word
    error_events: int = 0
    event_agreements: int = 0

    def merge(self, other: "PairedStats") -> "PairedStats":
        return PairedStats(
            ebn0_db=self.ebn0_db,
            frames=self.frames + other.frames,
            ml_errors=self.ml_errors + other.ml_errors,
            decoder_errors=self.decoder_errors + other.decoder_errors,
            ml_only=self.ml_only + other.ml_only,
            decoder_only=self.decoder_only + other.decoder_only,
            disagreements=self.disagreements + other.disagreements,
            error_events=self.error_events + other.error_events,
            event_agreements=self.event_agreements + other.event_agreements,
        )

    @property
    def fer_ml(self) -> float:
        return self.ml_errors / self.frames if self.frames else 0.0

    @property
    def fer_decoder(self) -> float:
        return self.decoder_errors / self.frames if self.frames else 0.0

    @property
    def disagreement_rate(self) -> float:
        return self.disagreements / self.frames if self.frames else 0.0

    @property
    def event_agreement_rate(self) -> float:
        return self.event_agreements / self.error_events if self.error_events else 1.0

    @property
    def paired_sigma(self) -> float:
        """Std error of fer_ml - fer_decoder over paired frames"""
        if not self.frames:
            return 0.0
        mean = (self.ml_only - self.decoder_only) / self.frames
        second = (self.ml_only + self.decoder_only) / self.frames
        return math.sqrt(max(second - mean ** 2, 0.0) / self.frames)


_ML: Optional[MlDecoder] = None


def _ml_decoder(context: SimContext) -> MlDecoder:
    global _ML
    if _ML is None or not np.array_equal(_ML.basis.basis, context.basis.basis):
        _ML = MlDecoder(context.basis, OracleLimits(settings.oracle_max_dimension))
    return _ML


def _paired_batch(job: Job) -> PairedStats:
    context = current_context()
    ml = _ml_decoder(context)
    ebn0_db, start, count = job
    stats = PairedStats(ebn0_db=ebn0_db)

    for frame_idx in range(start, start + count):
        codeword, frame = draw_frame(context, ebn0_db, frame_idx)
        ml_word = ml.decode(frame, context.cfg.metric)
        outcome = run_decoder(context.graph, frame, context.cfg, frame_id=frame_idx)
        decoded = outcome.estimate

        ml_wrong = not np.array_equal(ml_word, codeword)
        dec_wrong = outcome.status == "failure" or not np.array_equal(decoded, codeword)
        same = outcome.status != "failure" and np.array_equal(decoded, ml_word)

        stats.frames += 1
        stats.ml_errors += ml_wrong
        stats.decoder_errors += dec_wrong
        stats.ml_only += ml_wrong and not dec_wrong
        stats.decoder_only += dec_wrong and not ml_wrong
        stats.disagreements += not same
        if outcome.status != "converged-first-pass" or ml_wrong:
            stats.error_events += 1
            stats.event_agreements += same
    return stats


def oracle_compare(cfg: RunConfig, progress: bool = False, context: Optional[SimContext] = None) -> List[PairedStats]:
    """ML and the configured decoder on the same noise, point by point"""
    context = context or build_context(cfg)
    limit = settings.oracle_max_dimension
    if context.basis.dimension > limit:
        raise DimensionTooLarge(f"code dimension {context.basis.dimension} is above the enumeration cap {limit}")

    results: List[PairedStats] = []
    with worker_pool(context, cfg.workers) as pool:
        for ebn0_db in cfg.ebn0:
            began = time.perf_counter()
            stats = run_point(
                pool,
                _paired_batch,
                ebn0_db,
                cfg,
                PairedStats(ebn0_db=ebn0_db),
                lambda s: stop_reached(s.frames, s.decoder_errors, cfg),
                progress,
            )
            logger.info(
                "%g dB: frames=%d fer_ml=%s fer_%s=%s disagree=%s agree=%s over %d events (%.1fs)",
                ebn0_db, stats.frames, fmt(stats.fer_ml), cfg.decoder, fmt(stats.fer_decoder),
                fmt(stats.disagreement_rate), fmt(stats.event_agreement_rate), stats.error_events,
                time.perf_counter() - began,
            )
            results.append(stats)
    return results


def emit_oracle_csv(stats: Sequence[PairedStats], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["ebn0_db", "fer_ml", "fer_decoder", "disagreement_rate", "frames"])
        for s in stats:
            writer.writerow([fmt(s.ebn0_db), fmt(s.fer_ml), fmt(s.fer_decoder), fmt(s.disagreement_rate), s.frames])
    return path


def write_oracle_meta(cfg: RunConfig, stats: Sequence[PairedStats], out: Union[str, Path]) -> Path:
    """Sidecar with the run config and the per-point paired counters the CSV leaves out"""
    meta = {
        "config": cfg.model_dump(),
        "error_event": "reprocessing ran or ML missed the transmitted word",
        "points": [
            {
                "ebn0_db": s.ebn0_db,
                "frames": s.frames,
                "ml_errors": s.ml_errors,
                "decoder_errors": s.decoder_errors,
                "paired_sigma": s.paired_sigma,
                "error_events": s.error_events,
                "event_agreement_rate": s.event_agreement_rate,
            }
            for s in stats
        ],
    }
    path = meta_path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, indent=2))
    return path
