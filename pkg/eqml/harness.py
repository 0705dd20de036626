"""
Monte Carlo sweep engine.

Frames are cut into fixed-size batches and consumed in frame order; the
stopping rule is checked after every batch. Workers only compute batches
ahead of time, so the counters never depend on how many there are.
"""

import csv
import json
import logging
import time
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from multiprocessing import Pool
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from tqdm import tqdm

from eqml.bp import BpConfig, LlrFrame, decode
from eqml.channel import ChannelConfig, transmit
from eqml.code_model import CodewordBasis, PunctureMask, TannerGraph, load_alist, load_puncture_mask, nullspace_basis, random_codeword
from eqml.config import RunConfig
from eqml.reprocess import DecodeOutcome, TestRecord
from eqml.router import run_decoder

logger = logging.getLogger(__name__)

CSV_HEADER = ["ebn0_db", "frames", "frame_errors", "bit_errors", "fer", "ber", "i_avg", "avg_tests", "elapsed_s"]

Job = Tuple[float, int, int]  # (ebn0_db, first frame index, frame count)
S = TypeVar("S")


def fmt(value: float) -> str:
    return f"{value:.6g}"


@dataclass
class SweepStats:
    """Accumulators for one SNR point"""

    ebn0_db: float
    bits_per_frame: int
    frames: int = 0
    frame_errors: int = 0
    bit_errors: int = 0
    cumulative_iterations: int = 0
    cumulative_tests: int = 0
    wall_time: float = 0.0
    status_counts: Dict[str, int] = field(default_factory=dict)

    def record(self, outcome: DecodeOutcome, transmitted: np.ndarray) -> None:
        wrong = int(np.count_nonzero(outcome.estimate != transmitted))
        self.frames += 1
        self.bit_errors += wrong
        if outcome.status == "failure" or wrong:
            self.frame_errors += 1
        self.cumulative_iterations += outcome.total_iterations
        self.cumulative_tests += outcome.tests_used
        self.status_counts[outcome.status] = self.status_counts.get(outcome.status, 0) + 1

    def merge(self, other: "SweepStats") -> "SweepStats":
        if other.ebn0_db != self.ebn0_db:
            raise ValueError(f"cannot merge stats of {self.ebn0_db} dB and {other.ebn0_db} dB")
        return SweepStats(
            ebn0_db=self.ebn0_db,
            bits_per_frame=self.bits_per_frame,
            frames=self.frames + other.frames,
            frame_errors=self.frame_errors + other.frame_errors,
            bit_errors=self.bit_errors + other.bit_errors,
            cumulative_iterations=self.cumulative_iterations + other.cumulative_iterations,
            cumulative_tests=self.cumulative_tests + other.cumulative_tests,
            wall_time=self.wall_time + other.wall_time,
            status_counts=dict(Counter(self.status_counts) + Counter(other.status_counts)),
        )

    def counters(self) -> Tuple[int, ...]:
        """Everything except wall time; equal across worker counts"""
        return (self.frames, self.frame_errors, self.bit_errors, self.cumulative_iterations, self.cumulative_tests)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def ber(self) -> float:
        total = self.frames * self.bits_per_frame
        return self.bit_errors / total if total else 0.0

    @property
    def i_avg(self) -> float:
        return self.cumulative_iterations / self.frames if self.frames else 0.0

    @property
    def i_avg_exact(self) -> Fraction:
        return Fraction(self.cumulative_iterations, self.frames) if self.frames else Fraction(0)

    @property
    def avg_tests(self) -> float:
        return self.cumulative_tests / self.frames if self.frames else 0.0


# ---------------------------------------------------------------------------
# per-run context shared with worker processes


@dataclass
class SimContext:
    cfg: RunConfig
    graph: TannerGraph
    basis: CodewordBasis
    mask: PunctureMask

    @property
    def n_transmitted(self) -> int:
        return self.graph.n_vars - len(self.mask.punctured)

    @property
    def rate(self) -> float:
        """K / N_transmitted"""
        return self.basis.dimension / self.n_transmitted

    def channel(self, ebn0_db: float) -> ChannelConfig:
        return ChannelConfig(self.cfg.modulation, ebn0_db, self.rate, self.cfg.seed)


def build_context(cfg: RunConfig) -> SimContext:
    graph = load_alist(cfg.code)
    mask = load_puncture_mask(cfg.puncture, graph.n_vars) if cfg.puncture else PunctureMask()
    basis = nullspace_basis(graph)
    if basis.dimension == 0:
        raise ValueError(f"{cfg.code}: code has dimension 0")
    return SimContext(cfg=cfg, graph=graph, basis=basis, mask=mask)


_CONTEXT: Optional[SimContext] = None


def _init_worker(context: SimContext) -> None:
    global _CONTEXT
    _CONTEXT = context


def current_context() -> SimContext:
    if _CONTEXT is None:
        raise RuntimeError("simulation context not initialised")
    return _CONTEXT


def codeword_rng(seed: int, frame_idx: int) -> np.random.Generator:
    # separate stream from the channel noise of the same frame
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(frame_idx, 1))))


def draw_frame(context: SimContext, ebn0_db: float, frame_idx: int) -> Tuple[np.ndarray, LlrFrame]:
    """Transmitted codeword and received LLRs for one frame index"""
    cfg = context.cfg
    if cfg.encode == "random":
        codeword = random_codeword(context.basis, codeword_rng(cfg.seed, frame_idx))
    else:
        codeword = np.zeros(context.graph.n_vars, dtype=np.uint8)
    frame = transmit(codeword, context.channel(ebn0_db), frame_idx, context.mask, cfg.alpha)
    return codeword, frame


def _sweep_batch(job: Job) -> SweepStats:
    context = current_context()
    ebn0_db, start, count = job
    stats = SweepStats(ebn0_db=ebn0_db, bits_per_frame=context.graph.n_vars)
    began = time.perf_counter()
    for frame_idx in range(start, start + count):
        codeword, frame = draw_frame(context, ebn0_db, frame_idx)
        outcome = run_decoder(context.graph, frame, context.cfg, frame_id=frame_idx)
        stats.record(outcome, codeword)
    stats.wall_time = time.perf_counter() - began
    return stats


# ---------------------------------------------------------------------------
# batch engine


@contextmanager
def worker_pool(context: SimContext, workers: int) -> Iterator[Optional[Pool]]:
    """workers == 1 runs batches in-process"""
    if workers == 1:
        _init_worker(context)
        yield None
        return
    with Pool(workers, initializer=_init_worker, initargs=(context,)) as pool:
        yield pool


def stop_reached(frames: int, frame_errors: int, cfg: RunConfig) -> bool:
    if frames < cfg.min_frames:
        return False
    return frame_errors >= cfg.max_frame_errors or frames >= cfg.max_frames


def run_point(
    pool: Optional[Pool],
    batch_fn: Callable[[Job], S],
    ebn0_db: float,
    cfg: RunConfig,
    initial: S,
    should_stop: Callable[[S], bool],
    progress: bool = False,
) -> S:
    """
    Runs batches for one SNR point until should_stop holds or the frame
    cap is hit. Batches go out in rounds of `workers` and are merged in
    frame order; anything computed past the stopping batch is dropped.
    """
    stats = initial
    next_frame = 0
    per_round = cfg.workers if pool is not None else 1

    with tqdm(desc=f"{ebn0_db:g} dB", unit="frame", disable=not progress, leave=False) as bar:
        while not should_stop(stats) and next_frame < cfg.max_frames:
            jobs: List[Job] = []
            for _ in range(per_round):
                count = min(cfg.batch_frames, cfg.max_frames - next_frame)
                if count <= 0:
                    break
                jobs.append((ebn0_db, next_frame, count))
                next_frame += count

            results = pool.imap(batch_fn, jobs) if pool is not None else map(batch_fn, jobs)
            for part in results:
                if should_stop(stats):
                    break
                stats = stats.merge(part)
                bar.update(part.frames)
    return stats


def run_sweep(cfg: RunConfig, progress: bool = False, context: Optional[SimContext] = None) -> List[SweepStats]:
    """One SweepStats per Eb/N0 point, in the order given"""
    context = context or build_context(cfg)
    logger.info(
        "sweep: %s on %s (N=%d, K=%d, rate=%.4f), %d point(s), %d worker(s)",
        cfg.decoder, cfg.code, context.graph.n_vars, context.basis.dimension, context.rate, len(cfg.ebn0), cfg.workers,
    )

    results: List[SweepStats] = []
    with worker_pool(context, cfg.workers) as pool:
        for ebn0_db in cfg.ebn0:
            began = time.perf_counter()
            stats = run_point(
                pool,
                _sweep_batch,
                ebn0_db,
                cfg,
                SweepStats(ebn0_db=ebn0_db, bits_per_frame=context.graph.n_vars),
                lambda s: stop_reached(s.frames, s.frame_errors, cfg),
                progress,
            )
            stats.wall_time = time.perf_counter() - began
            logger.info(
                "%g dB: frames=%d errors=%d fer=%s i_avg=%s tests=%s",
                ebn0_db, stats.frames, stats.frame_errors, fmt(stats.fer), fmt(stats.i_avg), fmt(stats.avg_tests),
            )
            results.append(stats)
    return results


# ---------------------------------------------------------------------------
# output


def csv_row(stats: SweepStats) -> List[str]:
    return [
        fmt(stats.ebn0_db),
        str(stats.frames),
        str(stats.frame_errors),
        str(stats.bit_errors),
        fmt(stats.fer),
        fmt(stats.ber),
        fmt(stats.i_avg),
        fmt(stats.avg_tests),
        fmt(stats.wall_time),
    ]


def emit_csv(stats: Sequence[SweepStats], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for point in stats:
            writer.writerow(csv_row(point))
    return path


def meta_path(out: Union[str, Path]) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".meta.json")


def write_meta(cfg: RunConfig, context: SimContext, stats: Sequence[SweepStats], out: Union[str, Path]) -> Path:
    """Sidecar with the full run config and the conventions behind the numbers"""
    meta = {
        "config": cfg.model_dump(),
        "code": {
            "n_vars": context.graph.n_vars,
            "n_checks": context.graph.n_checks,
            "dimension": context.basis.dimension,
            "punctured": len(context.mask.punctured),
        },
        "rate_convention": "K/N_transmitted",
        "rate": context.rate,
        "baseline_max_iters": cfg.baseline_max_iters if cfg.is_baseline else None,
        "stopping": {
            "min_frames": cfg.min_frames,
            "max_frame_errors": cfg.max_frame_errors,
            "max_frames": cfg.max_frames,
            "batch_frames": cfg.batch_frames,
        },
        "points": [
            {"ebn0_db": s.ebn0_db, "status_counts": dict(sorted(s.status_counts.items())), "i_avg_exact": str(s.i_avg_exact)}
            for s in stats
        ],
    }
    path = meta_path(out)
    path.write_text(json.dumps(meta, indent=2))
    return path


def write_test_trace(records: Sequence[TestRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["frame_id", "stage", "t", "pattern", "iterations", "converged", "pruned_by"])
        for r in records:
            writer.writerow([r.frame_id, r.stage, r.t, r.pattern, r.iterations, int(r.converged), "" if r.pruned_by is None else r.pruned_by])
    return path


def write_selection_trace(selections: Sequence[Dict[str, object]], path: Union[str, Path]) -> Path:
    path = Path(path)
    keys = sorted({k for entry in selections for k in entry} - {"stage", "strategy", "vn"})
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["stage", "strategy", "vn"] + keys)
        for entry in selections:
            writer.writerow([entry["stage"], entry["strategy"], entry["vn"]] + ["" if entry.get(k) is None else entry[k] for k in keys])
    return path


def load_llr_frame(path: Union[str, Path]) -> LlrFrame:
    """Whitespace or comma separated LLR values"""
    text = Path(path).read_text().replace(",", " ")
    try:
        values = [float(tok) for tok in text.split()]
    except ValueError:
        raise ValueError(f"{path}: LLR file must hold numbers only") from None
    return LlrFrame(values)


# ---------------------------------------------------------------------------
# V2C flip diagnostics


@dataclass
class FlipTrace:
    frame_id: int
    outcome: str  # "converged" or "failed"
    pct: List[float]


def diagnose_flips(cfg: RunConfig, n_frames: int, progress: bool = False, context: Optional[SimContext] = None) -> List[FlipTrace]:
    """
    Plain min-sum at the first Eb/N0 point, always running the full i_max
    iterations so every trace has i_max - 1 flip percentages.
    """
    if cfg.decoder != "ms":
        raise ValueError(f"diagnose-flips runs the ms decoder, got {cfg.decoder!r}")
    context = context or build_context(cfg)
    bp_cfg = BpConfig(variant="min-sum", max_iters=cfg.i_max, normalization=cfg.normalization, alpha=cfg.alpha, early_stop=False)
    ebn0_db = cfg.ebn0[0]

    traces: List[FlipTrace] = []
    for frame_idx in tqdm(range(n_frames), desc=f"flips {ebn0_db:g} dB", unit="frame", disable=not progress, leave=False):
        _, frame = draw_frame(context, ebn0_db, frame_idx)
        run = decode(context.graph, frame, bp_cfg)
        traces.append(FlipTrace(frame_idx, "converged" if run.converged else "failed", list(run.flip_pct_per_iter)))

    counts = Counter(t.outcome for t in traces)
    logger.info("flip traces at %g dB: %d converged, %d failed", ebn0_db, counts["converged"], counts["failed"])
    return traces


def flip_means(traces: Sequence[FlipTrace]) -> Dict[str, np.ndarray]:
    """Per-iteration mean flip percentage for each outcome population"""
    means: Dict[str, np.ndarray] = {}
    for outcome in ("converged", "failed"):
        rows = [t.pct for t in traces if t.outcome == outcome]
        if rows:
            means[outcome] = np.mean(np.array(rows, dtype=np.float64), axis=0)
    return means


def write_flip_csv(traces: Sequence[FlipTrace], path: Union[str, Path]) -> Tuple[Path, Path]:
    """Raw traces to `path`, population means to `<stem>_mean.csv`; iteration numbers start at 2"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["iter", "pct", "outcome", "frame_id"])
        for trace in traces:
            for i, pct in enumerate(trace.pct):
                writer.writerow([i + 2, fmt(pct), trace.outcome, trace.frame_id])

    sizes = Counter(t.outcome for t in traces)
    mean_path = path.with_name(f"{path.stem}_mean.csv")
    with mean_path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["iter", "outcome", "mean_pct", "frames"])
        for outcome, mean in flip_means(traces).items():
            for i, value in enumerate(mean):
                writer.writerow([i + 2, outcome, fmt(value), sizes[outcome]])
    return path, mean_path
