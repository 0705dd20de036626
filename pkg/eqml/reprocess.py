"""
Saturation reprocessing - the branch tree behind ABP, SMS and EQML.

After a failed BP decode, VNs are picked one per stage and their channel
LLRs are overwritten with every +/- alpha sign pattern. Each pattern is a
fresh BP test; converged tests feed the candidate list and the best
candidate under the chosen metric is the output.

Tests run serially, stage by stage, patterns in binary-counting order
(first selected VN is the most significant bit, bit 1 means -alpha).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from eqml.bp import BpConfig, BpRun, LlrFrame, decode
from eqml.code_model import TannerGraph, is_codeword
from eqml.selection import SelectionExhausted, SelectionState, Strategy, select_next

logger = logging.getLogger(__name__)

Mode = Literal["abp", "eqml", "sms"]
StopRule = Literal["lds", "pps"]
Metric = Literal["correlation", "literal", "euclidean"]
Status = Literal["converged-first-pass", "recovered", "failure"]
Pattern = Tuple[int, ...]

Decoder = Callable[[TannerGraph, LlrFrame, BpConfig], BpRun]


class EmptyCandidateSet(ValueError):
    pass


def pattern_bits(t: int, stage: int) -> Pattern:
    """Bits of test t at a stage; the first selected VN is the most significant bit."""
    return tuple((t >> shift) & 1 for shift in range(stage - 1, -1, -1))


@dataclass(frozen=True)
class SaturationList:
    """The 2^stage sign patterns of one stage, built on demand from the test index"""

    stage: int
    alpha: float

    def __post_init__(self):
        if self.stage < 1:
            raise ValueError(f"stage must be >= 1, got {self.stage}")

    def __len__(self) -> int:
        return 2 ** self.stage

    def __getitem__(self, t: int) -> np.ndarray:
        if not 0 <= t < len(self):
            raise IndexError(f"pattern {t} outside 0..{len(self) - 1}")
        return np.where(np.array(self.bits(t)) == 1, -self.alpha, self.alpha).astype(np.float64)

    def bits(self, t: int) -> Pattern:
        return pattern_bits(t, self.stage)

    @property
    def patterns(self) -> np.ndarray:
        """All rows as a (2^j, j) array of +/- alpha; only sensible for small stages"""
        return np.stack([self[t] for t in range(len(self))])


def build_saturation_list(stage: int, alpha: float) -> SaturationList:
    return SaturationList(stage=stage, alpha=alpha)


def apply_pattern(frame: LlrFrame, selected: Sequence[int], pattern: Sequence[float]) -> LlrFrame:
    if len(selected) != len(pattern):
        raise ValueError(f"{len(selected)} selected VNs but a pattern of length {len(pattern)}")
    values = frame.values.copy()
    if len(selected):
        values[np.asarray(selected, dtype=np.int64)] = np.asarray(pattern, dtype=np.float64)
    return LlrFrame(values)


@dataclass(frozen=True)
class TreeConfig:
    mode: Mode = "eqml"
    stop_rule: StopRule = "pps"
    j_max: int = 4
    i_max: int = 30
    stage_iters: Optional[Tuple[int, ...]] = None
    metric: Metric = "correlation"
    bp: BpConfig = field(default_factory=BpConfig)

    def __post_init__(self):
        if self.j_max < 1:
            raise ValueError(f"j_max must be >= 1, got {self.j_max}")
        if self.stage_iters is not None and len(self.stage_iters) != self.j_max:
            raise ValueError(f"stage_iters needs {self.j_max} entries")

    def budget(self, stage: int) -> int:
        # only ABP uses per-stage budgets
        if self.mode == "abp" and self.stage_iters is not None:
            return int(self.stage_iters[stage - 1])
        return self.i_max


@dataclass
class TestRecord:
    frame_id: int
    stage: int
    t: int
    pattern: str
    iterations: int
    converged: bool
    pruned_by: Optional[int] = None


@dataclass
class ReprocessTree:
    j_max: int
    mode: Mode
    stop_rule: StopRule
    t_count: int = 0
    t_f: int = 0
    live: int = 1
    candidates: List[Tuple[np.ndarray, int]] = field(default_factory=list)
    converged_at: Dict[Pattern, int] = field(default_factory=dict)
    pruned_tests: int = 0
    terminated: bool = False

    @classmethod
    def start(cls, cfg: TreeConfig) -> "ReprocessTree":
        return cls(j_max=cfg.j_max, mode=cfg.mode, stop_rule=cfg.stop_rule, t_f=2 ** (cfg.j_max + 1) - 2)

    def schedule(self, stage: int) -> None:
        """Counts the patterns of the given stage that no converged test has pruned."""
        # converged prefixes never nest, so their subtrees are disjoint
        self.live = 2 ** stage - sum(2 ** (stage - len(prefix)) for prefix in self.converged_at)

    def is_live(self, bits: Pattern) -> bool:
        return self.pruning_ancestor(bits) is None

    def pruning_ancestor(self, bits: Pattern) -> Optional[int]:
        for depth in range(len(bits) - 1, 0, -1):
            if bits[:depth] in self.converged_at:
                return self.converged_at[bits[:depth]]
        return None

    def add_candidate(self, graph: TannerGraph, codeword: np.ndarray, test_index: int) -> None:
        if not is_codeword(graph, codeword):
            raise AssertionError("only zero-syndrome words may enter the candidate list")
        if any(np.array_equal(codeword, c) for c, _ in self.candidates):
            return
        self.candidates.append((codeword.copy(), test_index))


def pps_on_convergence(tree: ReprocessTree, stage: int, bits: Pattern) -> ReprocessTree:
    """
    Partial pruning after the test (stage, bits) converged: charge T_F,
    drop the sub-branch below it and decide whether reprocessing is over.
    """
    tree.t_f = max(tree.t_f - 2 ** (tree.j_max - stage), 0)
    pruned = 2 ** (tree.j_max - stage + 1) - 2
    tree.pruned_tests += pruned
    tree.live -= 1
    if stage == tree.j_max or tree.t_f == 0 or tree.live <= 0:
        tree.terminated = True
    logger.debug("pps: stage %d pattern %s converged, t_f=%d, pruned %d", stage, bits, tree.t_f, pruned)
    return tree


def metric_scores(codewords: np.ndarray, frame: LlrFrame, metric: Metric) -> np.ndarray:
    """
    Higher is better for every metric:
      correlation  sum (1 - 2x) r
      literal      -sqrt(sum (r - x)^2), x in {0, 1}
      euclidean    -sum (r - (1 - 2x))^2, distance to the BPSK image
    """
    x = np.atleast_2d(np.asarray(codewords, dtype=np.float64))
    r = frame.values[None, :]
    if metric == "correlation":
        return ((1.0 - 2.0 * x) * r).sum(axis=1)
    if metric == "literal":
        return -np.sqrt(((r - x) ** 2).sum(axis=1))
    if metric == "euclidean":
        return -((r - (1.0 - 2.0 * x)) ** 2).sum(axis=1)
    raise ValueError(f"unknown metric: {metric}")


def select_best(candidates: Sequence[Tuple[np.ndarray, int]], frame: LlrFrame, metric: Metric = "correlation") -> np.ndarray:
    """Best candidate; ties go to the earliest test index."""
    if not candidates:
        raise EmptyCandidateSet("no valid codeword was found")
    ordered = sorted(candidates, key=lambda item: item[1])
    scores = metric_scores(np.stack([c for c, _ in ordered]), frame, metric)
    return ordered[int(np.argmax(scores))][0]


@dataclass
class DecodeOutcome:
    status: Status
    codeword: Optional[np.ndarray]
    hard_decision: np.ndarray
    tests_used: int = 0
    total_iterations: int = 0
    t_f: Optional[int] = None
    pruned_tests: int = 0
    candidates: int = 0
    trace: List[TestRecord] = field(default_factory=list)
    selections: List[Dict[str, object]] = field(default_factory=list)

    @property
    def estimate(self) -> np.ndarray:
        """The decoder's best guess: x_best, or the first-pass hard decision on failure"""
        return self.codeword if self.codeword is not None else self.hard_decision


def first_pass_outcome(run: BpRun) -> DecodeOutcome:
    return DecodeOutcome(
        status="converged-first-pass" if run.converged else "failure",
        codeword=run.hard_decision if run.converged else None,
        hard_decision=run.hard_decision,
        total_iterations=run.iterations_used,
    )


def _stage_plan(cfg: TreeConfig) -> List[int]:
    if cfg.mode == "sms":
        return [cfg.j_max]
    return list(range(1, cfg.j_max + 1))


def run_reprocessing(
    graph: TannerGraph,
    frame: LlrFrame,
    strategy: Strategy,
    cfg: TreeConfig,
    first_run: BpRun,
    decoder: Decoder = decode,
    frame_id: int = 0,
    trace: bool = False,
) -> DecodeOutcome:
    """
    Staged reprocessing after a failed first decode (the caller runs that
    decode and hands it in). SMS picks all j_max VNs up front and runs one
    stage of 2^j_max tests; ABP and EQML add one VN per stage.
    """
    if first_run.converged:
        return first_pass_outcome(first_run)

    tree = ReprocessTree.start(cfg)
    state = SelectionState.start(graph, frame, first_run)
    last_failed = first_run
    total_iterations = first_run.iterations_used
    records: List[TestRecord] = []

    for stage in _stage_plan(cfg):
        # Step 1: choose the VN(s) to saturate
        try:
            while len(state.selected) < stage:
                select_next(strategy, graph, state, last_failed)
        except SelectionExhausted as exc:
            logger.warning("frame %d: stopping at stage %d, %s", frame_id, stage, exc)
            break

        # Step 2: one BP test per live sign pattern
        saturation = build_saturation_list(stage, cfg.bp.alpha)
        bp_cfg = cfg.bp.with_budget(cfg.budget(stage))
        tree.schedule(stage)
        last_run = None

        for t in range(len(saturation)):
            bits = saturation.bits(t)
            label = "".join(str(b) for b in bits)
            if not tree.is_live(bits):
                if trace:
                    records.append(TestRecord(frame_id, stage, t + 1, label, 0, False, tree.pruning_ancestor(bits)))
                continue

            run = decoder(graph, apply_pattern(frame, state.selected, saturation[t]), bp_cfg)
            tree.t_count += 1
            total_iterations += run.iterations_used
            last_run = run
            if trace:
                records.append(TestRecord(frame_id, stage, t + 1, label, run.iterations_used, run.converged))

            if not run.converged:
                last_failed = run
                continue

            tree.add_candidate(graph, run.hard_decision, tree.t_count)
            if cfg.stop_rule == "pps":
                tree.converged_at[bits] = tree.t_count
                pps_on_convergence(tree, stage, bits)
                if tree.terminated:
                    break

        if tree.terminated:
            break

        if last_run is not None:
            state.observe(last_run)
        if tree.live <= 0:
            break

    status: Status = "recovered" if tree.candidates else "failure"
    best = select_best(tree.candidates, frame, cfg.metric) if tree.candidates else None
    logger.debug("frame %d: %s after %d tests, %d candidates", frame_id, status, tree.t_count, len(tree.candidates))

    return DecodeOutcome(
        status=status,
        codeword=best,
        hard_decision=first_run.hard_decision,
        tests_used=tree.t_count,
        total_iterations=total_iterations,
        t_f=tree.t_f,
        pruned_tests=tree.pruned_tests,
        candidates=len(tree.candidates),
        trace=records,
        selections=list(state.log),
    )
