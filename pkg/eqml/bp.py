"""
Flooding belief propagation - min-sum and sum-product check rules,
per-iteration syndrome checks and V2C sign-flip counters.

Message arrays are indexed by edge id (see TannerGraph). Signs follow the
"positive favours bit 0" convention and sign(0) counts as +.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Literal, Sequence, Tuple

import numpy as np

from eqml.code_model import TannerGraph, syndrome

logger = logging.getLogger(__name__)

Variant = Literal["min-sum", "sum-product"]

DEFAULT_ALPHA = 1000.0


@dataclass(frozen=True)
class LlrFrame:
    """Channel LLRs r(v_n) for one frame"""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(f"LLR frame must be 1-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("LLR frame holds non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class BpConfig:
    variant: Variant = "min-sum"
    max_iters: int = 30
    normalization: float = 1.0
    alpha: float = DEFAULT_ALPHA
    early_stop: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.normalization <= 1.0:
            raise ValueError(f"normalization must be in (0, 1], got {self.normalization}")

    def with_budget(self, max_iters: int) -> "BpConfig":
        return replace(self, max_iters=max_iters)


@dataclass
class BpRun:
    """Everything one BP execution leaves behind"""

    v2c: np.ndarray
    c2v: np.ndarray
    app: np.ndarray
    hard_decision: np.ndarray
    converged: bool
    iterations_used: int
    flip_count_edge: np.ndarray
    flip_count_vn: np.ndarray
    flip_pct_per_iter: List[float] = field(default_factory=list)


# ---------------------------------------------------------------------------
# kernels - shared by the single-check helpers and the full decoder


def _min_sum_kernel(values, edge_check, starts, normalization, alpha):
    mag = np.abs(values)
    neg = values < 0

    min1 = np.minimum.reduceat(mag, starts)
    # first position attaining the minimum of each check
    hits = np.flatnonzero(mag == min1[edge_check])
    _, first = np.unique(edge_check[hits], return_index=True)
    argmin_edge = hits[first]

    masked = mag.copy()
    masked[argmin_edge] = np.inf
    min2 = np.minimum.reduceat(masked, starts)

    out_mag = min1[edge_check]
    out_mag[argmin_edge] = min2

    parity = np.add.reduceat(neg.astype(np.int64), starts) & 1
    flip = (parity[edge_check] == 1) ^ neg
    out = np.where(flip, -out_mag, out_mag) * normalization
    return np.clip(out, -alpha, alpha)


def _sum_product_kernel(values, edge_check, starts, alpha):
    t = np.tanh(values / 2.0)
    zero = t == 0.0
    nonzero = np.where(zero, 1.0, t)

    product = np.multiply.reduceat(nonzero, starts)
    zeros = np.add.reduceat(zero.astype(np.int64), starts)
    others_zero = zeros[edge_check] - zero

    extrinsic = np.where(others_zero > 0, 0.0, product[edge_check] / nonzero)
    extrinsic = np.clip(extrinsic, -1.0, 1.0)
    with np.errstate(divide="ignore"):
        out = 2.0 * np.arctanh(extrinsic)
    return np.clip(out, -alpha, alpha)


def _single_check(incoming: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    values = np.asarray(incoming, dtype=np.float64)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("a check node needs at least one incoming message")
    return values, np.zeros(values.size, dtype=np.int64), np.array([0], dtype=np.int64)


def check_update(incoming: Sequence[float], normalization: float = 1.0, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Min-sum extrinsic outputs of one check node."""
    values, edge_check, starts = _single_check(incoming)
    return _min_sum_kernel(values, edge_check, starts, normalization, alpha)


def check_update_spa(incoming: Sequence[float], alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Sum-product (tanh rule) extrinsic outputs of one check node."""
    values, edge_check, starts = _single_check(incoming)
    return _sum_product_kernel(values, edge_check, starts, alpha)


def variable_update(channel_llr: float, incoming_c2v: Sequence[float], alpha: float = DEFAULT_ALPHA) -> Tuple[np.ndarray, float]:
    """Returns (v2c per edge, app). A degree-1 VN passes its channel LLR through unchanged."""
    incoming = np.asarray(incoming_c2v, dtype=np.float64)
    c2v_sum = float(incoming.sum())
    v2c = np.clip(float(channel_llr) + (c2v_sum - incoming), -alpha, alpha)
    return v2c, float(np.clip(float(channel_llr) + c2v_sum, -alpha, alpha))


# ---------------------------------------------------------------------------
# decoder


def _check_pass(graph: TannerGraph, v2c: np.ndarray, cfg: BpConfig) -> np.ndarray:
    if cfg.variant == "min-sum":
        return _min_sum_kernel(v2c, graph.edge_check, graph.cn_start, cfg.normalization, cfg.alpha)
    return _sum_product_kernel(v2c, graph.edge_check, graph.cn_start, cfg.alpha)


def decode(graph: TannerGraph, frame: LlrFrame, cfg: BpConfig) -> BpRun:
    """
    Flooding BP: all checks, then all variables, then a hard decision and a
    syndrome check every iteration. V2C sign flips are counted from the
    second iteration on (each iteration against the previous one).
    """
    if len(frame) != graph.n_vars:
        raise ValueError(f"frame has {len(frame)} LLRs, code has {graph.n_vars} variables")

    alpha = cfg.alpha
    llr = np.clip(frame.values, -alpha, alpha)
    n_edges = graph.n_edges

    v2c = llr[graph.edge_var].copy()
    c2v = np.zeros(n_edges)
    app = llr.copy()
    flips = np.zeros(n_edges, dtype=np.int64)
    flip_pct: List[float] = []
    prev_neg = None
    converged = False
    hard = (app < 0).astype(np.uint8)
    iteration = 0

    for iteration in range(1, cfg.max_iters + 1):
        c2v = _check_pass(graph, v2c, cfg)

        c2v_sum = np.bincount(graph.edge_var, weights=c2v, minlength=graph.n_vars)
        # extrinsic sum first so the channel LLR is added last
        v2c = np.clip(llr[graph.edge_var] + (c2v_sum[graph.edge_var] - c2v), -alpha, alpha)
        app = np.clip(llr + c2v_sum, -alpha, alpha)

        neg = v2c < 0
        if prev_neg is not None:
            flipped = neg != prev_neg
            flips += flipped
            flip_pct.append(100.0 * int(flipped.sum()) / n_edges)
        prev_neg = neg

        hard = (app < 0).astype(np.uint8)
        converged = not syndrome(graph, hard).any()
        if converged and cfg.early_stop:
            break

    flip_vn = np.bincount(graph.edge_var, weights=flips, minlength=graph.n_vars).astype(np.int64)
    logger.debug("bp %s: %d iterations, converged=%s", cfg.variant, iteration, converged)

    return BpRun(
        v2c=v2c,
        c2v=c2v,
        app=app,
        hard_decision=hard,
        converged=converged,
        iterations_used=iteration,
        flip_count_edge=flips,
        flip_count_vn=flip_vn,
        flip_pct_per_iter=flip_pct,
    )
