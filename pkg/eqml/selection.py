"""
Picks the next variable node to saturate.

  nws          - node-wise: highest (masked) degree among neighbours of
                 unsatisfied checks, least |r| among those
  ews          - edge-wise: most V2C sign flips over the whole graph,
                 least |APP| on ties
  reliability  - least |r| overall (what SMS reprocessing uses)

All ties end at the lowest VN index so replays are reproducible.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional

import numpy as np

from eqml.bp import BpRun, LlrFrame
from eqml.code_model import TannerGraph, syndrome

logger = logging.getLogger(__name__)

Strategy = Literal["nws", "ews", "reliability"]


class SelectionExhausted(RuntimeError):
    """No VN is left that the strategy is willing to pick"""


@dataclass
class SelectionState:
    """Per-frame selection bookkeeping; never shared between frames"""

    selected: List[int]
    masked_degrees: np.ndarray
    flip_snapshot: np.ndarray
    app_snapshot: Optional[np.ndarray]
    channel_abs: np.ndarray
    # criterion values behind each pick, for traces
    log: List[Dict[str, object]] = field(default_factory=list)

    @classmethod
    def start(cls, graph: TannerGraph, frame: LlrFrame, first_run: Optional[BpRun] = None) -> "SelectionState":
        state = cls(
            selected=[],
            masked_degrees=graph.vn_degree.astype(np.int64).copy(),
            flip_snapshot=np.zeros(graph.n_vars, dtype=np.int64),
            app_snapshot=None,
            channel_abs=np.abs(frame.values),
        )
        if first_run is not None:
            state.observe(first_run)
        return state

    def observe(self, run: BpRun) -> None:
        """Takes w^(T) and |APP| from the latest run, with already-selected VNs zeroed."""
        self.flip_snapshot = run.flip_count_vn.astype(np.int64).copy()
        self.flip_snapshot[self.selected] = 0
        self.app_snapshot = np.abs(run.app)

    def unselected(self) -> np.ndarray:
        keep = np.ones(self.channel_abs.size, dtype=bool)
        keep[self.selected] = False
        return np.flatnonzero(keep)

    def _take(self, vn: int, strategy: str, **criteria: object) -> int:
        self.selected.append(vn)
        self.masked_degrees[vn] = 0
        self.flip_snapshot[vn] = 0
        entry: Dict[str, object] = {"stage": len(self.selected), "strategy": strategy, "vn": vn}
        entry.update(criteria)
        self.log.append(entry)
        logger.debug("selected VN %d via %s (%s)", vn, strategy, criteria)
        return vn


def _least(values: np.ndarray, candidates: np.ndarray) -> int:
    """Candidate with the smallest value; candidates are sorted so argmin keeps the lowest index."""
    return int(candidates[int(np.argmin(values[candidates]))])


def nws_select(graph: TannerGraph, state: SelectionState, last_run: BpRun) -> int:
    # Step 1: unsatisfied checks of the latest failed decode
    unsatisfied = syndrome(graph, last_run.hard_decision).astype(bool)
    if not unsatisfied.any():
        raise ValueError("node-wise selection needs a decode with a nonzero syndrome")

    # Step 2: their neighbours that are still eligible
    neighbours = np.unique(graph.edge_var[unsatisfied[graph.edge_check]])
    candidates = neighbours[state.masked_degrees[neighbours] > 0]
    if candidates.size == 0:
        raise SelectionExhausted("every neighbour of an unsatisfied check is already saturated")

    # Step 3-4: keep the highest-degree ones
    d_max = int(state.masked_degrees[candidates].max())
    top = candidates[state.masked_degrees[candidates] == d_max]

    # Step 5: least reliable channel value wins
    vn = _least(state.channel_abs, top)
    return state._take(vn, "nws", d_max=d_max, channel_abs=float(state.channel_abs[vn]), unsatisfied=int(unsatisfied.sum()))


def ews_select(state: SelectionState) -> int:
    candidates = state.unselected()
    if candidates.size == 0:
        raise SelectionExhausted("every VN is already saturated")

    flips = state.flip_snapshot[candidates]
    w_max = int(flips.max())
    tied = candidates[flips == w_max]

    if tied.size == 1:
        vn = int(tied[0])
    elif state.app_snapshot is None:
        if w_max == 0:
            raise SelectionExhausted("no sign flips and no APP values to rank by")
        vn = int(tied[0])
    else:
        vn = _least(state.app_snapshot, tied)

    app = float(state.app_snapshot[vn]) if state.app_snapshot is not None else None
    return state._take(vn, "ews", flips=w_max, tied=int(tied.size), app_abs=app)


def reliability_select(state: SelectionState) -> int:
    candidates = state.unselected()
    if candidates.size == 0:
        raise SelectionExhausted("every VN is already saturated")
    vn = _least(state.channel_abs, candidates)
    return state._take(vn, "reliability", channel_abs=float(state.channel_abs[vn]))


def select_next(strategy: Strategy, graph: TannerGraph, state: SelectionState, last_failed: BpRun) -> int:
    if strategy == "nws":
        return nws_select(graph, state, last_failed)
    if strategy == "ews":
        return ews_select(state)
    if strategy == "reliability":
        return reliability_select(state)
    raise ValueError(f"unknown selection strategy: {strategy}")
