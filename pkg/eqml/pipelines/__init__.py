"""
Decoder pipelines - one handler per decoder family.
Every handler takes (graph, frame, cfg) and returns a DecodeOutcome.
"""

from eqml.bp import BpConfig
from eqml.config import RunConfig
from eqml.reprocess import Mode, TreeConfig


def bp_config(cfg: RunConfig, max_iters: int, variant: str = "min-sum") -> BpConfig:
    return BpConfig(
        variant=variant,
        max_iters=max_iters,
        normalization=cfg.normalization,
        alpha=cfg.alpha,
    )


def tree_config(cfg: RunConfig, mode: Mode) -> TreeConfig:
    return TreeConfig(
        mode=mode,
        stop_rule=cfg.stop_rule,
        j_max=cfg.j_max,
        i_max=cfg.i_max,
        stage_iters=tuple(cfg.stage_budgets) if mode == "abp" else None,
        metric=cfg.metric,
        bp=bp_config(cfg, cfg.i_max),
    )
