"""
Tests for decoder routing and the per-family pipelines.
"""

import numpy as np
import pytest

import eqml.pipelines.abp as abp_pipeline
import eqml.pipelines.baseline as baseline_pipeline
from eqml.bp import LlrFrame, decode
from eqml.code_model import is_codeword
from eqml.config import RunConfig
from eqml.router import HANDLERS, route_decoder, run_decoder

DECODERS = ["ms", "spa", "abp-nws", "eqml-ews", "sms"]


def test_every_decoder_is_routed():
    assert sorted(HANDLERS) == sorted(DECODERS)
    for name in DECODERS:
        assert route_decoder(name) is HANDLERS[name]


def test_unknown_decoder():
    with pytest.raises(ValueError, match="unknown decoder"):
        route_decoder("bitflip")


@pytest.mark.parametrize("name", DECODERS)
def test_clean_frame_needs_no_reprocessing(ldpc96, name):
    outcome = run_decoder(ldpc96, LlrFrame(np.full(96, 5.0)), RunConfig(decoder=name))
    assert outcome.status == "converged-first-pass"
    assert outcome.tests_used == 0
    assert not outcome.codeword.any()


@pytest.mark.parametrize("name", ["abp-nws", "eqml-ews", "sms"])
def test_reprocessing_decoders_on_a_hard_frame(hamming, name):
    frame = LlrFrame([1.0, 2.4, -0.7, 2.0, 3.0, -1.2, 2.1])
    outcome = run_decoder(hamming, frame, RunConfig(decoder=name, j_max=3, stop_rule="lds"))
    assert outcome.tests_used > 0
    assert outcome.status in ("recovered", "failure")
    assert outcome.total_iterations > 30


def test_budget_fair_baseline_gets_the_tree_budget(monkeypatch, hamming):
    seen = []

    def spy(graph, frame, cfg):
        seen.append(cfg)
        return decode(graph, frame, cfg)

    monkeypatch.setattr(baseline_pipeline, "decode", spy)
    run_decoder(hamming, LlrFrame(np.full(7, 3.0)), RunConfig(decoder="spa", j_max=3, i_max=20, budget_fair=True))
    assert seen[0].max_iters == 15 * 20
    assert seen[0].variant == "sum-product"


def test_abp_passes_stage_budgets(monkeypatch, hamming):
    seen = {}

    def spy(graph, frame, strategy, cfg, first_run, **kwargs):
        seen.update(strategy=strategy, cfg=cfg)
        return baseline_pipeline.first_pass_outcome(first_run)

    monkeypatch.setattr(abp_pipeline, "run_reprocessing", spy)
    cfg = RunConfig(decoder="abp-nws", j_max=3, i_j=[10, 20, 40])
    run_decoder(hamming, LlrFrame(np.full(7, 3.0)), cfg)
    assert seen["strategy"] == "nws"
    assert seen["cfg"].mode == "abp"
    assert [seen["cfg"].budget(j) for j in (1, 2, 3)] == [10, 20, 40]


@pytest.mark.parametrize("name", DECODERS)
def test_every_answer_is_a_codeword(ldpc96, name):
    rng = np.random.default_rng(17)
    cfg = RunConfig(decoder=name, j_max=3)
    for _ in range(60):
        frame = LlrFrame(2.0 * (1.0 + 0.85 * rng.standard_normal(96)) / 0.85 ** 2)
        outcome = run_decoder(ldpc96, frame, cfg)
        if outcome.status != "failure":
            assert is_codeword(ldpc96, outcome.codeword)
        else:
            assert outcome.codeword is None
