"""
Tests for the check/variable rules and the flooding decoder.
"""

import numpy as np
import pytest

from eqml.bp import BpConfig, LlrFrame, check_update, check_update_spa, decode, variable_update
from eqml.code_model import TannerGraph, syndrome


def leave_one_out_min_sum(values):
    out = []
    for k in range(len(values)):
        rest = np.delete(values, k)
        out.append(np.prod(np.where(rest < 0, -1.0, 1.0)) * np.abs(rest).min())
    return np.array(out)


def noisy_frame(n, sigma, seed):
    rng = np.random.default_rng(seed)
    y = 1.0 + sigma * rng.standard_normal(n)
    return LlrFrame(2.0 * y / sigma ** 2)


class TestCheckUpdate:
    def test_three_inputs(self):
        assert check_update([2.0, -3.0, 5.0]).tolist() == [-3.0, 2.0, -2.0]

    def test_zero_input_silences_the_others(self):
        out = check_update([0.0, 2.0, -3.0])
        assert out[1] == 0 and out[2] == 0
        assert abs(out[0]) == 2.0

    def test_normalization(self):
        assert check_update([2.0, -3.0, 5.0], normalization=0.5).tolist() == [-1.5, 1.0, -1.0]

    def test_matches_leave_one_out(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            values = rng.normal(0, 3, 6)
            assert np.allclose(check_update(values), leave_one_out_min_sum(values))

    def test_degree_one_check_is_clamped(self):
        out = check_update([1.5], alpha=1000.0)
        assert np.all(np.abs(out) <= 1000.0)


class TestCheckUpdateSpa:
    def test_signs_match_min_sum(self):
        out = check_update_spa([2.0, -3.0, 5.0])
        assert np.array_equal(np.sign(out), [-1.0, 1.0, -1.0])

    def test_zero_input(self):
        out = check_update_spa([0.0, 2.0, -3.0])
        assert out[1] == 0 and out[2] == 0

    def test_never_larger_than_min_sum(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            values = rng.normal(0, 4, rng.integers(2, 8))
            assert np.all(np.abs(check_update_spa(values)) <= np.abs(check_update(values)) * (1 + 1e-7) + 1e-9)

    def test_saturated_inputs_stay_finite(self):
        out = check_update_spa([1000.0, 1000.0, -1000.0], alpha=1000.0)
        assert np.all(np.isfinite(out))
        assert np.all(np.abs(out) <= 1000.0)


class TestVariableUpdate:
    def test_sums(self):
        v2c, app = variable_update(1.5, [0.5, -2.0])
        assert app == 0.0
        assert v2c.tolist() == [-0.5, 2.0]

    def test_degree_one(self):
        v2c, _ = variable_update(1.5, [0.7])
        assert v2c.tolist() == [1.5]

    def test_app_is_clamped(self):
        _, app = variable_update(1000.0, [1000.0], alpha=1000.0)
        assert app == 1000.0


class TestLlrFrame:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            LlrFrame([1.0, np.inf])

    def test_is_read_only(self):
        frame = LlrFrame([1.0, 2.0])
        with pytest.raises(ValueError):
            frame.values[0] = 5.0


class TestDecode:
    def test_noiseless_frame_converges_at_once(self, ldpc96):
        run = decode(ldpc96, LlrFrame(np.full(96, 4.0)), BpConfig())
        assert run.converged
        assert run.iterations_used == 1
        assert not run.flip_count_edge.any()
        assert run.flip_pct_per_iter == []

    def test_spa_high_snr(self, ldpc96):
        run = decode(ldpc96, LlrFrame(np.full(96, 20.0)), BpConfig(variant="sum-product"))
        assert run.converged and run.iterations_used <= 2

    def test_length_mismatch(self, hamming):
        with pytest.raises(ValueError):
            decode(hamming, LlrFrame(np.ones(6)), BpConfig())

    def test_bad_config(self):
        with pytest.raises(ValueError):
            BpConfig(max_iters=0)
        with pytest.raises(ValueError):
            BpConfig(alpha=0.0)

    @pytest.mark.parametrize("variant", ["min-sum", "sum-product"])
    def test_run_invariants(self, ldpc96, variant):
        cfg = BpConfig(variant=variant, max_iters=30)
        for seed in range(30):
            run = decode(ldpc96, noisy_frame(96, 0.9, seed), cfg)
            assert run.converged == (not syndrome(ldpc96, run.hard_decision).any())
            assert 1 <= run.iterations_used <= 30
            assert len(run.flip_pct_per_iter) == run.iterations_used - 1
            assert all(0.0 <= p <= 100.0 for p in run.flip_pct_per_iter)
            per_vn = [int(run.flip_count_edge[edges].sum()) for edges in ldpc96.vn_adjacency]
            assert run.flip_count_vn.tolist() == per_vn

    def test_hard_decision_follows_app(self, ldpc96):
        run = decode(ldpc96, noisy_frame(96, 0.8, 1), BpConfig())
        assert np.array_equal(run.hard_decision, (run.app < 0).astype(np.uint8))

    def test_deterministic(self, ldpc96):
        frame = noisy_frame(96, 1.0, 9)
        a = decode(ldpc96, frame, BpConfig())
        b = decode(ldpc96, frame, BpConfig())
        assert np.array_equal(a.app, b.app)
        assert np.array_equal(a.flip_count_edge, b.flip_count_edge)
        assert a.iterations_used == b.iterations_used

    def test_min_sum_scale_covariance(self, ldpc96):
        cfg = BpConfig(max_iters=15, alpha=1e12)
        for seed in range(10):
            frame = noisy_frame(96, 1.0, seed)
            a = decode(ldpc96, frame, cfg)
            b = decode(ldpc96, LlrFrame(3.0 * frame.values), cfg)
            assert np.array_equal(a.hard_decision, b.hard_decision)
            assert np.array_equal(a.flip_count_edge, b.flip_count_edge)

    def test_full_budget_without_early_stop(self, ldpc96):
        run = decode(ldpc96, LlrFrame(np.full(96, 4.0)), BpConfig(max_iters=12, early_stop=False))
        assert run.converged
        assert run.iterations_used == 12
        assert len(run.flip_pct_per_iter) == 11

    def test_degree_one_variable_passes_its_channel_llr(self):
        graph = TannerGraph.from_dense(np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8))
        run = decode(graph, LlrFrame([1.5, -0.3, 0.7]), BpConfig(max_iters=3, early_stop=False))
        assert run.v2c[graph.vn_adjacency[0]].tolist() == [1.5]
        assert run.v2c[graph.vn_adjacency[2]].tolist() == [0.7]
