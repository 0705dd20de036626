"""
Tests for the Monte Carlo engine: counters, stopping, worker-count
independence and the output files.
"""

import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import HAMMING, LDPC_96
from eqml.code_model import is_codeword
from eqml.config import RunConfig
from eqml.harness import (
    CSV_HEADER,
    FlipTrace,
    SweepStats,
    build_context,
    diagnose_flips,
    draw_frame,
    emit_csv,
    flip_means,
    load_llr_frame,
    meta_path,
    run_sweep,
    stop_reached,
    write_flip_csv,
    write_meta,
)
from eqml.reprocess import DecodeOutcome
from eval.scoring import check_flip_shape

ZERO = np.zeros(7, dtype=np.uint8)
OTHER = np.array([1, 1, 1, 0, 0, 0, 0], dtype=np.uint8)


def outcome(status, codeword, iterations, tests=0):
    return DecodeOutcome(
        status=status,
        codeword=codeword,
        hard_decision=ZERO if codeword is None else codeword,
        tests_used=tests,
        total_iterations=iterations,
    )


def small_config(**overrides):
    values = dict(
        code=str(HAMMING),
        decoder="eqml-ews",
        ebn0=[2.0],
        min_frames=200,
        max_frame_errors=5,
        max_frames=2000,
        batch_frames=50,
        encode="random",
        seed=11,
    )
    values.update(overrides)
    return RunConfig(**values)


class TestSweepStats:
    def test_average_iterations(self):
        stats = SweepStats(ebn0_db=3.0, bits_per_frame=7)
        for status, iterations in [("converged-first-pass", 10), ("converged-first-pass", 30), ("recovered", 50), ("recovered", 60)]:
            stats.record(outcome(status, ZERO, iterations), ZERO)
        assert stats.i_avg == 37.5
        assert stats.i_avg_exact == Fraction(75, 2)
        assert stats.frame_errors == 0

    def test_wrong_codeword_and_failure_are_frame_errors(self):
        stats = SweepStats(ebn0_db=3.0, bits_per_frame=7)
        stats.record(outcome("recovered", OTHER, 40, tests=3), ZERO)
        stats.record(outcome("failure", None, 90, tests=30), ZERO)
        assert stats.frame_errors == 2
        assert stats.bit_errors == 3
        assert stats.ber == pytest.approx(3 / 14)
        assert stats.avg_tests == pytest.approx(16.5)
        assert stats.status_counts == {"recovered": 1, "failure": 1}

    def test_merge_is_associative(self):
        parts = []
        for k in range(3):
            s = SweepStats(ebn0_db=1.0, bits_per_frame=7)
            for i in range(k + 2):
                s.record(outcome("recovered", OTHER if i == k else ZERO, 10 * i + k, tests=i), ZERO)
            parts.append(s)
        a, b, c = parts
        assert a.merge(b).merge(c).counters() == a.merge(b.merge(c)).counters()
        assert a.merge(b).merge(c).status_counts == {"recovered": 9}

    def test_merge_refuses_other_points(self):
        with pytest.raises(ValueError):
            SweepStats(1.0, 7).merge(SweepStats(2.0, 7))

    def test_empty_point(self):
        stats = SweepStats(ebn0_db=1.0, bits_per_frame=7)
        assert (stats.fer, stats.ber, stats.i_avg, stats.avg_tests) == (0.0, 0.0, 0.0, 0.0)


class TestStopping:
    def test_min_frames_first(self):
        cfg = small_config(min_frames=100, max_frame_errors=5, max_frames=500)
        assert not stop_reached(50, 40, cfg)
        assert stop_reached(100, 5, cfg)
        assert not stop_reached(100, 4, cfg)
        assert stop_reached(500, 0, cfg)

    def test_error_target_stops_on_a_batch_boundary(self):
        stats = run_sweep(small_config(ebn0=[0.0]))[0]
        assert stats.frame_errors >= 5
        assert stats.frames >= 200
        assert stats.frames % 50 == 0

    def test_frame_cap(self):
        stats = run_sweep(small_config(decoder="ms", ebn0=[6.0], max_frame_errors=10_000, min_frames=300, max_frames=300))[0]
        assert stats.frames == 300


class TestDeterminism:
    def test_worker_count_does_not_change_counters(self):
        runs = [run_sweep(small_config(ebn0=[1.0, 2.0], workers=w)) for w in (1, 3)]
        assert [s.counters() for s in runs[0]] == [s.counters() for s in runs[1]]

    def test_same_seed_same_result(self):
        a = run_sweep(small_config(decoder="abp-nws"))[0]
        b = run_sweep(small_config(decoder="abp-nws"))[0]
        assert a.counters() == b.counters()

    @pytest.mark.slow
    def test_ten_thousand_frames_on_one_four_and_eight_workers(self):
        cfg = dict(ebn0=[2.0], min_frames=10_000, max_frames=10_000, batch_frames=100)
        runs = [run_sweep(small_config(workers=w, **cfg))[0].counters() for w in (1, 4, 8)]
        assert runs[0] == runs[1] == runs[2]
        assert runs[0][0] == 10_000


class TestModulation:
    def test_gray_qpsk_matches_bpsk_fer(self):
        frames = 4000
        runs = {}
        for modulation in ("bpsk", "qpsk"):
            cfg = small_config(
                decoder="ms", modulation=modulation, ebn0=[3.0], min_frames=frames, max_frames=frames,
                max_frame_errors=10 ** 6, batch_frames=500,
            )
            runs[modulation] = run_sweep(cfg)[0]
        bpsk, qpsk = runs["bpsk"], runs["qpsk"]
        assert bpsk.frames == qpsk.frames == frames
        assert bpsk.frame_errors > 0
        pooled = (bpsk.frame_errors + qpsk.frame_errors) / (2 * frames)
        assert abs(bpsk.fer - qpsk.fer) <= 4 * math.sqrt(2 * pooled * (1 - pooled) / frames)


class TestContext:
    def test_rate_is_dimension_over_transmitted(self, tmp_path):
        assert build_context(small_config()).rate == pytest.approx(4 / 7)
        mask = tmp_path / "mask.txt"
        mask.write_text("0\n")
        assert build_context(small_config(puncture=str(mask))).rate == pytest.approx(4 / 6)

    def test_random_codewords_are_valid_and_reproducible(self):
        context = build_context(small_config())
        words = [draw_frame(context, 2.0, i)[0] for i in range(20)]
        assert all(is_codeword(context.graph, w) for w in words)
        assert len({tuple(w) for w in words}) > 1
        again, _ = draw_frame(context, 2.0, 7)
        assert np.array_equal(again, words[7])

    def test_zero_encoding(self):
        context = build_context(small_config(encode="zero"))
        word, frame = draw_frame(context, 2.0, 0)
        assert not word.any()
        assert len(frame) == 7


class TestOutputs:
    def test_csv_header_and_rows(self, tmp_path):
        stats = run_sweep(small_config(decoder="ms", ebn0=[1.0, 2.0], max_frames=200))
        path = emit_csv(stats, tmp_path / "out" / "ms.csv")
        rows = list(csv.reader(path.open()))
        assert rows[0] == CSV_HEADER
        assert [r[0] for r in rows[1:]] == ["1", "2"]
        assert all(r[1] == "200" for r in rows[1:])

    def test_documented_plot_reads_the_fer_column(self):
        # README and QUICKSTART plot "using 1:5"
        assert CSV_HEADER[0] == "ebn0_db"
        assert CSV_HEADER[4] == "fer"

    def test_empty_run_writes_header_only(self, tmp_path):
        path = emit_csv([], tmp_path / "empty.csv")
        assert path.read_text() == ",".join(CSV_HEADER) + "\n"

    def test_meta_sidecar(self, tmp_path):
        cfg = small_config(decoder="ms", budget_fair=True, j_max=3, max_frames=200)
        context = build_context(cfg)
        stats = run_sweep(cfg, context=context)
        out = tmp_path / "ms.csv"
        path = write_meta(cfg, context, stats, out)
        assert path == meta_path(out) == tmp_path / "ms.csv.meta.json"
        meta = json.loads(path.read_text())
        assert meta["rate_convention"] == "K/N_transmitted"
        assert meta["baseline_max_iters"] == 15 * 30
        assert meta["code"]["dimension"] == 4
        assert meta["config"]["decoder"] == "ms"
        assert sum(meta["points"][0]["status_counts"].values()) == 200

    def test_flip_files(self, tmp_path):
        traces = [
            FlipTrace(0, "converged", [10.0, 0.0, 0.0]),
            FlipTrace(1, "failed", [20.0, 30.0, 40.0]),
            FlipTrace(2, "failed", [40.0, 30.0, 20.0]),
        ]
        raw, mean = write_flip_csv(traces, tmp_path / "flips.csv")
        raw_rows = list(csv.DictReader(raw.open()))
        assert len(raw_rows) == 9
        assert raw_rows[0] == {"iter": "2", "pct": "10", "outcome": "converged", "frame_id": "0"}
        mean_rows = list(csv.DictReader(mean.open()))
        assert mean.name == "flips_mean.csv"
        failed = [r for r in mean_rows if r["outcome"] == "failed"]
        assert [r["mean_pct"] for r in failed] == ["30", "30", "30"]
        assert {r["frames"] for r in failed} == {"2"}

    def test_load_llr_frame(self, tmp_path):
        path = tmp_path / "frame.txt"
        path.write_text("1.5, -2\n0.25 3\n")
        assert load_llr_frame(path).values.tolist() == [1.5, -2.0, 0.25, 3.0]
        path.write_text("1.0 oops\n")
        with pytest.raises(ValueError):
            load_llr_frame(path)


class TestFlipDiagnostics:
    def test_traces_cover_every_iteration(self):
        cfg = small_config(decoder="ms", encode="zero", i_max=20)
        traces = diagnose_flips(cfg, 30)
        assert len(traces) == 30
        assert all(len(t.pct) == 19 for t in traces)
        assert {t.outcome for t in traces} <= {"converged", "failed"}

    def test_only_min_sum(self):
        with pytest.raises(ValueError):
            diagnose_flips(small_config(decoder="spa"), 5)

    @pytest.mark.slow
    def test_failed_frames_plateau_while_converged_ones_go_quiet(self):
        cfg = small_config(code=str(LDPC_96), decoder="ms", encode="zero", ebn0=[2.0])
        means = flip_means(diagnose_flips(cfg, 3000))
        check = check_flip_shape(means["converged"], means["failed"])
        assert check["passed"], check
