"""Benchmark harness: QSNR runs, KS test, CSV serialization, threading."""

import math

import numpy as np
import pytest

from pvq.amplitude import BetaParams
from pvq.bench import (
    CSV_COLUMNS,
    KS_COEFF_1PCT,
    QsnrReport,
    draw_amplitude_samples,
    emit_csv,
    parse_csv,
    run_beta_ks,
    run_qsnr,
    thread_count,
)


def test_identity_callable_gives_infinite_qsnr():
    reports = run_qsnr(lambda batch: batch, 8, [2.0], samples=100, seed=0)
    assert len(reports) == 1
    assert math.isinf(reports[0].qsnr_db) and reports[0].qsnr_db > 0


def test_pvq_beats_rtn_smoke():
    for bpw in (2.0, 3.0):
        pvq = run_qsnr("pvq", 8, [bpw], samples=400, seed=1)[0]
        rtn = run_qsnr("rtn", 8, [bpw], samples=400, seed=1)[0]
        assert pvq.qsnr_db > rtn.qsnr_db, (bpw, pvq, rtn)


def test_pvq_qsnr_monotone_in_rate():
    reports = run_qsnr("pvq", 16, [2.0, 3.0, 4.0], samples=400, seed=2)
    vals = [r.qsnr_db for r in reports]
    assert vals[0] < vals[1] < vals[2]


def test_rtn_qsnr_band():
    # Scalar RTN on Gaussian data lands in a known dB band per bit width.
    for bits in range(3, 9):
        r = run_qsnr("rtn", 16, [float(bits)], samples=1500, seed=11)[0]
        expected_low = 4.0 * bits
        expected_high = 7.0 * bits
        assert expected_low < r.qsnr_db < expected_high, (bits, r.qsnr_db)


def test_same_seed_same_result():
    a = run_qsnr("pvq", 8, [3.0], samples=600, seed=123)[0]
    b = run_qsnr("pvq", 8, [3.0], samples=600, seed=123)[0]
    assert a == b
    c = run_qsnr("pvq", 8, [3.0], samples=600, seed=124)[0]
    assert c.qsnr_db != a.qsnr_db


def test_thread_count_does_not_change_results(monkeypatch):
    monkeypatch.setenv("PVQ_THREADS", "1")
    assert thread_count() == 1
    single = run_qsnr("pvq", 8, [2.0], samples=600, seed=9)[0]
    monkeypatch.setenv("PVQ_THREADS", "3")
    assert thread_count() == 3
    multi = run_qsnr("pvq", 8, [2.0], samples=600, seed=9)[0]
    assert single.qsnr_db == multi.qsnr_db


def test_thread_count_validation(monkeypatch):
    monkeypatch.setenv("PVQ_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.setenv("PVQ_THREADS", "0")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.delenv("PVQ_THREADS")
    assert thread_count() >= 1


def test_unreachable_targets_are_skipped_with_notes():
    r = run_qsnr("pvq", 4, [0.25], samples=50, seed=0)[0]
    assert math.isnan(r.qsnr_db)
    assert "no pulse count fits" in r.note
    r = run_qsnr("rtn", 4, [2.5], samples=50, seed=0)[0]
    assert math.isnan(r.qsnr_db)
    assert "integer bits" in r.note
    with pytest.raises(ValueError):
        run_qsnr("dct", 4, [2.0], samples=50, seed=0)
    with pytest.raises(ValueError):
        run_qsnr("pvq", 4, [2.0], samples=0, seed=0)


# -- KS ---------------------------------------------------------------------


def test_amplitude_samples_deterministic_and_bounded():
    a = draw_amplitude_samples(4, 4, 500, seed=7)
    b = draw_amplitude_samples(4, 4, 500, seed=7)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a <= 1))
    assert draw_amplitude_samples(4, 4, 500, seed=8)[0] != a[0]


def test_beta_ks_accepts_matching_model():
    res = run_beta_ks(4, 4, samples=3000, seed=0)
    assert res.threshold == pytest.approx(KS_COEFF_1PCT / math.sqrt(3000))
    assert res.passed, res
    res2 = run_beta_ks(2, 2, samples=2000, seed=3)
    assert res2.passed, res2


def test_beta_ks_rejects_wrong_model():
    # Negative control: force comparison against Beta(2, 2) instead of the
    # matched Beta(2, 6) for D=4, G=4.
    res = run_beta_ks(4, 4, samples=3000, seed=0, params=BetaParams(2.0, 2.0))
    assert not res.passed
    assert res.statistic > 2 * res.threshold


def test_beta_ks_validation():
    with pytest.raises(ValueError):
        run_beta_ks(4, 4, samples=0, seed=0)


# -- CSV --------------------------------------------------------------------


def test_emit_csv_header_only():
    assert emit_csv([]) == (",".join(CSV_COLUMNS) + "\n").encode()


def test_emit_csv_deterministic_and_parseable():
    reports = [
        QsnrReport("pvq", 16, 3.0, 12.345678901234567, 1000, 42),
        QsnrReport("rtn", 16, 3.0, -1.5, 1000, 42),
        QsnrReport("pvq", 8, 0.25, math.nan, 10, 0),
        QsnrReport("id", 8, 2.0, math.inf, 10, 0),
    ]
    blob = emit_csv(reports)
    assert blob == emit_csv(reports)
    assert b"\r" not in blob
    lines = blob.decode().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[2] == "rtn,16,3,-1.5,1000,42"
    assert lines[3].endswith("nan,10,0")
    assert lines[4].endswith("inf,10,0")

    parsed = parse_csv(blob)
    assert len(parsed) == 4
    assert parsed[0].method == "pvq"
    assert parsed[0].qsnr_db == pytest.approx(12.345678901234567, abs=0)
    assert math.isnan(parsed[2].qsnr_db)
    assert math.isinf(parsed[3].qsnr_db)


def test_parse_csv_rejects_bad_header():
    with pytest.raises(ValueError):
        parse_csv(b"wrong,header\n")
