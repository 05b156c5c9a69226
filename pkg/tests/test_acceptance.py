"""End-to-end acceptance checks.

Each test exercises one numbered criterion at its stated tolerance, prints a
[PASS]/[FAIL] line (surfaced in the run report via -rA), and enforces the
stated runtime budget.
"""

import time

import numpy as np

from pvq.amplitude import BetaParams, beta_cdf, beta_ppf
from pvq.bench import run_beta_ks, run_qsnr
from pvq.cli import main
from pvq.codec import decode, encode, quantize_direction
from pvq.coherence import derive_specs, rotate_matrix, unrotate_matrix
from pvq.formats import write_dense, write_quantized
from pvq.lattice import build_size_table, count_codes, enumerate_pyramid
from pvq.pipeline import (
    PvqConfig,
    dequantize_layer,
    direction_bits_per_weight,
    effective_bpw,
    estimate_hessian,
    proxy_loss,
    quantize_layer,
)


def _report(n: int, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_1_size_table_anchor():
    t0 = time.perf_counter()
    ok = count_codes(2, 7) == 28
    ok &= all(count_codes(d, 0) == 1 for d in range(0, 9))
    ok &= all(count_codes(0, k) == 0 for k in range(1, 9))
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    _report(1, ok, f"N(2,7)=28 and base cases ({elapsed:.3f}s < 1s)")


def test_criterion_2_bijectivity():
    t0 = time.perf_counter()
    ok = True
    checked = 0
    for d in range(1, 5):
        for k in range(0, 9):
            table = build_size_table(d, k)
            total = table.N[d][k].to_int()
            seen = set()
            for p in enumerate_pyramid(d, k):
                arr = np.array(p, dtype=np.int64)
                c = encode(arr, table).to_int()
                ok &= 0 <= c < total and c not in seen
                seen.add(c)
                ok &= tuple(decode(encode(arr, table), table)) == p
                checked += 1
            ok &= len(seen) == total
    # Negative entries ahead of the final position must survive the roundtrip.
    table = build_size_table(3, 4)
    for p in [(-2, 1, 1), (-1, -2, -1), (-4, 0, 0), (1, -3, 0), (0, -1, 3)]:
        ok &= tuple(decode(encode(np.array(p), table), table)) == p
    # Spot check a cell with N(d,k) approaching 10^6 by sampling code values.
    d, k = 8, 10
    table = build_size_table(d, k)
    total = table.N[d][k].to_int()
    ok &= total == 658_048 and total <= 10**6
    rng = np.random.default_rng(7)
    spots = {0, total - 1} | {int(c) for c in rng.integers(0, total, 2000)}
    for c in spots:
        p = decode(c, table)
        ok &= int(np.abs(p).sum()) == k
        ok &= encode(p, table).to_int() == c
        checked += 1
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30.0
    _report(2, ok, f"bijective on {checked} points incl. spot cell N=658048 ({elapsed:.1f}s < 30s)")


def test_criterion_3_quantizer_near_optimality():
    t0 = time.perf_counter()
    ok = True
    worst = 0.0
    for D in (2, 3, 4):
        for K in range(2, 9):
            table = build_size_table(D, K)
            pts = np.array(list(enumerate_pyramid(D, K)), dtype=np.float64)
            unit = pts / np.linalg.norm(pts, axis=1, keepdims=True)
            rng = np.random.default_rng(1000 * D + K)
            V = rng.standard_normal((1000, D))
            energy = (V * V).sum(axis=1)
            best = np.maximum(V @ unit.T, 0.0).max(axis=1)
            exhaustive = float((energy - best * best).sum())
            greedy = 0.0
            for v in V:
                p = quantize_direction(v, table).astype(np.float64)
                u = p / np.linalg.norm(p)
                s = max(float(u @ v), 0.0)
                greedy += float(v @ v) - s * s
            ratio = greedy / exhaustive
            worst = max(worst, ratio)
            ok &= ratio <= 1.01
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60.0
    _report(3, ok, f"greedy/exhaustive MSE worst ratio {worst:.5f} <= 1.01 ({elapsed:.1f}s < 60s)")


def test_criterion_4_amplitude_ks():
    t0 = time.perf_counter()
    res = run_beta_ks(4, 4, samples=10_000, seed=0)
    ok = res.statistic < 0.0163 and res.passed
    control = run_beta_ks(4, 4, samples=10_000, seed=0, params=BetaParams(2.0, 2.0))
    ok &= not control.passed
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 10.0
    _report(
        4,
        ok,
        f"KS {res.statistic:.5f} < 0.0163 vs Beta(2,6); Beta(2,2) control "
        f"{control.statistic:.3f} rejected ({elapsed:.1f}s < 10s)",
    )


def test_criterion_5_qsnr_ordering():
    t0 = time.perf_counter()
    ok = True
    margins = []
    for D in (8, 16, 32):
        pvq = run_qsnr("pvq", D, [2.0, 3.0, 4.0], samples=1000, seed=42)
        rtn = run_qsnr("rtn", D, [2.0, 3.0, 4.0], samples=1000, seed=42)
        for p, r in zip(pvq, rtn):
            ok &= p.qsnr_db > r.qsnr_db
            margins.append(p.qsnr_db - r.qsnr_db)
        ok &= pvq[0].qsnr_db < pvq[1].qsnr_db < pvq[2].qsnr_db
        ok &= rtn[0].qsnr_db < rtn[1].qsnr_db < rtn[2].qsnr_db
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120.0
    _report(
        5,
        ok,
        f"PVQ > RTN at BPW 2/3/4, D 8/16/32 (min margin {min(margins):.2f} dB), "
        f"monotone in BPW ({elapsed:.1f}s < 2min)",
    )


def test_criterion_6_error_feedback():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    wins = 0
    trials = 20
    for _ in range(trials):
        C = 256
        W = rng.standard_normal((64, C))
        X = rng.standard_normal((320, C)) @ (rng.standard_normal((C, C)) / 16.0)
        state = estimate_hessian(X)
        plain_cfg = PvqConfig(groupsize=16, bits_per_group=48)
        fb_cfg = PvqConfig(groupsize=16, bits_per_group=48, hessian_feedback=True)
        plain = proxy_loss(W, dequantize_layer(quantize_layer(W, plain_cfg)), state.H)
        fed = proxy_loss(W, dequantize_layer(quantize_layer(W, fb_cfg, state)), state.H)
        if fed <= plain * (1.0 + 1e-9):
            wins += 1
    ok = wins == trials
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120.0
    _report(6, ok, f"feedback proxy loss <= plain on {wins}/{trials} instances ({elapsed:.1f}s < 2min)")


def test_criterion_7_bit_accounting(tmp_path):
    ok = effective_bpw(PvqConfig(groupsize=128, bits_per_group=384)) == 3.125
    ok &= effective_bpw(PvqConfig(groupsize=16, bits_per_group=48, amplitude_bits=4)) == 3.25
    ok &= direction_bits_per_weight(PvqConfig(groupsize=16, bits_per_group=40)) == 2.5
    sizes_ok = True
    rng = np.random.default_rng(77)
    for cfg, N, C in (
        (PvqConfig(groupsize=16, bits_per_group=48, amplitude_bits=4), 24, 96),
        (PvqConfig(groupsize=8, bits_per_group=20), 10, 40),
    ):
        W = rng.standard_normal((N, C))
        path = tmp_path / f"t{cfg.amplitude_bits}.pvqt"
        write_quantized(path, quantize_layer(W, cfg))
        G = C // cfg.groupsize
        expect = 45 + (N * G * cfg.bits_per_group + 7) // 8
        if cfg.amplitude_bits > 0:
            expect += N * ((G * cfg.amplitude_bits + 7) // 8 + 4)
        else:
            expect += N * G * 4
        sizes_ok &= path.stat().st_size == expect
    ok &= sizes_ok
    _report(7, ok, "BPW anchors 3.125 / 3.25 / 2.5 exact; file sizes match header arithmetic")


def test_criterion_8_determinism(tmp_path, capsys):
    rng = np.random.default_rng(88)
    W = rng.standard_normal((32, 64)).astype(np.float32)
    dense = tmp_path / "w.dtf"
    write_dense(dense, W)
    blobs = []
    for name in ("a.pvqt", "b.pvqt"):
        out = tmp_path / name
        rc = main(
            [
                "quantize", "--input", str(dense), "--groupsize", "16",
                "--direction-bits", "3", "--amplitude-bits", "4",
                "--coherence", "--seed", "11", "-o", str(out),
            ]
        )
        assert rc == 0
        blobs.append(out.read_bytes())
    capsys.readouterr()
    ok = blobs[0] == blobs[1]

    M = np.random.default_rng(89).standard_normal((256, 512))
    row_spec, col_spec = derive_specs(11, 256, 512)
    back = unrotate_matrix(rotate_matrix(M, row_spec, col_spec), row_spec, col_spec)
    rel = float(np.linalg.norm(back - M) / np.linalg.norm(M))
    ok &= rel <= 1e-5
    _report(8, ok, f"byte-identical quantize runs; rotation roundtrip rel err {rel:.2e} <= 1e-5")


def test_criterion_9_beta_accuracy():
    t0 = time.perf_counter()
    pairs = [(0.5, 0.5), (1.0, 1.0), (2.0, 6.0), (8.0, 30.0), (32.0, 32.0), (512.0, 512.0)]
    qs = (np.arange(1000) + 0.5) / 1000.0
    worst = 0.0
    ok = True
    for a, b in pairs:
        params = BetaParams(a, b)
        err = max(abs(beta_cdf(beta_ppf(float(q), params), params) - q) for q in qs)
        worst = max(worst, err)
        ok &= err <= 1e-7
    uniform = BetaParams(1.0, 1.0)
    ident = max(
        max(abs(beta_ppf(float(q), uniform) - q) for q in qs),
        max(abs(beta_cdf(float(q), uniform) - q) for q in qs),
    )
    ok &= ident <= 1e-12
    elapsed = time.perf_counter() - t0
    _report(
        9,
        ok,
        f"cdf(ppf(q)) worst err {worst:.2e} <= 1e-7 on six pairs; "
        f"Beta(1,1) identity {ident:.2e} <= 1e-12 ({elapsed:.1f}s)",
    )
