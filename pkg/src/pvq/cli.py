"""Command-line interface.

Subcommands: quantize, dequantize, info, table, bench (qsnr | ks), selftest.
Every failure exits nonzero with a single-line diagnostic on stderr; output
files are written atomically.

Note on reported BPW: by default the reported figure counts amplitude storage
as actually stored (32-bit floats when --amplitude-bits 0); pass
--report-amplitude-bits 16 to count full-precision amplitudes as 16-bit model
scalars instead, which reproduces the conventional table numbers.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import bench as _bench
from . import codec, formats, lattice, pipeline
from . import amplitude as _amp


def _fail(message: str) -> int:
    print(f"pvq: error: {message}", file=sys.stderr)
    return 1


def _parse_int_list(raw: str, what: str):
    try:
        return [int(tok) for tok in raw.split(",") if tok]
    except ValueError:
        raise ValueError(f"{what} must be a comma-separated integer list, got {raw!r}")


def _parse_float_list(raw: str, what: str):
    try:
        return [float(tok) for tok in raw.split(",") if tok]
    except ValueError:
        raise ValueError(f"{what} must be a comma-separated number list, got {raw!r}")


# -- quantize ---------------------------------------------------------------


def _cmd_quantize(args) -> int:
    W = formats.read_dense(args.input)
    if W.ndim != 2:
        return _fail(f"quantize expects a 2-D tensor, got {W.ndim}-D")
    D = args.groupsize
    bits_real = args.direction_bits * D
    bits = int(round(bits_real))
    if abs(bits_real - bits) > 1e-9 or bits < 1:
        return _fail(
            f"direction-bits * groupsize must be a positive integer, got {bits_real}"
        )
    config = pipeline.PvqConfig(
        groupsize=D,
        bits_per_group=bits,
        amplitude_bits=args.amplitude_bits,
        coherence=args.coherence,
        coherence_seed=args.seed,
        hessian_feedback=args.calib is not None,
        dampening=args.dampening,
    )

    hessian = None
    if args.calib is not None:
        X = formats.read_dense(args.calib)
        if X.ndim != 2 or X.shape[1] != W.shape[1]:
            return _fail(
                f"calibration shape {X.shape} does not match input columns {W.shape[1]}"
            )
        hessian = pipeline.estimate_hessian(X, args.dampening)

    qt = pipeline.quantize_layer(W, config, hessian)
    formats.write_quantized(args.output, qt)

    report_bits = args.report_amplitude_bits if args.report_amplitude_bits else 32
    bpw = pipeline.effective_bpw(config, amplitude_report_bits=report_bits)
    print(f"K = {config.pulses}")
    print(f"achieved BPW = {bpw:g}")
    if hessian is not None:
        plain_cfg = dataclasses.replace(config, hessian_feedback=False)
        plain = pipeline.dequantize_layer(pipeline.quantize_layer(W, plain_cfg))
        corrected = pipeline.dequantize_layer(qt)
        before = pipeline.proxy_loss(W, plain, hessian.H)
        after = pipeline.proxy_loss(W, corrected, hessian.H)
        print(f"proxy loss before feedback = {before:.6g}")
        print(f"proxy loss after feedback = {after:.6g}")
    print(f"wrote {args.output} ({Path(args.output).stat().st_size} bytes)")
    return 0


def _cmd_dequantize(args) -> int:
    qt = formats.read_quantized(args.input)
    W = pipeline.dequantize_layer(qt)
    formats.write_dense(args.output, W.astype(np.float32))
    print(f"wrote {args.output} ({qt.rows} x {qt.cols} float32)")
    return 0


def _cmd_info(args) -> int:
    info = formats.inspect_file(args.input)
    print(f"rows = {info.rows}")
    print(f"cols = {info.cols}")
    print(f"groupsize = {info.groupsize}")
    print(f"groups per row = {info.groups_per_row}")
    print(f"pulses K = {info.pulses}")
    print(f"bits per group = {info.bits_per_group}")
    print(f"amplitude bits = {info.amplitude_bits}")
    print(f"coherence = {'on' if info.coherence else 'off'} (seed {info.coherence_seed})")
    print(f"hessian feedback = {'on' if info.hessian_used else 'off'}")
    print(f"format version = {info.version}")
    print(f"header bytes = {info.header_bytes}")
    print(f"direction payload bytes = {info.direction_bytes} (crc32 {info.direction_crc32:08x})")
    print(f"amplitude payload bytes = {info.amplitude_bytes} (crc32 {info.amplitude_crc32:08x})")
    print(f"file bytes = {info.file_bytes}")
    print(f"stored BPW = {info.stored_bpw:.4f}")
    return 0


# -- table ------------------------------------------------------------------


def _cmd_table(args) -> int:
    table = lattice.build_size_table(args.groupsize, args.pulses)
    lines = []
    for d in range(table.D + 1):
        for k in range(table.K + 1):
            lines.append(f"{d} {k} {table.N[d][k].to_int()} {table.V[d][k].to_int()}")
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    return 0


# -- bench ------------------------------------------------------------------


def _figure_path(args, csv_path):
    if args.no_figure:
        return None
    if args.figure:
        return args.figure
    if csv_path:
        return str(Path(csv_path).with_suffix(".png"))
    return None


def _cmd_bench_qsnr(args) -> int:
    groupsizes = _parse_int_list(args.groupsize, "--groupsize")
    targets = _parse_float_list(args.bpw, "--bpw")
    methods = [m for m in args.methods.split(",") if m]
    reports = []
    for D in groupsizes:
        for method in methods:
            reports.extend(_bench.run_qsnr(method, D, targets, args.samples, args.seed))
    data = _bench.emit_csv(reports)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    with open(args.output, "wb") as f:
        f.write(data)
    print(f"wrote {args.output} ({len(reports)} rows)")
    for r in reports:
        if r.note:
            print(f"skipped {r.method} D={r.groupsize} bpw={r.bpw:g}: {r.note}")
    fig = _figure_path(args, args.output)
    if fig:
        from . import plots

        plots.render_qsnr_figure(reports, fig)
        print(f"wrote {fig}")
    return 0


def _cmd_bench_ks(args) -> int:
    result = _bench.run_beta_ks(args.groupsize, args.groups, args.samples, args.seed)
    verdict = "pass" if result.passed else "FAIL"
    print(
        f"ks statistic = {result.statistic:.6f} "
        f"threshold = {result.threshold:.6f} ({verdict})"
    )
    if args.output:
        params = _amp.BetaParams.for_groups(args.groupsize, args.groups)
        text = (
            "groupsize,groups,samples,seed,alpha,beta,statistic,threshold,passed\n"
            f"{args.groupsize},{args.groups},{args.samples},{args.seed},"
            f"{params.alpha:g},{params.beta:g},"
            f"{result.statistic:.10g},{result.threshold:.10g},{int(result.passed)}\n"
        )
        with open(args.output, "wb") as f:
            f.write(text.encode("utf-8"))
        print(f"wrote {args.output}")
    fig = _figure_path(args, args.output)
    if fig:
        from . import plots

        samples = _bench.draw_amplitude_samples(
            args.groupsize, args.groups, args.samples, args.seed
        )
        params = _amp.BetaParams.for_groups(args.groupsize, args.groups)
        plots.render_ks_figure(samples, params, fig, result)
        print(f"wrote {fig}")
    return 0 if result.passed else 1


# -- selftest ---------------------------------------------------------------


def _cmd_selftest(args) -> int:
    failures = 0
    cells = points = probes = 0
    rng = np.random.default_rng(20260823)
    for d in range(1, args.max_d + 1):
        for k in range(args.max_k + 1):
            table = lattice.build_size_table(d, k)
            total = table.N[d][k].to_int()
            seen = set()
            for p in lattice.enumerate_pyramid(d, k):
                arr = np.array(p, dtype=np.int64)
                code = codec.encode(arr, table).to_int()
                if not 0 <= code < total:
                    failures += 1
                    print(f"FAIL range d={d} k={k} point={p} code={code}")
                elif code in seen:
                    failures += 1
                    print(f"FAIL collision d={d} k={k} point={p} code={code}")
                else:
                    seen.add(code)
                back = codec.decode(codec.encode(arr, table), table)
                if not np.array_equal(back, arr):
                    failures += 1
                    print(f"FAIL roundtrip d={d} k={k} point={p} decoded={tuple(back)}")
                points += 1
            if len(seen) != total:
                failures += 1
                print(f"FAIL coverage d={d} k={k}: {len(seen)} codes for {total} points")
            if k >= 1:
                trials = [rng.standard_normal(d) for _ in range(32)]
                trials += [
                    np.ones(d),
                    -np.ones(d),
                    np.eye(d)[0] if d >= 1 else np.ones(d),
                    (-1.0) ** np.arange(d),
                    np.zeros(d),
                ]
                for v in trials:
                    q = codec.quantize_direction(v, table)
                    probes += 1
                    if int(np.abs(q).sum()) != k:
                        failures += 1
                        print(f"FAIL quantizer d={d} k={k} input={v.tolist()} output={q.tolist()}")
            cells += 1
    status = "FAIL" if failures else "pass"
    print(
        f"selftest: {cells} cells, {points} points, {probes} quantizer probes, "
        f"{failures} failures ({status})"
    )
    return 1 if failures else 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvq", description="Pyramid vector quantization codec"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="quantize a dense 2-D tensor")
    q.add_argument("--input", required=True)
    q.add_argument("--calib", help="calibration activations (M x C dense file)")
    q.add_argument("--groupsize", type=int, required=True)
    q.add_argument("--direction-bits", type=float, required=True)
    q.add_argument("--amplitude-bits", type=int, default=0)
    q.add_argument("--coherence", action="store_true")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--dampening", type=float, default=pipeline.DEFAULT_DAMPENING)
    q.add_argument("--report-amplitude-bits", type=int, default=0)
    q.add_argument("-o", "--output", required=True)
    q.set_defaults(func=_cmd_quantize)

    d = sub.add_parser("dequantize", help="reconstruct a dense tensor")
    d.add_argument("--input", required=True)
    d.add_argument("-o", "--output", required=True)
    d.set_defaults(func=_cmd_dequantize)

    i = sub.add_parser("info", help="describe a quantized file")
    i.add_argument("--input", required=True)
    i.set_defaults(func=_cmd_info)

    t = sub.add_parser("table", help="dump the size table")
    t.add_argument("--groupsize", type=int, required=True)
    t.add_argument("--pulses", type=int, required=True)
    t.add_argument("-o", "--output")
    t.set_defaults(func=_cmd_table)

    b = sub.add_parser("bench", help="benchmark harness")
    bsub = b.add_subparsers(dest="bench_command", required=True)

    bq = bsub.add_parser("qsnr", help="QSNR sweep on Gaussian sources")
    bq.add_argument("--groupsize", default="8,16,32")
    bq.add_argument("--bpw", default="2,3,4")
    bq.add_argument("--methods", default="pvq,rtn")
    bq.add_argument("--samples", type=int, default=1000)
    bq.add_argument("--seed", type=int, default=0)
    bq.add_argument("-o", "--output", required=True)
    bq.add_argument("--figure")
    bq.add_argument("--no-figure", action="store_true")
    bq.set_defaults(func=_cmd_bench_qsnr)

    bk = bsub.add_parser("ks", help="KS test of the amplitude model")
    bk.add_argument("--groupsize", type=int, default=4)
    bk.add_argument("--groups", type=int, default=4)
    bk.add_argument("--samples", type=int, default=10000)
    bk.add_argument("--seed", type=int, default=0)
    bk.add_argument("-o", "--output")
    bk.add_argument("--figure")
    bk.add_argument("--no-figure", action="store_true")
    bk.set_defaults(func=_cmd_bench_ks)

    s = sub.add_parser("selftest", help="exhaustive codec verification")
    s.add_argument("--max-d", type=int, default=4)
    s.add_argument("--max-k", type=int, default=8)
    s.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
