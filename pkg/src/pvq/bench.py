"""Property-level benchmark harness.

Measures QSNR (10 log10 of signal energy over quantization-error energy) for
the pyramid quantizer and the round-to-nearest baseline on iid standard
Gaussian sources, and runs the Kolmogorov-Smirnov check of the Beta amplitude
model.  Reports serialize to CSV with a stable column order.

Sampling is reproducible: batches draw from seeds spawned deterministically
off the master seed, so the PVQ_THREADS worker count never changes results.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Sequence, Union

import numpy as np

from . import amplitude as _amp
from . import codec, lattice, pipeline

BATCH_SIZE = 250
# Two-sided asymptotic KS critical coefficient at alpha = 0.01.
KS_COEFF_1PCT = 1.63

CSV_COLUMNS = ("method", "groupsize", "bpw", "qsnr_db", "samples", "seed")


def thread_count() -> int:
    """Worker cap: PVQ_THREADS if set, else the CPU count."""
    raw = os.environ.get("PVQ_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"PVQ_THREADS must be a positive integer, got {raw!r}")
        if n < 1:
            raise ValueError(f"PVQ_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class QsnrReport:
    method: str
    groupsize: int
    bpw: float
    qsnr_db: float
    samples: int
    seed: int
    note: str = ""  # skip reason; not serialized


def _pvq_reconstruct(batch: np.ndarray, table) -> np.ndarray:
    out = np.empty_like(batch)
    for i, v in enumerate(batch):
        p = codec.quantize_direction(v, table).astype(np.float64)
        u = p / np.linalg.norm(p)
        s = max(float(u @ v), 0.0)
        out[i] = s * u
    return out


def run_qsnr(
    method: Union[str, Callable[[np.ndarray], np.ndarray]],
    D: int,
    bpw_targets: Sequence[float],
    samples: int,
    seed: int,
) -> List[QsnrReport]:
    """QSNR of one quantizer on iid Gaussian D-vectors, per BPW target.

    method is "pvq", "rtn", or a callable mapping a (n, D) batch to its
    reconstruction (plug-in quantizers for the harness).  Unreachable targets
    come back with qsnr_db = nan and the reason in .note.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    label = method if isinstance(method, str) else getattr(method, "__name__", "custom")
    if isinstance(method, str) and method not in ("pvq", "rtn"):
        raise ValueError(f"unknown method {method!r}")

    reports = []
    for bpw in bpw_targets:
        bits = int(round(bpw * D))
        reconstruct = None
        note = ""
        if callable(method):
            reconstruct = method
        elif method == "pvq":
            if bits < 1:
                note = f"bits_per_group={bits} below 1"
            else:
                K = lattice.choose_pulses(D, bits)
                if K < 1:
                    note = f"no pulse count fits {bits} bits at D={D}"
                else:
                    table = lattice.build_size_table(D, K)
                    reconstruct = lambda b, _t=table: _pvq_reconstruct(b, _t)
        else:  # rtn
            if abs(bpw - round(bpw)) > 1e-9 or round(bpw) < 2:
                note = f"rtn needs integer bits >= 2, got {bpw}"
            else:
                reconstruct = lambda b, _n=int(round(bpw)): pipeline.rtn_quantize(b, D, _n)

        if reconstruct is None:
            reports.append(QsnrReport(label, D, float(bpw), math.nan, samples, seed, note))
            continue

        n_batches = (samples + BATCH_SIZE - 1) // BATCH_SIZE
        children = np.random.SeedSequence(seed).spawn(n_batches)

        def work(i: int):
            count = min(BATCH_SIZE, samples - i * BATCH_SIZE)
            batch = np.random.default_rng(children[i]).standard_normal((count, D))
            recon = reconstruct(batch)
            return float((batch * batch).sum()), float(((batch - recon) ** 2).sum())

        with ThreadPoolExecutor(max_workers=thread_count()) as pool:
            parts = list(pool.map(work, range(n_batches)))
        signal = sum(p[0] for p in parts)
        error = sum(p[1] for p in parts)
        qsnr = math.inf if error == 0.0 else 10.0 * math.log10(signal / error)
        reports.append(QsnrReport(label, D, float(bpw), qsnr, samples, seed))
    return reports


def draw_amplitude_samples(D: int, G: int, samples: int, seed: int) -> np.ndarray:
    """Normalized squared first-group amplitudes of iid Gaussian (G*D)-vectors."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    X = rng.standard_normal((samples, G * D))
    first = (X[:, :D] ** 2).sum(axis=1)
    return first / (X * X).sum(axis=1)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    threshold: float
    passed: bool
    groupsize: int
    groups: int
    samples: int
    seed: int
    alpha: float = 0.01


def run_beta_ks(
    D: int, G: int, samples: int, seed: int, params: _amp.BetaParams | None = None
) -> KsResult:
    """Two-sided KS test of sampled amplitudes against the Beta model.

    params defaults to Beta(D/2, D(G-1)/2); pass a different one for negative
    controls.  Threshold is the alpha = 0.01 asymptotic critical value.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if params is None:
        params = _amp.BetaParams.for_groups(D, G)
    xs = np.sort(draw_amplitude_samples(D, G, samples, seed))
    F = np.array([_amp.beta_cdf(float(x), params) for x in xs])
    n = samples
    grid = np.arange(n, dtype=np.float64)
    stat = float(np.maximum(F - grid / n, (grid + 1.0) / n - F).max())
    threshold = KS_COEFF_1PCT / math.sqrt(n)
    return KsResult(
        statistic=stat,
        threshold=threshold,
        passed=stat < threshold,
        groupsize=D,
        groups=G,
        samples=samples,
        seed=seed,
    )


def emit_csv(reports: Sequence[QsnrReport]) -> bytes:
    """Serialize reports to CSV: fixed column order, UTF-8, LF line endings."""
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        lines.append(
            ",".join(
                (
                    r.method,
                    str(r.groupsize),
                    format(r.bpw, ".17g"),
                    _fmt_float(r.qsnr_db),
                    str(r.samples),
                    str(r.seed),
                )
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def _fmt_float(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def parse_csv(data: bytes) -> List[QsnrReport]:
    """Inverse of emit_csv."""
    text = data.decode("utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValueError("unrecognized CSV header")
    out = []
    for ln in lines[1:]:
        method, groupsize, bpw, qsnr, samples, seed = ln.split(",")
        out.append(
            QsnrReport(
                method=method,
                groupsize=int(groupsize),
                bpw=float(bpw),
                qsnr_db=float(qsnr),
                samples=int(samples),
                seed=int(seed),
            )
        )
    return out
