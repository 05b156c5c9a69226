"""Figure rendering for benchmark reports.

Renders the rate-distortion curves and the KS overlay to image files next to
the delimited output; uses the Agg backend so it works headless.
"""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import amplitude as _amp
from .bench import KsResult, QsnrReport


def render_qsnr_figure(reports: Sequence[QsnrReport], path) -> None:
    """One QSNR-vs-BPW line per (method, groupsize) series."""
    series = {}
    for r in reports:
        if math.isfinite(r.qsnr_db):
            series.setdefault((r.method, r.groupsize), []).append((r.bpw, r.qsnr_db))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for (method, groupsize), pts in sorted(series.items()):
        pts.sort()
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ax.plot(xs, ys, marker="o", label=f"{method} D={groupsize}")
    ax.set_xlabel("bits per weight")
    ax.set_ylabel("QSNR (dB)")
    ax.grid(alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_ks_figure(samples, params: _amp.BetaParams, path, result: KsResult | None = None) -> None:
    """Empirical CDF of the amplitude samples against the Beta model CDF."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(xs)
    emp = np.arange(1, n + 1) / n
    hi = min(1.0, float(xs[-1]) * 1.1) if n else 1.0
    grid = np.linspace(0.0, hi, 400)
    model = np.array([_amp.beta_cdf(float(x), params) for x in grid])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.step(xs, emp, where="post", label="empirical", lw=1.0)
    ax.plot(grid, model, label=f"Beta({params.alpha:g}, {params.beta:g})", lw=1.2)
    if result is not None:
        verdict = "pass" if result.passed else "FAIL"
        ax.set_title(
            f"KS = {result.statistic:.5f} (threshold {result.threshold:.5f}, {verdict})",
            fontsize=10,
        )
    ax.set_xlabel("normalized squared amplitude")
    ax.set_ylabel("CDF")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
