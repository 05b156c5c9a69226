"""End-to-end layer quantization.

A weight matrix is (optionally) made incoherent with a randomized Hadamard
rotation, split row-wise into groups of D columns, and each group is replaced
by an amplitude times a spherical pyramid codeword.  When a calibration
Hessian is supplied, the quantization error of each group is propagated into
the not-yet-quantized columns through the Cholesky factor of the inverse
Hessian, which minimizes the layer-wise proxy loss Tr((W - What) H (W - What)^T).
Amplitudes are either stored at full precision or companded through the Beta
quantile quantizer.

Also provides the on-the-fly activation quantizer (no Hessian, full-precision
amplitudes) and the round-to-nearest scalar baseline used by the benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg as _sla

from . import amplitude as _amp
from . import codec, coherence, lattice
from .codec import PackedCodes, round_half_away

DEFAULT_DAMPENING = 0.01


@dataclass(frozen=True)
class PvqConfig:
    """Static description of one quantization run.

    The pulse count K is derived from (groupsize, bits_per_group) at
    construction; amplitude_bits == 0 keeps amplitudes at full precision.
    """

    groupsize: int
    bits_per_group: int
    amplitude_bits: int = 0
    coherence: bool = False
    coherence_seed: int = 0
    hessian_feedback: bool = False
    dampening: float = DEFAULT_DAMPENING
    pulses: int = field(init=False)

    def __post_init__(self):
        if self.groupsize < 2:
            raise ValueError(f"groupsize must be >= 2, got {self.groupsize}")
        if self.bits_per_group < 1:
            raise ValueError(f"bits_per_group must be >= 1, got {self.bits_per_group}")
        if self.amplitude_bits < 0:
            raise ValueError(f"amplitude_bits must be >= 0, got {self.amplitude_bits}")
        if self.dampening < 0:
            raise ValueError(f"dampening must be >= 0, got {self.dampening}")
        if not 0 <= self.coherence_seed < (1 << 64):
            raise ValueError("coherence_seed must be a 64-bit value")
        object.__setattr__(
            self, "pulses", lattice.choose_pulses(self.groupsize, self.bits_per_group)
        )


def direction_bits_per_weight(config: PvqConfig) -> float:
    return config.bits_per_group / config.groupsize


def effective_bpw(config: PvqConfig, amplitude_report_bits: Optional[int] = None) -> float:
    """Effective bits per weight: direction bits plus amortized amplitude bits.

    Full-precision amplitudes are counted as 16 bits by convention unless
    amplitude_report_bits overrides it (e.g. 32 to count the actual stored
    floats).  The per-row norm overhead of quantized-amplitude files is not
    included here.
    """
    if config.amplitude_bits > 0:
        amp_bits = config.amplitude_bits
    elif amplitude_report_bits is None:
        amp_bits = 16
    else:
        amp_bits = amplitude_report_bits
    return (config.bits_per_group + amp_bits) / config.groupsize


@dataclass(frozen=True)
class HessianState:
    """Empirical activation second-moment matrix plus its dampened factor."""

    H: np.ndarray
    factor: np.ndarray
    sample_count: int
    dampening: float


def _dampened(H: np.ndarray, dampening: float) -> np.ndarray:
    return H + dampening * float(np.mean(np.diag(H))) * np.eye(H.shape[0])


def estimate_hessian(activations, dampening: float = DEFAULT_DAMPENING) -> HessianState:
    """H = mean(x x^T) over calibration vectors, dampened and factorized."""
    X = np.asarray(activations, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"expected at least one C-vector, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite calibration data")
    if dampening < 0:
        raise ValueError(f"dampening must be >= 0, got {dampening}")
    H = X.T @ X / X.shape[0]
    H = 0.5 * (H + H.T)
    try:
        factor = np.linalg.cholesky(_dampened(H, dampening))
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "dampened Hessian is not positive definite; increase the dampening"
        ) from exc
    return HessianState(H=H, factor=factor, sample_count=X.shape[0], dampening=dampening)


def optimal_scale(w: np.ndarray, p: np.ndarray) -> float:
    """Least-squares scale for ||w - s*p||: s = <p, w> / <p, p>, clamped at 0."""
    w = np.asarray(w, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    den = float(p @ p)
    if den == 0.0:
        raise ValueError("codeword must be nonzero")
    s = float(p @ w) / den
    return s if s > 0.0 else 0.0


def proxy_loss(W: np.ndarray, W_hat: np.ndarray, H: np.ndarray) -> float:
    """Tr((W - W_hat) H (W - W_hat)^T)."""
    E = np.asarray(W, dtype=np.float64) - np.asarray(W_hat, dtype=np.float64)
    return float(((E @ H) * E).sum())


@dataclass
class QuantizedTensor:
    """Packed direction codes plus amplitude payload for one N x C matrix."""

    rows: int
    cols: int
    config: PvqConfig
    codes: PackedCodes
    amplitudes: Optional[np.ndarray] = None        # (rows, G) float32, amplitude_bits == 0
    amplitude_levels: Optional[np.ndarray] = None  # (rows, G) uint32, amplitude_bits > 0
    row_norms_sq: Optional[np.ndarray] = None      # (rows,) float32, amplitude_bits > 0
    hessian_used: bool = False
    version: int = 1

    @property
    def groups(self) -> int:
        return self.cols // self.config.groupsize

    @property
    def pulses(self) -> int:
        return self.config.pulses


def _is_pow2(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


def _inverse_cholesky_upper(H_damped: np.ndarray) -> np.ndarray:
    try:
        L = np.linalg.cholesky(H_damped)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "dampened Hessian is not positive definite; increase the dampening"
        ) from exc
    H_inv = _sla.cho_solve((L, True), np.eye(H_damped.shape[0]))
    return _sla.cholesky(H_inv, lower=False)


def quantize_layer(
    W: np.ndarray, config: PvqConfig, hessian: Optional[HessianState] = None
) -> QuantizedTensor:
    """Quantize an N x C matrix group by group, left to right.

    With a Hessian and config.hessian_feedback, each group's residual is
    pushed into the remaining columns via the upper Cholesky factor of the
    inverse dampened Hessian before those columns are quantized.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or min(W.shape) < 1:
        raise ValueError(f"expected a nonempty matrix, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ValueError("non-finite weights")
    D = config.groupsize
    N, C = W.shape
    if C % D:
        raise ValueError(f"column count {C} is not a multiple of groupsize {D}")
    G = C // D
    if config.pulses < 1:
        raise ValueError(
            f"bits_per_group={config.bits_per_group} is too small for groupsize {D} "
            "(derived pulse count is 0)"
        )
    if config.amplitude_bits > 0 and G < 2:
        raise ValueError("amplitude quantization needs at least two groups per row")

    if config.coherence:
        if not (_is_pow2(N) and _is_pow2(C)):
            raise ValueError(
                f"coherence requires power-of-two dimensions, got {N} x {C}"
            )
        row_spec, col_spec = coherence.derive_specs(config.coherence_seed, N, C)
        work = coherence.rotate_matrix(W, row_spec, col_spec)
    else:
        work = W.copy()

    use_feedback = hessian is not None and config.hessian_feedback
    if use_feedback:
        if hessian.H.shape != (C, C):
            raise ValueError(
                f"Hessian shape {hessian.H.shape} does not match {C} input features"
            )
        if config.coherence:
            H_rot = coherence.rotate_matrix(hessian.H, col_spec, col_spec)
            U = _inverse_cholesky_upper(_dampened(H_rot, hessian.dampening))
        else:
            H_inv = _sla.cho_solve((hessian.factor, True), np.eye(C))
            U = _sla.cholesky(H_inv, lower=False)

    table = lattice.build_size_table(D, config.pulses)
    amps = np.zeros((N, G), dtype=np.float64)
    codes = [[None] * G for _ in range(N)]
    for g in range(G):
        cols = slice(g * D, (g + 1) * D)
        block = work[:, cols]
        recon = np.empty_like(block)
        for r in range(N):
            p = codec.quantize_direction(block[r], table)
            s = optimal_scale(block[r], p)
            codes[r][g] = codec.encode(p, table)
            amps[r, g] = s * float(np.linalg.norm(p))
            recon[r] = s * p
        if use_feedback and g < G - 1:
            rest = slice((g + 1) * D, C)
            err = _sla.solve_triangular(
                U[cols, cols], (block - recon).T, lower=False, trans="T"
            ).T
            work[:, rest] -= err @ U[cols, rest]

    packed = codec.pack_codes(
        (codes[r][g] for r in range(N) for g in range(G)), config.bits_per_group
    )
    qt = QuantizedTensor(
        rows=N, cols=C, config=config, codes=packed, hessian_used=use_feedback
    )
    if config.amplitude_bits > 0:
        levels = np.zeros((N, G), dtype=np.uint32)
        norms = np.zeros(N, dtype=np.float32)
        for r in range(N):
            rec = _amp.quantize_row_amplitudes(amps[r], config.amplitude_bits, D, G)
            levels[r] = rec.quantized_levels
            norms[r] = np.float32(rec.row_norm_sq)
        qt.amplitude_levels = levels
        qt.row_norms_sq = norms
    else:
        qt.amplitudes = amps.astype(np.float32)
    return qt


def dequantize_layer(qt: QuantizedTensor) -> np.ndarray:
    """Reconstruct the matrix: amplitude times unit codeword per group."""
    config = qt.config
    D = config.groupsize
    N, C = qt.rows, qt.cols
    G = C // D
    table = lattice.build_size_table(D, config.pulses)
    code_list = codec.unpack_codes(qt.codes)
    if len(code_list) != N * G:
        raise ValueError(f"expected {N * G} codes, found {len(code_list)}")

    if config.amplitude_bits > 0:
        if qt.amplitude_levels is None or qt.row_norms_sq is None:
            raise ValueError("missing quantized amplitude payload")
        b = config.amplitude_bits
        params = _amp.BetaParams.for_groups(D, G)
        lut = np.array([_amp.dequantize_amplitude(l, b, params) for l in range(1 << b)])
        norms = np.asarray(qt.row_norms_sq, dtype=np.float64)
        amps = np.sqrt(lut[np.asarray(qt.amplitude_levels)] * norms[:, None])
        amps[norms == 0.0] = 0.0
    else:
        if qt.amplitudes is None:
            raise ValueError("missing amplitude payload")
        amps = np.asarray(qt.amplitudes, dtype=np.float64)

    out = np.zeros((N, C), dtype=np.float64)
    idx = 0
    for r in range(N):
        for g in range(G):
            s = amps[r, g]
            p = codec.decode(code_list[idx], table)
            idx += 1
            if s > 0.0:
                out[r, g * D : (g + 1) * D] = s * (p / np.linalg.norm(p))
    if config.coherence:
        row_spec, col_spec = coherence.derive_specs(config.coherence_seed, N, C)
        out = coherence.unrotate_matrix(out, row_spec, col_spec)
    return out


def quantize_activations(x: np.ndarray, D: int, bits_per_group: int):
    """Single-pass PVQ of one activation vector; full-precision amplitudes."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    if x.shape[0] % D:
        raise ValueError(f"length {x.shape[0]} is not a multiple of groupsize {D}")
    K = lattice.choose_pulses(D, bits_per_group)
    if K < 1:
        raise ValueError(f"bits_per_group={bits_per_group} too small for groupsize {D}")
    table = lattice.build_size_table(D, K)
    G = x.shape[0] // D
    amps = np.zeros(G, dtype=np.float64)
    codes = []
    for g in range(G):
        v = x[g * D : (g + 1) * D]
        p = codec.quantize_direction(v, table)
        s = optimal_scale(v, p)
        codes.append(codec.encode(p, table))
        amps[g] = s * float(np.linalg.norm(p))
    return codec.pack_codes(codes, bits_per_group), amps


def dequantize_activations(packed: PackedCodes, amps: np.ndarray, D: int) -> np.ndarray:
    """Inverse of quantize_activations."""
    amps = np.asarray(amps, dtype=np.float64)
    K = lattice.choose_pulses(D, packed.bits_per_group)
    table = lattice.build_size_table(D, K)
    out = np.zeros(packed.group_count * D, dtype=np.float64)
    for g, code in enumerate(codec.unpack_codes(packed)):
        if amps[g] > 0.0:
            p = codec.decode(code, table)
            out[g * D : (g + 1) * D] = amps[g] * (p / np.linalg.norm(p))
    return out


def rtn_quantize(W: np.ndarray, groupsize: int, bits: int) -> np.ndarray:
    """Round-to-nearest baseline: per-group symmetric scale, returns dequantized values."""
    if bits < 2:
        raise ValueError(f"RTN needs bits >= 2, got {bits}")
    W = np.asarray(W, dtype=np.float64)
    if W.size % groupsize:
        raise ValueError(f"size {W.size} is not a multiple of groupsize {groupsize}")
    flat = W.reshape(-1, groupsize)
    qmax = (1 << (bits - 1)) - 1
    scale = np.abs(flat).max(axis=1, keepdims=True) / qmax
    safe = np.where(scale == 0.0, 1.0, scale)
    levels = np.clip(round_half_away(flat / safe), -qmax, qmax)
    return (levels * scale).reshape(W.shape)
