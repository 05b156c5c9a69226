"""Randomized Hadamard coherence processing.

The transform is Q = (1/sqrt(dim)) * H_dim * diag(signs), where H_dim is the
Walsh-Hadamard matrix and the +-1 signs derive from a 64-bit seed through a
splitmix-style mixer (one output word, hence one sign bit, per index).  Q is
orthogonal, so applying it to weight rows/columns spreads mass without
changing what the layer computes; the inverse is the exact adjoint.

Only power-of-two dimensions are supported; general sizes are out of scope
and rejected loudly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """The i-th output of splitmix64 seeded at state - GOLDEN (scalar reference)."""
    z = state & _MASK64
    z = (z ^ (z >> 30)) * _MIX1 & _MASK64
    z = (z ^ (z >> 27)) * _MIX2 & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class HadamardSpec:
    """A seeded random Hadamard transform of a power-of-two dimension."""

    dim: int
    seed: int

    def __post_init__(self):
        if self.dim < 1 or self.dim & (self.dim - 1):
            raise ValueError(f"dimension must be a power of two, got {self.dim}")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError(f"seed must be a 64-bit value, got {self.seed}")


def signs(spec: HadamardSpec) -> np.ndarray:
    """The +-1 diagonal for spec: sign i is the top bit of splitmix output i."""
    idx = np.arange(1, spec.dim + 1, dtype=np.uint64)
    z = (np.uint64(spec.seed) + idx * np.uint64(_GOLDEN)).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return np.where(z >> np.uint64(63), -1.0, 1.0)


def derive_specs(seed: int, rows: int, cols: int):
    """Row and column specs for a matrix, from one stored seed."""
    row_seed = splitmix64(seed + _GOLDEN)
    col_seed = splitmix64(seed + 2 * _GOLDEN)
    return HadamardSpec(rows, row_seed), HadamardSpec(cols, col_seed)


def _butterfly(x: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    n = x.shape[-1]
    y = np.array(x, dtype=np.float64)
    h = 1
    while h < n:
        y = y.reshape(*y.shape[:-1], n // (2 * h), 2, h)
        top = y[..., 0, :] + y[..., 1, :]
        bottom = y[..., 0, :] - y[..., 1, :]
        y = np.stack((top, bottom), axis=-2).reshape(*x.shape[:-1], n)
        h *= 2
    return y


def fwht(v: np.ndarray, spec: HadamardSpec, inverse: bool = False) -> np.ndarray:
    """Apply Q (or its adjoint, with inverse=True) to a vector of length spec.dim."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != spec.dim:
        raise ValueError(f"length {v.shape[-1]} does not match dim {spec.dim}")
    s = signs(spec)
    scale = 1.0 / np.sqrt(spec.dim)
    if inverse:
        return s * _butterfly(v) * scale
    return _butterfly(v * s) * scale


def rotate_matrix(W: np.ndarray, row_spec: HadamardSpec, col_spec: HadamardSpec) -> np.ndarray:
    """Q_row @ W @ Q_col^T: row transform on each column, column transform on each row."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {W.shape}")
    if W.shape != (row_spec.dim, col_spec.dim):
        raise ValueError(
            f"shape {W.shape} does not match specs ({row_spec.dim}, {col_spec.dim}); "
            "only power-of-two dimensions are supported"
        )
    out = fwht(W.T, row_spec).T
    return fwht(out, col_spec)


def unrotate_matrix(W: np.ndarray, row_spec: HadamardSpec, col_spec: HadamardSpec) -> np.ndarray:
    """Exact inverse of rotate_matrix."""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {W.shape}")
    if W.shape != (row_spec.dim, col_spec.dim):
        raise ValueError(
            f"shape {W.shape} does not match specs ({row_spec.dim}, {col_spec.dim}); "
            "only power-of-two dimensions are supported"
        )
    out = fwht(W, col_spec, inverse=True)
    return fwht(out.T, row_spec, inverse=True).T
