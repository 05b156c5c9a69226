"""Core pyramid codec: projection quantizer, bijective encode/decode, bit packing.

A pyramid point is an int64 vector p with sum(|p_i|) = K; its spherical
codeword is p / ||p||_2.  Codes are CodeIntegers in [0, N(D, K)) produced by
the enumeration order "zero first, then magnitude 1+, 1-, 2+, 2-, ..." per
leading coordinate; the cumulative V table reduces every inner summation to a
two-lookup difference.

Rounding is half-away-from-zero everywhere a scalar round appears, so results
are deterministic across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bignum import CodeInteger
from .lattice import SizeTable

# Iteration caps for the quantizer loops; exceeding either is a hard error
# rather than a silent wrong answer.
_BUDGET_CAP_FACTOR = 4
_EXCHANGE_CAP_FACTOR = 16


def round_half_away(x):
    """Round to nearest integer, halves away from zero (element-wise)."""
    x = np.asarray(x)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class PackedCodes:
    """Fixed-width codes packed LSB-first into a byte stream.

    Code i occupies bit positions [i*b, (i+1)*b); bit position p lives in byte
    p >> 3 at bit p & 7.  The stream is zero-padded to a byte boundary.
    """

    bits_per_group: int
    group_count: int
    data: bytes

    def __post_init__(self):
        if self.bits_per_group < 1:
            raise ValueError(f"bits_per_group must be >= 1, got {self.bits_per_group}")
        if self.group_count < 0:
            raise ValueError(f"group_count must be >= 0, got {self.group_count}")
        want = (self.bits_per_group * self.group_count + 7) // 8
        if len(self.data) != want:
            raise ValueError(
                f"packed payload is {len(self.data)} bytes, expected {want}"
            )


def quantize_direction(v: np.ndarray, table: SizeTable) -> np.ndarray:
    """Project v onto P(D, K): the greedy pyramid quantizer.

    Starts from round(K * |v| / ||v||_1), restores the pulse budget one +-1
    step at a time, then refines by single-pulse exchanges until no move
    improves the spherical correlation.  Ties break at the lowest index.
    The all-zero input maps to the canonical point (K, 0, ..., 0).
    """
    D, K = table.D, table.K
    if K < 1:
        raise ValueError(f"quantize_direction requires K >= 1, got K={K}")
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (D,):
        raise ValueError(f"expected a length-{D} vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input")

    a = np.abs(v)
    l1 = float(a.sum())
    if l1 == 0.0:
        out = np.zeros(D, dtype=np.int64)
        out[0] = K
        return out

    m = round_half_away(K * a / l1).astype(np.int64)
    corr = float(a @ m)          # <|v|, m>
    energy = float(m @ m)        # ||m||^2

    # Restore the exact pulse budget; each step picks the coordinate whose
    # +-1 change maximizes corr^2 / energy.
    budget_cap = _BUDGET_CAP_FACTOR * D
    steps = 0
    while True:
        excess = int(m.sum()) - K
        if excess == 0:
            break
        steps += 1
        if steps > budget_cap:
            raise RuntimeError(f"pulse budget not reached within {budget_cap} steps")
        if excess < 0:
            score = (corr + a) ** 2 / (energy + 2 * m + 1)
            i = int(np.argmax(score))
            corr += a[i]
            energy += 2 * int(m[i]) + 1
            m[i] += 1
        else:
            denom = energy - 2 * m + 1
            score = np.where((m >= 1) & (denom > 0), (corr - a) ** 2 / np.maximum(denom, 1), -1.0)
            i = int(np.argmax(score))
            corr -= a[i]
            energy -= 2 * int(m[i]) - 1
            m[i] -= 1

    # Single-pulse exchange refinement: move one pulse i -> j while that
    # strictly improves corr^2 / energy.
    exchange_cap = _EXCHANGE_CAP_FACTOR * D + 64
    for _ in range(exchange_cap):
        best = corr * corr / energy
        bi = bj = -1
        for i in np.nonzero(m)[0]:
            c_d = corr - a[i]
            e_d = energy - 2 * int(m[i]) + 1
            score = (c_d + a) ** 2 / (e_d + 2 * m + 1)
            score[i] = -np.inf
            j = int(np.argmax(score))
            if score[j] > best * (1.0 + 1e-12):
                best = score[j]
                bi, bj = int(i), j
        if bi < 0:
            break
        corr += a[bj] - a[bi]
        energy += 2 * int(m[bj]) - 2 * int(m[bi]) + 2
        m[bi] -= 1
        m[bj] += 1
    else:
        raise RuntimeError(f"exchange refinement did not settle within {exchange_cap} moves")

    signs = np.where(v < 0, -1, 1)
    return (signs * m).astype(np.int64)


def _check_point(p: np.ndarray, table: SizeTable) -> np.ndarray:
    p = np.asarray(p)
    if p.shape != (table.D,):
        raise ValueError(f"expected a length-{table.D} point, got shape {p.shape}")
    if not np.issubdtype(p.dtype, np.integer):
        q = np.asarray(p, dtype=np.int64)
        if not np.array_equal(q, p):
            raise ValueError("pyramid point must have integer coordinates")
        p = q
    total = int(np.abs(p).sum())
    if total != table.K:
        raise ValueError(f"point has L1 norm {total}, expected K={table.K}")
    return p.astype(np.int64)


def encode(p: np.ndarray, table: SizeTable) -> CodeInteger:
    """Map a pyramid point to its code in [0, N(D, K))."""
    p = _check_point(p, table)
    N, V = table.N, table.V
    d, k = table.D, table.K
    c = CodeInteger(0)
    for x in p:
        if k == 0:
            break
        mag = int(abs(x))
        if mag > 0:
            c = c + N[d - 1][k]
            if mag > 1:
                run = V[d - 1][k - 1] - V[d - 1][k - mag]
                c = c + run + run
            if x < 0:
                c = c + N[d - 1][k - mag]
            k -= mag
        d -= 1
    return c


def decode(c, table: SizeTable) -> np.ndarray:
    """Invert encode: recover the pyramid point for code c in [0, N(D, K))."""
    if isinstance(c, int):
        c = CodeInteger(c)
    if not isinstance(c, CodeInteger):
        raise TypeError(f"code must be CodeInteger or int, got {type(c).__name__}")
    total = table.N[table.D][table.K]
    if c >= total:
        raise ValueError(f"code {c.to_int()} out of range [0, {total.to_int()})")
    N = table.N
    d, k = table.D, table.K
    out = np.zeros(table.D, dtype=np.int64)
    i = 0
    while k > 0:
        n0 = N[d - 1][k]
        if c < n0:
            out[i] = 0
        else:
            c = c - n0
            j = 1
            block = N[d - 1][k - 1]
            while c >= block + block:
                c = c - block - block
                j += 1
                block = N[d - 1][k - j]
            if c < block:
                out[i] = j
            else:
                out[i] = -j
                c = c - block
            k -= j
        d -= 1
        i += 1
    if not c.is_zero():
        raise ValueError("corrupt code: nonzero residue after decode")
    return out


def to_sphere(p: np.ndarray) -> np.ndarray:
    """Spherical codeword p / ||p||_2 for a nonzero pyramid point."""
    p = np.asarray(p, dtype=np.float64)
    norm = float(np.linalg.norm(p))
    if norm == 0.0:
        raise ValueError("zero point has no spherical codeword")
    return p / norm


def pack_codes(codes, bits_per_group: int) -> PackedCodes:
    """Concatenate fixed-width codes LSB-first into bytes."""
    if bits_per_group < 1:
        raise ValueError(f"bits_per_group must be >= 1, got {bits_per_group}")
    limit = 1 << bits_per_group
    acc = 0
    pos = 0
    out = bytearray()
    count = 0
    for code in codes:
        value = code.to_int() if isinstance(code, CodeInteger) else int(code)
        if not 0 <= value < limit:
            raise ValueError(f"code {value} does not fit in {bits_per_group} bits")
        acc |= value << pos
        pos += bits_per_group
        count += 1
        while pos >= 8:
            out.append(acc & 0xFF)
            acc >>= 8
            pos -= 8
    if pos:
        out.append(acc & 0xFF)
    return PackedCodes(bits_per_group, count, bytes(out))


def unpack_codes(packed: PackedCodes) -> list:
    """Recover the code sequence from a packed stream."""
    stream = int.from_bytes(packed.data, "little")
    b = packed.bits_per_group
    mask = (1 << b) - 1
    return [CodeInteger((stream >> (i * b)) & mask) for i in range(packed.group_count)]
