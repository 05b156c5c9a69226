"""Combinatorics of the pyramid lattice.

P(D, K) is the set of integer points p in Z^D with sum(|p_i|) = K.  Its size
N(D, K) satisfies

    N(d, 0) = 1,  N(0, k) = 0 for k >= 1,
    N(d, k) = N(d-1, k) + N(d-1, k-1) + N(d, k-1),

and the cumulative table V(d, k) = sum_{i=1..k} N(d, i) turns the encoder's
inner summations into constant-time lookups.  All counts are exact
CodeIntegers; tables are built once per (D, K) and cached.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator, Tuple

from .bignum import ONE, ZERO, CodeInteger


class SizeTable:
    """Immutable N and V tables for one (D, K) configuration.

    N[d][k] counts P(d, k); V[d][k] = sum_{i=1..k} N(d, i).  Indices run
    0 <= d <= D, 0 <= k <= K.
    """

    __slots__ = ("D", "K", "N", "V")

    def __init__(self, D: int, K: int, N, V):
        self.D = D
        self.K = K
        self.N = N
        self.V = V

    def __repr__(self):
        return f"SizeTable(D={self.D}, K={self.K}, N={self.N[self.D][self.K]!r})"


@lru_cache(maxsize=None)
def build_size_table(D: int, K: int) -> SizeTable:
    """Build (and cache) the size table for dimension D and pulse count K.

    D = 0 is legal and yields the recurrence base row N(0, 0) = 1,
    N(0, k >= 1) = 0; the codec itself only consumes tables with D >= 1.
    """
    if D < 0:
        raise ValueError(f"dimension must be >= 0, got {D}")
    if K < 0:
        raise ValueError(f"pulse count must be >= 0, got {K}")
    N = [[ZERO] * (K + 1) for _ in range(D + 1)]
    for d in range(D + 1):
        N[d][0] = ONE
    for d in range(1, D + 1):
        row, prev = N[d], N[d - 1]
        for k in range(1, K + 1):
            row[k] = prev[k] + prev[k - 1] + row[k - 1]
    V = [[ZERO] * (K + 1) for _ in range(D + 1)]
    for d in range(D + 1):
        vrow, nrow = V[d], N[d]
        for k in range(1, K + 1):
            vrow[k] = vrow[k - 1] + nrow[k]
    nt = tuple(tuple(r) for r in N)
    vt = tuple(tuple(r) for r in V)
    return SizeTable(D, K, nt, vt)


def count_codes(D: int, K: int) -> CodeInteger:
    """N(D, K): the number of points in P(D, K)."""
    return build_size_table(D, K).N[D][K]


def choose_pulses(D: int, bits_per_group: int) -> int:
    """Largest K with N(D, K) <= 2**bits_per_group.

    K = 0 is a legal degenerate answer when even N(D, 1) = 2D exceeds the
    budget.  D = 1 is rejected: N(1, k) = 2 for every k >= 1, so no largest
    K exists.
    """
    if D < 1:
        raise ValueError(f"dimension must be >= 1, got {D}")
    if D == 1:
        raise ValueError("no largest K exists for D=1 (N(1,k) is constant)")
    if bits_per_group < 1:
        raise ValueError(f"bits_per_group must be >= 1, got {bits_per_group}")
    # Grow column by column: col[d] = N(d, k) for the current k.  A count of
    # exactly 2**bits still fits (codes occupy [0, N)).
    budget = ONE << bits_per_group
    col = [ONE] * (D + 1)
    k = 0
    while True:
        prev = col
        col = [ZERO] * (D + 1)
        for d in range(1, D + 1):
            col[d] = prev[d] + prev[d - 1] + col[d - 1]
        if col[D] > budget:
            return k
        k += 1


def enumerate_pyramid(d: int, k: int) -> Iterator[Tuple[int, ...]]:
    """Yield every point of P(d, k) (exhaustive; intended for tests/selftest)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if d == 1:
        if k == 0:
            yield (0,)
        else:
            yield (k,)
            yield (-k,)
        return
    for lead in range(-k, k + 1):
        for rest in enumerate_pyramid(d - 1, k - abs(lead)):
            yield (lead,) + rest
