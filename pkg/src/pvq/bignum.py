"""Limb-based arbitrary-precision unsigned integers.

Values are sequences of fixed-width unsigned words (limbs), least significant
first, growable on demand.  Arithmetic is exact: carries and borrows propagate
limb by limb, and every operation that could lose information is an explicit
error instead.  This is the substrate for pyramid codes and size counts that
exceed native word widths; serialization into bitstreams lives in the codec
module, not here.

Instances are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

from typing import Iterable, Sequence

LIMB_BITS = 64
LIMB_MASK = (1 << LIMB_BITS) - 1


class UnderflowError(ArithmeticError):
    """Raised when a subtraction would produce a negative value."""


class CodeInteger:
    """Arbitrary-precision unsigned integer stored as 64-bit limbs.

    The canonical form has no trailing zero limbs; zero is the empty limb
    sequence.  Supports exactly the arithmetic the codec needs: add, sub,
    compare, shifts, and bit length.
    """

    __slots__ = ("_limbs",)

    def __init__(self, value: int = 0):
        if value < 0:
            raise ValueError(f"CodeInteger is unsigned, got {value}")
        limbs = []
        while value:
            limbs.append(value & LIMB_MASK)
            value >>= LIMB_BITS
        self._limbs = tuple(limbs)

    @classmethod
    def from_limbs(cls, limbs: Iterable[int]) -> "CodeInteger":
        """Build from least-significant-first limbs (normalizing trailing zeros)."""
        out = cls.__new__(cls)
        limbs = list(limbs)
        for limb in limbs:
            if not 0 <= limb <= LIMB_MASK:
                raise ValueError(f"limb out of range: {limb:#x}")
        while limbs and limbs[-1] == 0:
            limbs.pop()
        out._limbs = tuple(limbs)
        return out

    @property
    def limbs(self) -> Sequence[int]:
        return self._limbs

    def to_int(self) -> int:
        n = 0
        for limb in reversed(self._limbs):
            n = (n << LIMB_BITS) | limb
        return n

    def bit_length(self) -> int:
        if not self._limbs:
            return 0
        return LIMB_BITS * (len(self._limbs) - 1) + self._limbs[-1].bit_length()

    def is_zero(self) -> bool:
        return not self._limbs

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "CodeInteger":
        if isinstance(other, CodeInteger):
            return other
        if isinstance(other, int):
            return CodeInteger(other)
        return NotImplemented

    def __add__(self, other) -> "CodeInteger":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._limbs, other._limbs
        if len(a) < len(b):
            a, b = b, a
        out = []
        carry = 0
        for i, limb in enumerate(a):
            s = limb + (b[i] if i < len(b) else 0) + carry
            out.append(s & LIMB_MASK)
            carry = s >> LIMB_BITS
        if carry:
            out.append(carry)
        return CodeInteger.from_limbs(out)

    __radd__ = __add__

    def __sub__(self, other) -> "CodeInteger":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._limbs, other._limbs
        if len(a) < len(b):
            raise UnderflowError("subtraction underflow")
        out = []
        borrow = 0
        for i, limb in enumerate(a):
            d = limb - (b[i] if i < len(b) else 0) - borrow
            if d < 0:
                d += 1 << LIMB_BITS
                borrow = 1
            else:
                borrow = 0
            out.append(d)
        if borrow:
            raise UnderflowError("subtraction underflow")
        return CodeInteger.from_limbs(out)

    def __lshift__(self, bits: int) -> "CodeInteger":
        if bits < 0:
            raise ValueError("negative shift")
        if not self._limbs or bits == 0:
            return self
        words, rem = divmod(bits, LIMB_BITS)
        out = [0] * words
        carry = 0
        for limb in self._limbs:
            v = (limb << rem) | carry
            out.append(v & LIMB_MASK)
            carry = v >> LIMB_BITS
        if carry:
            out.append(carry)
        return CodeInteger.from_limbs(out)

    def __rshift__(self, bits: int) -> "CodeInteger":
        if bits < 0:
            raise ValueError("negative shift")
        if not self._limbs or bits == 0:
            return self
        words, rem = divmod(bits, LIMB_BITS)
        src = self._limbs[words:]
        if not src:
            return CodeInteger(0)
        if rem == 0:
            return CodeInteger.from_limbs(src)
        out = []
        for i, limb in enumerate(src):
            hi = src[i + 1] if i + 1 < len(src) else 0
            out.append(((limb >> rem) | (hi << (LIMB_BITS - rem))) & LIMB_MASK)
        return CodeInteger.from_limbs(out)

    # -- comparisons --------------------------------------------------------

    def _cmp(self, other: "CodeInteger") -> int:
        a, b = self._limbs, other._limbs
        if len(a) != len(b):
            return -1 if len(a) < len(b) else 1
        for x, y in zip(reversed(a), reversed(b)):
            if x != y:
                return -1 if x < y else 1
        return 0

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._limbs == other._limbs

    def __hash__(self):
        return hash(self._limbs)

    def __lt__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) < 0

    def __le__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) <= 0

    def __gt__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) > 0

    def __ge__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._cmp(other) >= 0

    def __int__(self) -> int:
        return self.to_int()

    def __bool__(self) -> bool:
        return bool(self._limbs)

    def __repr__(self) -> str:
        return f"CodeInteger({self.to_int()})"


ZERO = CodeInteger(0)
ONE = CodeInteger(1)


def add(a: CodeInteger, b: CodeInteger) -> CodeInteger:
    """Exact a + b."""
    return a + b


def sub(a: CodeInteger, b: CodeInteger) -> CodeInteger:
    """Exact a - b; raises UnderflowError if a < b."""
    return a - b


def cmp(a: CodeInteger, b: CodeInteger) -> int:
    """Total order: -1 if a < b, 0 if equal, 1 if a > b."""
    return a._cmp(b)


def shift_left(a: CodeInteger, bits: int) -> CodeInteger:
    """Exact a * 2**bits."""
    return a << bits


def shift_right(a: CodeInteger, bits: int) -> CodeInteger:
    """floor(a / 2**bits)."""
    return a >> bits


def bit_length(a: CodeInteger) -> int:
    """0 for zero, else floor(log2 a) + 1."""
    return a.bit_length()
