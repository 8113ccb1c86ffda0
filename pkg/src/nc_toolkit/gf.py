"""Exact finite-field arithmetic for GF(2) and GF(2^8).

Field elements are plain Python ints in ``[0, q)``.  A :class:`FieldSpec`
carries the field size, the reduction polynomial and the log/antilog tables
used to accelerate GF(2^8) multiplication.  All tables are built once at
construction and are read-only afterwards, so a single spec can be shared
freely between threads and worker processes.

Correctness of the table-driven multiply is pinned by a bit-serial
carryless-multiply oracle in the test suite, not by the tables themselves.
"""

from __future__ import annotations

import numpy as np

#: Conventional degree-8 reduction polynomial x^8 + x^4 + x^3 + x^2 + 1.
DEFAULT_REDUCTION_POLY = 0x11D

# log[0] sentinel: the antilog table is zero beyond index 509, so any index
# involving _LOG_ZERO resolves to 0 without branching.
_LOG_ZERO = 511


class ZeroInverse(ZeroDivisionError):
    """Multiplicative inverse of zero was requested."""


def _poly_mod(a: int, b: int) -> int:
    """Remainder of carryless (GF(2)[x]) division of ``a`` by ``b``."""
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        a ^= b << (a.bit_length() - 1 - db)
    return a


def _is_irreducible_deg8(poly: int) -> bool:
    """Exhaustive divisor check: a degree-8 polynomial over GF(2) is
    irreducible iff no polynomial of degree 1..4 divides it."""
    if poly.bit_length() - 1 != 8:
        return False
    return all(_poly_mod(poly, d) != 0 for d in range(2, 32))


def _mul_reduced(a: int, b: int, poly: int) -> int:
    """Bit-serial multiply of two GF(2^8) elements, reducing as it goes."""
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= poly
    return acc


class FieldSpec:
    """Arithmetic context for GF(q) with q in {2, 256}.

    Parameters
    ----------
    q:
        Field size, 2 or 256.
    reduction_polynomial:
        Degree-8 irreducible polynomial as an int bitmask (bit i is the
        coefficient of x^i).  Only meaningful for q=256; ignored for q=2.
        Irreducibility is verified once at construction.
    """

    __slots__ = ("q", "reduction_polynomial", "exp", "log", "_inv")

    def __init__(self, q: int, reduction_polynomial: int = DEFAULT_REDUCTION_POLY):
        if q not in (2, 256):
            raise ValueError(f"unsupported field size {q}; expected 2 or 256")
        self.q = q
        if q == 2:
            self.reduction_polynomial = None
            self.exp = None
            self.log = None
            self._inv = None
            return
        if not _is_irreducible_deg8(reduction_polynomial):
            raise ValueError(
                f"0x{reduction_polynomial:X} is not an irreducible degree-8 "
                "polynomial over GF(2)"
            )
        self.reduction_polynomial = reduction_polynomial
        self._build_tables()

    def _build_tables(self) -> None:
        # x = 0x02 is not primitive for every irreducible polynomial, so
        # search for a generator of the order-255 multiplicative group.
        poly = self.reduction_polynomial
        for g in range(2, 256):
            powers = []
            x = 1
            for _ in range(255):
                powers.append(x)
                x = _mul_reduced(x, g, poly)
            if x == 1 and len(set(powers)) == 255:
                break
        else:  # pragma: no cover - cannot happen for an irreducible poly
            raise ValueError("no generator found; polynomial is not irreducible")

        exp = np.zeros(1024, dtype=np.uint8)
        log = np.full(256, _LOG_ZERO, dtype=np.int16)
        for i, v in enumerate(powers):
            exp[i] = v
            log[v] = i
        exp[255:510] = exp[0:255]
        inv = np.zeros(256, dtype=np.uint8)
        inv[1:] = exp[255 - log[np.arange(1, 256)]]
        self.exp = exp
        self.log = log
        self._inv = inv

    # -- scalar operations -------------------------------------------------

    def add(self, a: int, b: int) -> int:
        """a + b (XOR in characteristic 2)."""
        return a ^ b

    def sub(self, a: int, b: int) -> int:
        """a - b; identical to addition in characteristic 2."""
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        """a * b reduced modulo the reduction polynomial."""
        if self.q == 2:
            return a & b
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        """Multiplicative inverse; raises :class:`ZeroInverse` for a = 0."""
        if a == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        if self.q == 2:
            return 1
        return int(self._inv[a])

    def fused_mul_add(self, a: int, b: int, c: int) -> int:
        """a + b*c, the fundamental decoder operation (one op when counted)."""
        return a ^ self.mul(b, c)

    # -- vector operations (uint8 ndarrays) --------------------------------

    def mul_vec(self, c: int, vec: np.ndarray) -> np.ndarray:
        """Scalar times vector; returns a new array."""
        if self.q == 2:
            return vec.copy() if c else np.zeros_like(vec)
        if c == 0:
            return np.zeros_like(vec)
        return self.exp[int(self.log[c]) + self.log[vec]]

    def combine(self, coefs: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """XOR-accumulate ``sum_i coefs[i] * rows[i]`` over the field.

        ``rows`` is an (n, k) uint8 matrix, ``coefs`` a length-n uint8 vector;
        zero coefficients contribute nothing.
        """
        if self.q == 2:
            sel = rows[coefs != 0]
            if sel.shape[0] == 0:
                return np.zeros(rows.shape[1], dtype=np.uint8)
            return np.bitwise_xor.reduce(sel, axis=0)
        scaled = self.exp[self.log[coefs][:, None] + self.log[rows]]
        return np.bitwise_xor.reduce(scaled, axis=0)

    def scaled_outer(self, coefs: np.ndarray, row: np.ndarray) -> np.ndarray:
        """Outer product ``coefs[i] * row[j]`` as an (n, k) uint8 matrix."""
        if self.q == 2:
            return coefs[:, None] & row[None, :]
        return self.exp[self.log[coefs][:, None] + self.log[row][None, :]]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.q == 2:
            return "FieldSpec(q=2)"
        return f"FieldSpec(q=256, poly=0x{self.reduction_polynomial:X})"


GF2 = FieldSpec(2)
GF256 = FieldSpec(256)


def field_for(q: int) -> FieldSpec:
    """Shared spec for the two supported field sizes."""
    if q == 2:
        return GF2
    if q == 256:
        return GF256
    raise ValueError(f"unsupported field size {q}")
