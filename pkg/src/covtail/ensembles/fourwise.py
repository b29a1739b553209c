"""Four-wise independent Rademacher vectors from 4k random bits.

Coordinate ``j`` of the vector is ``(-1)^Tr(q(x_j))`` where ``q`` is a cubic
over GF(2^k) with coefficients taken from the seed bits, ``x_j`` is the field
element whose polynomial-basis bits spell ``j``, and ``Tr`` is the absolute
trace GF(2^k) -> GF(2). Distinct ``x_j`` make ``(q(x_1),..,q(x_4))`` uniform on
GF(2^k)^4, and the trace is balanced, so any four coordinates are uniform.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray

from covtail.errors import InputError

# Low-weight irreducible polynomials over GF(2), bit i = coefficient of x^i.
IRREDUCIBLE_POLYNOMIALS: dict[int, int] = {
    1: 0b11,  # x + 1
    2: 0b111,  # x^2 + x + 1
    3: 0b1011,  # x^3 + x + 1
    4: 0b10011,  # x^4 + x + 1
    5: 0b100101,  # x^5 + x^2 + 1
    6: 0b1000011,  # x^6 + x + 1
    7: 0b10000011,  # x^7 + x + 1
    8: 0b100011011,  # x^8 + x^4 + x^3 + x + 1
    9: 0b1000000011,  # x^9 + x + 1
    10: 0b10000001001,  # x^10 + x^3 + 1
    11: 0b100000000101,  # x^11 + x^2 + 1
    12: 0b1000000001001,  # x^12 + x^3 + 1
    13: 0b10000000011011,  # x^13 + x^4 + x^3 + x + 1
    14: 0b100000000100001,  # x^14 + x^5 + 1
    15: 0b1000000000000011,  # x^15 + x + 1
    16: 0b10000000000101011,  # x^16 + x^5 + x^3 + x + 1
}

MAX_FIELD_DEGREE = max(IRREDUCIBLE_POLYNOMIALS)


def field_degree(p: int) -> int:
    """Smallest k ≥ 1 with 2^k ≥ p."""
    if p < 1:
        raise InputError(f"dimension must be ≥ 1, got {p}")
    k = max(1, math.ceil(math.log2(p)))
    if k > MAX_FIELD_DEGREE:
        raise InputError(f"dimension {p} needs GF(2^{k}); only k ≤ {MAX_FIELD_DEGREE} is tabulated")
    return k


def seed_bit_count(p: int) -> int:
    return 4 * field_degree(p)


def gf_mul(a: ArrayLike, b: ArrayLike, k: int) -> NDArray[np.int64]:
    """Elementwise product in GF(2^k) (broadcasting)."""
    poly = IRREDUCIBLE_POLYNOMIALS[k]
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    a, b = np.broadcast_arrays(a, b)

    product = np.zeros(a.shape, dtype=np.int64)
    for i in range(k):
        product ^= np.where((b >> i) & 1, a << i, 0)
    for deg in range(2 * k - 2, k - 1, -1):
        product ^= np.where((product >> deg) & 1, poly << (deg - k), 0)
    return product


@lru_cache(maxsize=None)
def trace_mask(k: int) -> int:
    """Bit mask m with Tr(y) = parity(y & m); bit i holds Tr(x^i)."""
    mask = 0
    for i in range(k):
        y = np.int64(1 << i)
        total = np.int64(0)
        for _ in range(k):
            total ^= y
            y = gf_mul(y, y, k)
        mask |= int(total) << i
    return mask


def gf_trace(y: ArrayLike, k: int) -> NDArray[np.int64]:
    masked = np.asarray(y, dtype=np.int64) & trace_mask(k)
    parity = np.zeros(masked.shape, dtype=np.int64)
    for i in range(k):
        parity ^= (masked >> i) & 1
    return parity


def _coefficients(bits: NDArray[np.int64], k: int) -> tuple[NDArray[np.int64], ...]:
    """Split (..., 4k) bits into (a, b, c, d), each read most significant bit first."""
    weights = np.int64(1) << np.arange(k - 1, -1, -1, dtype=np.int64)
    return tuple(bits[..., i * k : (i + 1) * k] @ weights for i in range(4))


def _validate_bits(seed_bits: ArrayLike, p: int) -> tuple[NDArray[np.int64], int]:
    k = field_degree(p)
    bits = np.asarray(seed_bits, dtype=np.int64)
    if bits.ndim == 0 or bits.shape[-1] < 4 * k:
        got = 0 if bits.ndim == 0 else bits.shape[-1]
        raise InputError(f"p={p} needs {4 * k} seed bits (k={k}), got {got}")
    if np.any((bits != 0) & (bits != 1)):
        raise InputError("seed bits must be 0 or 1")
    return bits[..., : 4 * k], k


def fourwise_rademacher_batch(p: int, seed_bits: ArrayLike) -> NDArray[np.float64]:
    """Rows of ±1 vectors, one per row of ``seed_bits`` (shape (n, 4k))."""
    bits, k = _validate_bits(seed_bits, p)
    a, b, c, d = (coef[..., None] for coef in _coefficients(bits, k))
    x = np.arange(p, dtype=np.int64)

    value = a
    for coef in (b, c, d):
        value = gf_mul(value, x, k) ^ coef
    return 1.0 - 2.0 * gf_trace(value, k).astype(np.float64)


def fourwise_rademacher_sample(p: int, seed_bits: ArrayLike) -> NDArray[np.float64]:
    """One four-wise independent ±1 vector; bit 0 maps to +1 and bit 1 to -1."""
    bits = np.asarray(seed_bits)
    if bits.ndim != 1:
        raise InputError("fourwise_rademacher_sample takes a flat bit sequence")
    return fourwise_rademacher_batch(p, bits[None, :])[0]
