"""
Arithmetic over GF(2^w) for w in {8, 16}, plus dense linear algebra.

Elements are plain integers in [0, 2^w).  Vectors and matrices are numpy
arrays of dtype uint8 (w=8) or uint16 (w=16).  Multiplication goes through
log/antilog tables built once per field width.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import SingularMatrix

# Primitive polynomials, x^w term included.
PRIMITIVE_POLY = {
    8: 0x11D,  # x^8 + x^4 + x^3 + x^2 + 1
    16: 0x1100B,  # x^16 + x^12 + x^3 + x + 1
}

DEFAULT_WIDTH = 16


class GF:
    """Tables and element-wise operations for one field width.

    Use :func:`field` to get a cached instance rather than constructing
    this directly.
    """

    def __init__(self, w: int):
        if w not in PRIMITIVE_POLY:
            raise ValueError(f"unsupported field width {w}; choose 8 or 16")
        self.w = w
        self.q = 1 << w
        self.dtype = np.uint8 if w == 8 else np.uint16
        self.symbol_bytes = w // 8
        self._build_tables(PRIMITIVE_POLY[w])

    def _build_tables(self, poly: int) -> None:
        q = self.q
        exp = np.zeros(2 * q, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        x = 1
        for i in range(q - 1):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & q:
                x ^= poly
        if x != 1 or len(set(exp[: q - 1].tolist())) != q - 1:
            raise ValueError(f"polynomial {poly:#x} is not primitive")
        # doubled so log[a] + log[b] never needs a modulo
        exp[q - 1 : 2 * (q - 1)] = exp[: q - 1]
        self.exp = exp
        self.log = log

    # scalar operations

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self.exp[(self.q - 1) - self.log[a]])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    # array operations

    def mul_array(self, a, b) -> np.ndarray:
        """Element-wise product with numpy broadcasting."""
        a = np.asarray(a)
        b = np.asarray(b)
        out = self.exp[self.log[a] + self.log[b]]
        out[(a == 0) | (b == 0)] = 0
        return out.astype(self.dtype)

    def scale(self, c: int, v: np.ndarray) -> np.ndarray:
        if c == 0:
            return np.zeros_like(v)
        if c == 1:
            return v.copy()
        out = self.exp[self.log[c] + self.log[v]].astype(self.dtype)
        out[v == 0] = 0
        return out

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Matrix product over the field; a is (r, m), b is (m, s)."""
        a = np.asarray(a, dtype=self.dtype)
        b = np.asarray(b, dtype=self.dtype)
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
        out = np.zeros((a.shape[0], b.shape[1]), dtype=self.dtype)
        if b.shape[1] == 0:
            return out
        log_b = self.log[b]
        zero_b = b == 0
        for j in range(a.shape[1]):
            col = a[:, j]
            nz = np.nonzero(col)[0]
            if nz.size == 0:
                continue
            prod = self.exp[self.log[col[nz]][:, None] + log_b[j][None, :]]
            prod[:, zero_b[j]] = 0
            out[nz] ^= prod.astype(self.dtype)
        return out

    def matvec(self, a: np.ndarray, x) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype).reshape(-1, 1)
        return self.matmul(a, x).reshape(-1)

    def random_matrix(self, rows: int, cols: int, rng) -> np.ndarray:
        """Uniform entries drawn from a numpy Generator."""
        return rng.integers(0, self.q, size=(rows, cols), dtype=np.int64).astype(self.dtype)

    def _eliminate(self, m: np.ndarray, augmented_cols: int = 0):
        """Reduced row-echelon form in place on the first cols - augmented_cols columns.

        Returns the list of pivot columns.
        """
        rows, cols = m.shape
        ncoef = cols - augmented_cols
        pivots = []
        r = 0
        for c in range(ncoef):
            if r == rows:
                break
            nz = np.nonzero(m[r:, c])[0]
            if nz.size == 0:
                continue
            p = r + int(nz[0])
            if p != r:
                m[[r, p]] = m[[p, r]]
            pv = int(m[r, c])
            if pv != 1:
                m[r] = self.scale(self.inv(pv), m[r])
            factors = m[:, c].copy()
            factors[r] = 0
            hit = np.nonzero(factors)[0]
            if hit.size:
                m[hit] ^= self.mul_array(factors[hit][:, None], m[r][None, :])
            pivots.append(c)
            r += 1
        return pivots

    def rank(self, m) -> int:
        m = np.array(m, dtype=self.dtype, copy=True)
        if m.size == 0:
            return 0
        return len(self._eliminate(m))

    def solve(self, a, b) -> np.ndarray:
        """Solve a·x = b for square full-rank a; b may be a vector or a matrix."""
        a = np.asarray(a, dtype=self.dtype)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"solve needs a square matrix, got {a.shape}")
        b = np.asarray(b, dtype=self.dtype)
        vector = b.ndim == 1
        b2 = b.reshape(-1, 1) if vector else b
        if b2.shape[0] != a.shape[0]:
            raise ValueError(f"right-hand side has {b2.shape[0]} rows, expected {a.shape[0]}")
        n = a.shape[0]
        aug = np.concatenate([a, b2], axis=1).astype(self.dtype)
        pivots = self._eliminate(aug, augmented_cols=b2.shape[1])
        if len(pivots) < n:
            raise SingularMatrix(f"matrix has rank {len(pivots)} < {n}")
        x = aug[:, n:]
        return x.reshape(-1) if vector else x

    def inverse(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=self.dtype)
        return self.solve(a, np.eye(a.shape[0], dtype=self.dtype))

    def independent_rows(self, m) -> list[int]:
        """Indices of a maximal set of linearly independent rows, greedy in order."""
        m = np.asarray(m, dtype=self.dtype)
        # pivot columns of the transpose are independent rows of m
        t = np.array(m.T, dtype=self.dtype, copy=True)
        return self._eliminate(t)


@lru_cache(maxsize=None)
def field(w: int = DEFAULT_WIDTH) -> GF:
    return GF(w)


def rank(m, w: int = DEFAULT_WIDTH) -> int:
    return field(w).rank(m)


def solve(a, b, w: int = DEFAULT_WIDTH) -> np.ndarray:
    return field(w).solve(a, b)


def random_matrix(rows: int, cols: int, seed, w: int = DEFAULT_WIDTH) -> np.ndarray:
    """Seeded uniform random matrix; the same seed always yields the same matrix."""
    return field(w).random_matrix(rows, cols, np.random.default_rng(seed))
