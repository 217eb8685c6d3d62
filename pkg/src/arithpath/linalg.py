"""Linear algebra over Z/p^M by valuation-pivoted elimination.

Two routines live here:

* ``det_valuation`` -- valuation of a square determinant, used for resultants.
  Matrices reach dimension p^n + lambda (1370 for p=37, n=2), so rows are
  numpy arrays and a pivot step only touches rows that are nonzero in the
  pivot column.
* ``smith_valuations`` -- Smith-form diagonal valuations of small integer
  matrices, used to size kernels and images of finite abelian p-group maps.

Pivots always have minimal valuation in the remaining block, so the
eliminations never lose precision: every entry is divisible by the pivot's
p-power and the quotient is only ever multiplied by entries of at least the
same valuation.
"""
from __future__ import annotations

import numpy as np

from .errors import PrecisionExhausted

# moduli below this bound use the int64 + float64 quotient trick in _mulmod
_INT64_MODULUS_LIMIT = 2**50


def _mulmod(a, b, m: int):
    """Elementwise a*b mod m for int64 arrays with 0 <= a, b < m < 2**50."""
    if a.dtype == object or b.dtype == object:
        return (a * b) % m
    q = np.floor(a.astype(np.float64) * b.astype(np.float64) / float(m)).astype(np.int64)
    with np.errstate(over="ignore"):
        r = a * b - q * np.int64(m)
    r = np.where(r < 0, r + m, r)
    r = np.where(r >= m, r - m, r)
    return r


def _valuations(block: np.ndarray, p: int, cap: int) -> np.ndarray:
    v = np.zeros(block.shape, dtype=np.int64)
    cur = block.copy()
    alive = cur != 0
    v[~alive] = cap
    for _ in range(cap):
        div = alive & (cur % p == 0)
        if not div.any():
            break
        v[div] += 1
        cur = np.where(div, cur // p, cur)
        alive = div
    return v


def det_valuation(matrix, p: int, M: int) -> int:
    """v_p(det A) for an integer matrix known modulo p**M.

    Raises PrecisionExhausted when the determinant is 0 mod p**M.
    """
    mod = p**M
    n = len(matrix)
    if n == 0:
        return 0
    dtype = np.int64 if mod < _INT64_MODULUS_LIMIT else object
    if dtype is object:
        A = np.array([[int(x) % mod for x in row] for row in matrix], dtype=object)
    else:
        A = np.array(matrix, dtype=object).astype(object) % mod
        A = A.astype(np.int64)
    total = 0
    for s in range(n):
        col = A[s:, s]
        units = np.nonzero(col % p != 0)[0]
        if units.size:
            r, c, v = s + int(units[0]), s, 0
        else:
            block = A[s:, s:]
            vals = _valuations(block, p, M)
            flat = int(np.argmin(vals))
            v = int(vals.flat[flat])
            if v >= M:
                raise PrecisionExhausted(
                    f"determinant vanishes mod {p}^{M}; rebuild with larger precision"
                )
            r, c = s + flat // block.shape[1], s + flat % block.shape[1]
        if r != s:
            A[[s, r], :] = A[[r, s], :]
        if c != s:
            A[:, [s, c]] = A[:, [c, s]]
        total += v
        if total >= M:
            raise PrecisionExhausted(f"determinant valuation reaches {p}^{M}")
        piv = int(A[s, s])
        pv = p**v
        inv_unit = pow(piv // pv, -1, mod)
        below = A[s + 1 :, s]
        rows = np.nonzero(below)[0] + s + 1
        if rows.size == 0:
            continue
        factors = (A[rows, s] // pv) % mod
        factors = _mulmod(factors, np.full_like(factors, inv_unit), mod)
        prow = A[s, s:]
        upd = _mulmod(np.repeat(factors[:, None], prow.size, axis=1), np.tile(prow, (rows.size, 1)), mod)
        A[rows, s:] = (A[rows, s:] - upd) % mod
    return total


def smith_valuations(matrix, p: int, M: int) -> list[int]:
    """Diagonal valuations of the Smith form of an integer matrix over Z/p^M.

    Entries with valuation >= M count as zero and are reported as M.  The
    list has min(rows, cols) entries.  Pivot choice: minimal valuation, ties
    broken by lowest row, then lowest column.
    """
    mod = p**M
    A = [[int(x) % mod for x in row] for row in matrix]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    out = []

    def val(x):
        if x == 0:
            return M
        v = 0
        while x % p == 0:
            x //= p
            v += 1
        return v

    for s in range(min(rows, cols)):
        best = None
        for i in range(s, rows):
            for j in range(s, cols):
                x = A[i][j]
                if x:
                    v = val(x)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            out.extend([M] * (min(rows, cols) - s))
            break
        v, r, c = best
        A[s], A[r] = A[r], A[s]
        for row in A:
            row[s], row[c] = row[c], row[s]
        pv = p**v
        inv_unit = pow(A[s][s] // pv, -1, mod)
        # clear the pivot column
        for i in range(s + 1, rows):
            if A[i][s]:
                f = (A[i][s] // pv) * inv_unit % mod
                A[i] = [(a - f * b) % mod for a, b in zip(A[i], A[s])]
        # clear the pivot row (column operations)
        for j in range(s + 1, cols):
            if A[s][j]:
                f = (A[s][j] // pv) * inv_unit % mod
                for i in range(s, rows):
                    A[i][j] = (A[i][j] - f * A[i][s]) % mod
        out.append(v)
    return out
