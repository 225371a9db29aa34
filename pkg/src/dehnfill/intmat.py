"""Exact arbitrary-precision integer matrix layer.

Everything here is immutable and pure: GroupElement values are determinant-one
integer matrices stored as row tuples, Sublattice values are Hermite-canonical
bases of integer row spans. All group computations in the package bottom out
in this module (floats live in symspace only).
"""

from __future__ import annotations

from math import gcd

from . import kernels


class DimensionError(ValueError):
    pass


def det_int(rows):
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n = len(rows)
    m = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        pk = m[k][k]
        for i in range(k + 1, n):
            mik = m[i][k]
            mi = m[i]
            mk = m[k]
            for j in range(k + 1, n):
                mi[j] = (mi[j] * pk - mik * mk[j]) // prev
            mi[k] = 0
        prev = pk
    return sign * m[n - 1][n - 1]


def inv_unimodular(rows):
    """Exact inverse of an integer matrix with determinant +-1.

    Fraction-free Gauss-Jordan (Montante); the augmented right half ends up
    holding the adjugate and the diagonal the (permuted) determinant.
    """
    n = len(rows)
    m = [list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(rows)]
    w = 2 * n
    prev = 1
    for k in range(n):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    break
            else:
                raise ZeroDivisionError("singular matrix")
        pivot = m[k][k]
        for i in range(n):
            if i == k:
                continue
            mik = m[i][k]
            mi = m[i]
            mk = m[k]
            for j in range(w):
                if j == k:
                    continue
                mi[j] = (pivot * mi[j] - mik * mk[j]) // prev
            mi[k] = 0
        prev = pivot
    d = m[0][0]
    if d not in (1, -1):
        raise ZeroDivisionError(f"matrix not unimodular (det {d})")
    if d == 1:
        return tuple(tuple(m[i][n:]) for i in range(n))
    return tuple(tuple(-v for v in m[i][n:]) for i in range(n))


def _identity_rows(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


class GroupElement:
    """Exact n x n integer matrix with determinant one."""

    __slots__ = ("n", "rows", "_hash")

    def __init__(self, rows):
        self.rows = tuple(tuple(int(v) for v in row) for row in rows)
        self.n = len(self.rows)
        if self.n < 2 or any(len(r) != self.n for r in self.rows):
            raise DimensionError("matrix must be square, n >= 2")
        if det_int(self.rows) != 1:
            raise ValueError("determinant must be 1")
        self._hash = None

    @classmethod
    def _wrap(cls, rows):
        # for internal construction from operations that preserve det = 1
        self = object.__new__(cls)
        self.rows = rows
        self.n = len(rows)
        self._hash = None
        return self

    @classmethod
    def identity(cls, n):
        return cls._wrap(_identity_rows(n))

    @classmethod
    def elementary(cls, n, i, j, x=1):
        """e_ij(x): identity with x at row i, column j (1-based, i != j)."""
        if not (1 <= i <= n and 1 <= j <= n and i != j):
            raise ValueError("need 1 <= i != j <= n")
        rows = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
        rows[i - 1][j - 1] = int(x)
        return cls._wrap(tuple(tuple(r) for r in rows))

    @classmethod
    def diagonal(cls, signs):
        signs = tuple(int(s) for s in signs)
        if any(s not in (1, -1) for s in signs) or signs.count(-1) % 2:
            raise ValueError("diagonal element needs +-1 entries, evenly many -1")
        n = len(signs)
        return cls._wrap(tuple(tuple(signs[r] if r == c else 0 for c in range(n))
                               for r in range(n)))

    def __mul__(self, other):
        if self.n != other.n:
            raise DimensionError("dimension mismatch")
        return GroupElement._wrap(kernels.mat_mul_int(self.rows, other.rows, self.n))

    def inverse(self):
        return GroupElement._wrap(inv_unimodular(self.rows))

    def __eq__(self, other):
        return isinstance(other, GroupElement) and self.rows == other.rows

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.rows)
        return self._hash

    def is_identity(self):
        rows = self.rows
        for i in range(self.n):
            ri = rows[i]
            for j in range(self.n):
                if ri[j] != (1 if i == j else 0):
                    return False
        return True

    def norm2sq(self):
        return sum(v * v for row in self.rows for v in row)

    def norm_inf(self):
        return max(abs(v) for row in self.rows for v in row)

    def entry(self, i, j):
        """1-based entry access."""
        return self.rows[i - 1][j - 1]

    def __repr__(self):
        return f"GroupElement({list(map(list, self.rows))})"


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    return a * b


def invert(a: GroupElement) -> GroupElement:
    return a.inverse()


def norm2sq(a: GroupElement) -> int:
    return a.norm2sq()


def norm_inf(a: GroupElement) -> int:
    return a.norm_inf()


def _ext_gcd(a, b):
    """(g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        return -old_r, -old_s, -old_t
    return old_r, old_s, old_t


class Sublattice:
    """Integer row span in Hermite canonical form; equality is representation
    equality."""

    __slots__ = ("n", "basis", "rank")

    def __init__(self, n, basis):
        self.n = n
        self.basis = tuple(tuple(int(v) for v in row) for row in basis)
        self.rank = len(self.basis)

    def __eq__(self, other):
        return (isinstance(other, Sublattice) and self.n == other.n
                and self.basis == other.basis)

    def __hash__(self):
        return hash((self.n, self.basis))

    def contains(self, vec):
        v = list(vec)
        for row in self.basis:
            c = next((t for t, x in enumerate(row) if x), None)
            if c is None:
                continue
            if v[c] % row[c] == 0:
                q = v[c] // row[c]
                if q:
                    for t in range(self.n):
                        v[t] -= q * row[t]
        return not any(v)

    def transform(self, mat_rows):
        """Span of basis @ M for an integer matrix M (rows acting on the right)."""
        n = self.n
        out = []
        for row in self.basis:
            out.append(tuple(sum(row[k] * mat_rows[k][j] for k in range(n))
                             for j in range(n)))
        return hermite_span(out, n)

    def __repr__(self):
        return f"Sublattice(n={self.n}, rank={self.rank}, basis={list(map(list, self.basis))})"


def hermite_span(vectors, n) -> Sublattice:
    """Hermite-canonical basis of the integer span of the given row vectors."""
    pivots = {}
    for vec in vectors:
        v = [int(x) for x in vec]
        if len(v) != n:
            raise DimensionError("vector length mismatch")
        c = 0
        while c < n:
            if v[c] == 0:
                c += 1
                continue
            if c not in pivots:
                pivots[c] = v
                break
            p = pivots[c]
            g, s, t = _ext_gcd(p[c], v[c])
            pc, vc = p[c] // g, v[c] // g
            newp = [s * p[k] + t * v[k] for k in range(n)]
            newv = [pc * v[k] - vc * p[k] for k in range(n)]
            pivots[c] = newp
            v = newv
            c += 1
    cols = sorted(pivots)
    rows = []
    for c in cols:
        row = pivots[c]
        if row[c] < 0:
            row = [-x for x in row]
        rows.append(row)
    # reduce entries above each pivot into [0, pivot)
    for idx in range(len(rows) - 1, -1, -1):
        c = cols[idx]
        p = rows[idx][c]
        for above in range(idx):
            q = rows[above][c] // p
            if q:
                ra = rows[above]
                rp = rows[idx]
                for t in range(n):
                    ra[t] -= q * rp[t]
    return Sublattice(n, rows)


def standard_tail_lattice(n, j) -> Sublattice:
    """Span of the last standard basis vectors z_j ... z_n (1-based j)."""
    rows = []
    for r in range(j - 1, n):
        rows.append(tuple(1 if c == r else 0 for c in range(n)))
    return Sublattice(n, rows)
