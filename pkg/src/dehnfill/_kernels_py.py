"""Pure-Python kernels: reference implementations of the hot loops.

The compiled twin lives in _speedups.pyx; kernels.py picks one at import.
Semantics here are the contract - the Cython module must match exactly.

Op encoding used by apply_ops_inplace / eval_ops:
  (0, i0, j0, x)  right-multiply by the elementary matrix with x at (i0, j0)
                  (0-based indices), i.e. col[j0] += x * col[i0]
  (1, signs)      right-multiply by diag(signs), signs a tuple of +-1
"""

from __future__ import annotations


def mat_mul_int(a, b, n):
    """Exact product of two n x n integer matrices given as row tuples."""
    bt = list(zip(*b))
    out = []
    for i in range(n):
        ai = a[i]
        row = []
        for j in range(n):
            bj = bt[j]
            s = 0
            for k in range(n):
                s += ai[k] * bj[k]
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


def apply_ops_inplace(m, ops, n):
    """Apply encoded letters to mutable row-list matrix m by column operations."""
    for op in ops:
        if op[0] == 0:
            i0 = op[1]
            j0 = op[2]
            x = op[3]
            if x:
                for r in range(n):
                    row = m[r]
                    row[j0] += x * row[i0]
        else:
            signs = op[1]
            for j0 in range(n):
                if signs[j0] < 0:
                    for r in range(n):
                        m[r][j0] = -m[r][j0]
    return m


def eval_ops(ops, n):
    """Evaluate encoded letters into row tuples, starting from the identity."""
    m = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    apply_ops_inplace(m, ops, n)
    return tuple(tuple(r) for r in m)


def is_identity_ops(ops, n):
    m = eval_ops(ops, n)
    for i in range(n):
        for j in range(n):
            if m[i][j] != (1 if i == j else 0):
                return False
    return True


def _dot(u, v, n):
    s = 0.0
    for t in range(n):
        s += u[t] * v[t]
    return s


def _gram_schmidt(bmat, n):
    mu = [[0.0] * n for _ in range(n)]
    bs = [None] * n
    c = [0.0] * n
    for i in range(n):
        v = list(bmat[i])
        for j in range(i):
            cj = c[j]
            mij = _dot(bmat[i], bs[j], n) / cj if cj > 0.0 else 0.0
            mu[i][j] = mij
            if mij != 0.0:
                bj = bs[j]
                for t in range(n):
                    v[t] -= mij * bj[t]
        bs[i] = v
        c[i] = _dot(v, v, n)
    return mu, c


def lll_reduce(basis, delta, itercap=100000):
    """Float LLL with exact integer transform tracking.

    basis: n x n rows (any float-convertible nesting). Returns (U, B, ok)
    where B = U @ basis row-reduced, U has arbitrary-precision int entries,
    and ok is False if the iteration cap was hit (numerical breakdown).
    """
    n = len(basis)
    bmat = [[float(v) for v in row] for row in basis]
    umat = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    mu, c = _gram_schmidt(bmat, n)
    k = 1
    iters = 0
    while k < n:
        iters += 1
        if iters > itercap:
            return umat, bmat, False
        changed = False
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q != 0:
                qf = float(q)
                bj = bmat[j]
                bk = bmat[k]
                for t in range(n):
                    bk[t] -= qf * bj[t]
                uj = umat[j]
                uk = umat[k]
                for t in range(n):
                    uk[t] -= q * uj[t]
                muk = mu[k]
                muj = mu[j]
                for t in range(j):
                    muk[t] -= qf * muj[t]
                muk[j] -= qf
                changed = True
        if c[k] < (delta - mu[k][k - 1] * mu[k][k - 1]) * c[k - 1]:
            bmat[k], bmat[k - 1] = bmat[k - 1], bmat[k]
            umat[k], umat[k - 1] = umat[k - 1], umat[k]
            mu, c = _gram_schmidt(bmat, n)
            k = max(k - 1, 1)
        else:
            if changed:
                mu, c = _gram_schmidt(bmat, n)
            k += 1
    return umat, bmat, True
