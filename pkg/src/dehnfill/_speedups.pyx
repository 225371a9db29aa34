# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: hot loops behind the same API as _kernels_py."""

from libc.math cimport round as c_round

DEF MAXN = 16


def mat_mul_int(a, b, Py_ssize_t n):
    cdef Py_ssize_t i, j, k
    cdef object s
    bt = list(zip(*b))
    out = []
    for i in range(n):
        ai = a[i]
        row = []
        for j in range(n):
            bj = bt[j]
            s = ai[0] * bj[0]
            for k in range(1, n):
                s = s + ai[k] * bj[k]
            row.append(s)
        out.append(tuple(row))
    return tuple(out)


def apply_ops_inplace(list m, ops, Py_ssize_t n):
    cdef Py_ssize_t r, i0, j0, tag
    cdef object x
    cdef list row
    for op in ops:
        tag = op[0]
        if tag == 0:
            i0 = op[1]
            j0 = op[2]
            x = op[3]
            if x:
                for r in range(n):
                    row = m[r]
                    row[j0] = row[j0] + x * row[i0]
        else:
            signs = op[1]
            for j0 in range(n):
                if signs[j0] < 0:
                    for r in range(n):
                        row = m[r]
                        row[j0] = -row[j0]
    return m


def eval_ops(ops, Py_ssize_t n):
    cdef Py_ssize_t i, j
    cdef list m = []
    cdef list row
    for i in range(n):
        row = []
        for j in range(n):
            row.append(1 if i == j else 0)
        m.append(row)
    apply_ops_inplace(m, ops, n)
    return tuple(tuple(r) for r in m)


def is_identity_ops(ops, Py_ssize_t n):
    cdef Py_ssize_t i, j
    m = eval_ops(ops, n)
    for i in range(n):
        mi = m[i]
        for j in range(n):
            if mi[j] != (1 if i == j else 0):
                return False
    return True


cdef inline double _dotc(double* u, double* v, Py_ssize_t n):
    cdef double s = 0.0
    cdef Py_ssize_t t
    for t in range(n):
        s += u[t] * v[t]
    return s


cdef void _gsc(double* b, double* mu, double* c, Py_ssize_t n):
    cdef double bs[MAXN * MAXN]
    cdef double mij, cj
    cdef Py_ssize_t i, j, t
    for i in range(n):
        for t in range(n):
            bs[i * n + t] = b[i * n + t]
        for j in range(i):
            cj = c[j]
            if cj > 0.0:
                mij = _dotc(&b[i * n], &bs[j * n], n) / cj
            else:
                mij = 0.0
            mu[i * n + j] = mij
            if mij != 0.0:
                for t in range(n):
                    bs[i * n + t] -= mij * bs[j * n + t]
        c[i] = _dotc(&bs[i * n], &bs[i * n], n)


def lll_reduce(basis, double delta, long itercap=100000):
    """Same contract as _kernels_py.lll_reduce."""
    cdef Py_ssize_t n = len(basis)
    if n > MAXN:
        raise ValueError("dimension too large for compiled kernel")
    cdef double b[MAXN * MAXN]
    cdef double mu[MAXN * MAXN]
    cdef double c[MAXN]
    cdef double tmp[MAXN]
    cdef Py_ssize_t i, j, t, k
    cdef long iters = 0
    cdef double q
    cdef object qi
    cdef bint changed
    for i in range(n):
        row = basis[i]
        for t in range(n):
            b[i * n + t] = row[t]
    umat = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    _gsc(b, mu, c, n)
    k = 1
    while k < n:
        iters += 1
        if iters > itercap:
            return umat, [[b[i * n + t] for t in range(n)] for i in range(n)], False
        changed = False
        for j in range(k - 1, -1, -1):
            q = c_round(mu[k * n + j])
            if q != 0.0:
                for t in range(n):
                    b[k * n + t] -= q * b[j * n + t]
                qi = int(q)
                uj = umat[j]
                uk = umat[k]
                for t in range(n):
                    uk[t] = uk[t] - qi * uj[t]
                for t in range(j):
                    mu[k * n + t] -= q * mu[j * n + t]
                mu[k * n + j] -= q
                changed = True
        if c[k] < (delta - mu[k * n + k - 1] * mu[k * n + k - 1]) * c[k - 1]:
            for t in range(n):
                tmp[t] = b[k * n + t]
                b[k * n + t] = b[(k - 1) * n + t]
                b[(k - 1) * n + t] = tmp[t]
            umat[k], umat[k - 1] = umat[k - 1], umat[k]
            _gsc(b, mu, c, n)
            k = max(k - 1, 1)
        else:
            if changed:
                _gsc(b, mu, c, n)
            k += 1
    return umat, [[b[i * n + t] for t in range(n)] for i in range(n)], True
