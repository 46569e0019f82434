# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the tridiagonal pencil solver and the small
Hermitian eigenvalue routine.

Every function here has a numpy twin in :mod:`nmmb._pykernels` with the
same signature and the same arithmetic; :mod:`nmmb.kernels` picks one at
import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, copysign, hypot

cnp.import_array()


def sturm_counts(const double[::1] kd, const double[::1] ko,
                 const double[::1] md, const double[::1] mo,
                 const double[::1] shifts, double pivmin):
    """Number of eigenvalues of the pencil (K, M) strictly below each shift.

    Inertia of the LDL^T pivots of K - s M (Sylvester). Rows run in the
    outer loop so the shift loop vectorises.
    """
    cdef Py_ssize_t n = kd.shape[0], ns = shifts.shape[0], i, j
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(ns, dtype=np.int64)
    cdef cnp.int64_t[::1] cnt = out
    cdef double[::1] d = np.empty(ns)
    cdef double s, b, a, kdi, mdi, koi, moi, dj
    if ns == 0 or n == 0:
        return out
    cdef double* dp = &d[0]
    cdef cnp.int64_t* cp = &cnt[0]
    cdef const double* sp = &shifts[0]
    with nogil:
        for j in range(ns):
            dj = kd[0] - sp[j] * md[0]
            dj = -pivmin if fabs(dj) <= pivmin else dj
            dp[j] = dj
            cp[j] = dj < 0.0
        for i in range(1, n):
            kdi = kd[i]
            mdi = md[i]
            koi = ko[i - 1]
            moi = mo[i - 1]
            for j in range(ns):
                s = sp[j]
                b = koi - s * moi
                dj = (kdi - s * mdi) - b * b / dp[j]
                dj = -pivmin if fabs(dj) <= pivmin else dj
                dp[j] = dj
                cp[j] += dj < 0.0
    return out


cdef void _factor(Py_ssize_t n, const double[::1] kd, const double[::1] ko,
                  const double[::1] md, const double[::1] mo, double s,
                  double* dl, double* dd, double* du, double* du2,
                  char* piv, double tiny) nogil:
    # LU with partial pivoting of the tridiagonal K - s M (dgttrf layout)
    cdef Py_ssize_t i
    cdef double fact, temp
    for i in range(n):
        dd[i] = kd[i] - s * md[i]
    for i in range(n - 1):
        dl[i] = ko[i] - s * mo[i]
        du[i] = dl[i]
        du2[i] = 0.0
        piv[i] = 0
    for i in range(n - 1):
        if fabs(dd[i]) >= fabs(dl[i]):
            if dd[i] == 0.0:
                dd[i] = tiny
            fact = dl[i] / dd[i]
            dl[i] = fact
            dd[i + 1] -= fact * du[i]
        else:
            fact = dd[i] / dl[i]
            dd[i] = dl[i]
            dl[i] = fact
            temp = du[i]
            du[i] = dd[i + 1]
            dd[i + 1] = temp - fact * dd[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
            piv[i] = 1
    if dd[n - 1] == 0.0:
        dd[n - 1] = tiny
    for i in range(n):
        if fabs(dd[i]) < tiny:
            dd[i] = copysign(tiny, dd[i])


cdef void _solve(Py_ssize_t n, double* dl, double* dd, double* du,
                 double* du2, char* piv, double* x) nogil:
    cdef Py_ssize_t i
    cdef double temp
    for i in range(n - 1):
        if piv[i] == 0:
            x[i + 1] -= dl[i] * x[i]
        else:
            temp = x[i]
            x[i] = x[i + 1]
            x[i + 1] = temp - dl[i] * x[i]
    x[n - 1] /= dd[n - 1]
    if n > 1:
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2]
    i = n - 3
    while i >= 0:
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i]
        i -= 1


cdef double _mass_apply(Py_ssize_t n, const double[::1] md,
                        const double[::1] mo, double* x, double* y) nogil:
    # y = M x, returns x^T M x
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        y[i] = md[i] * x[i]
    for i in range(n - 1):
        y[i] += mo[i] * x[i + 1]
        y[i + 1] += mo[i] * x[i]
    for i in range(n):
        acc += x[i] * y[i]
    return acc


def inverse_iteration(const double[::1] kd, const double[::1] ko,
                      const double[::1] md, const double[::1] mo,
                      const double[::1] shifts, double[:, ::1] X,
                      int n_iter, double tiny):
    """Shifted inverse iteration, one row of ``X`` per shift, in place.

    Each sweep solves (K - s M) y = M x and rescales y to unit M-norm.
    """
    cdef Py_ssize_t n = kd.shape[0], ns = shifts.shape[0], j, i
    cdef int it
    cdef double nrm
    cdef double[::1] dl = np.empty(max(n - 1, 1))
    cdef double[::1] dd = np.empty(n)
    cdef double[::1] du = np.empty(max(n - 1, 1))
    cdef double[::1] du2 = np.empty(max(n - 1, 1))
    cdef char[::1] piv = np.zeros(max(n - 1, 1), dtype=np.int8)
    cdef double[::1] y = np.empty(n)
    with nogil:
        for j in range(ns):
            _factor(n, kd, ko, md, mo, shifts[j], &dl[0], &dd[0], &du[0],
                    &du2[0], &piv[0], tiny)
            for it in range(n_iter):
                _mass_apply(n, md, mo, &X[j, 0], &y[0])
                _solve(n, &dl[0], &dd[0], &du[0], &du2[0], &piv[0], &y[0])
                nrm = sqrt(_mass_apply(n, md, mo, &y[0], &X[j, 0]))
                for i in range(n):
                    X[j, i] = y[i] / nrm
    return np.asarray(X)


def tridiagonal_eigenvalues(const double[::1] diag, const double[::1] off,
                            int max_sweeps=60):
    """Eigenvalues of a real symmetric tridiagonal matrix by implicit QL
    with Wilkinson shifts. ``off[i]`` couples rows i and i+1."""
    cdef Py_ssize_t n = diag.shape[0], l, m, i, it
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d_arr = np.array(diag, dtype=np.float64)
    cdef double[::1] d = d_arr
    cdef double[::1] e = np.zeros(n)
    cdef double g, r, p, s, c, f, b, dd, floor = 0.0
    for i in range(n - 1):
        e[i] = off[i]
    # absolute floor eps*||T|| lets blocks with zero diagonals deflate
    for i in range(n):
        dd = fabs(d[i]) + fabs(e[i]) + (fabs(e[i - 1]) if i > 0 else 0.0)
        if dd > floor:
            floor = dd
    floor *= 2.220446049250313e-16
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = fabs(d[m]) + fabs(d[m + 1])
                if fabs(e[m]) <= 2.220446049250313e-16 * dd or fabs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_sweeps:
                raise ArithmeticError("implicit QL did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if r == 0.0 and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    d_arr.sort()
    return d_arr
