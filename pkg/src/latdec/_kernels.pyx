# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled decoding kernels.

Bit-compatible twin of ``_kernels_py``: same arithmetic, same traversal
order, same outputs.  Compiled with -ffp-contract=off so no fused
multiply-adds diverge from the pure-Python reference.  Trace collection
is not supported here; traced calls go through the Python twin.
"""

from libc.math cimport ceil, exp, floor, log, sqrt

import numpy as np

from .errors import ResourceLimitError, SingularBasisError

BACKEND = "cython"

cdef double THRESH = 1.0 - 1e-12
cdef double D2_EPS = 1e-12
cdef double RHO_TOL = 1e-15


cdef inline long _nearest(double c):
    return <long>ceil(c - 0.5)


def babai_kernel(R, y):
    cdef const double[:, ::1] Rm = np.ascontiguousarray(R, dtype=np.float64)
    cdef const double[::1] ym = np.ascontiguousarray(y, dtype=np.float64)
    cdef int n = ym.shape[0]
    out = np.zeros(n, dtype=np.int64)
    cdef long long[::1] x = out
    cdef int i, j
    cdef double acc
    for i in range(n - 1, -1, -1):
        acc = 0.0
        for j in range(i + 1, n):
            acc += Rm[i, j] * x[j]
        x[i] = _nearest((ym[i] - acc) / Rm[i, i])
    return out


cdef class _Search:
    cdef const double[:, ::1] R
    cdef const double[::1] y
    cdef long long[::1] x
    cdef int n, j_limit, j_max
    cdef bint protection
    cdef long long visited, protected, probed, node_cap
    cdef double sigma, d2_eff, d2_half, rad_scale
    cdef list cands, d2s

    cdef int _bump(self) except -1:
        self.visited += 1
        if self.visited > self.node_cap:
            raise ResourceLimitError(f"node cap {self.node_cap} exceeded")
        return 0

    cdef int _emit(self, double d2) except -1:
        cdef int t
        self.cands.append(tuple([self.x[t] for t in range(self.n)]))
        self.d2s.append(d2)
        return 0

    cdef double _sic_fill(self, int i_from) except? -1.0:
        cdef double add = 0.0
        cdef double acc, center, d
        cdef int m, j
        for m in range(i_from, -1, -1):
            acc = 0.0
            for j in range(m + 1, self.n):
                acc += self.R[m, j] * self.x[j]
            center = (self.y[m] - acc) / self.R[m, m]
            self.x[m] = _nearest(center)
            d = self.R[m, m] * (self.x[m] - center)
            add += d * d
        return add

    cdef int _enum_rec(self, int i, double ssq) except -1:
        cdef double acc = 0.0
        cdef double center, rem, t, d, ssq_c, rii
        cdef int j, count
        cdef long lo, hi, z, a, b
        for j in range(i + 1, self.n):
            acc += self.R[i, j] * self.x[j]
        rii = self.R[i, i]
        center = (self.y[i] - acc) / rii
        rem = self.d2_eff - ssq
        if rem < 0.0:
            return 0
        t = sqrt(rem) / rii
        lo = <long>ceil(center - t)
        hi = <long>floor(center + t)
        if hi < lo:
            return 0
        z = _nearest(center)
        if z < lo:
            z = lo
        elif z > hi:
            z = hi
        a = z - 1
        b = z + 1
        count = 0
        while True:
            d = rii * (z - center)
            ssq_c = ssq + d * d
            self.x[i] = z
            self._bump()
            if i == 0:
                self._emit(ssq_c)
            else:
                self._enum_rec(i - 1, ssq_c)
            count += 1
            if self.j_limit > 0 and count >= self.j_limit:
                break
            if a >= lo and (b > hi or center - a <= b - center):
                z = a
                a -= 1
            elif b <= hi:
                z = b
                b += 1
            else:
                break
        return 0

    cdef int _esd_rec(self, int i, double ssq) except -1:
        cdef double acc = 0.0
        cdef double center, rem, t, d, ssq_c, rii, add
        cdef int j, count
        cdef long lo, hi, z, a, b
        for j in range(i + 1, self.n):
            acc += self.R[i, j] * self.x[j]
        rii = self.R[i, i]
        center = (self.y[i] - acc) / rii
        rem = self.d2_eff - ssq
        if rem < 0.0:
            return 0
        t = sqrt(rem) / rii
        lo = <long>ceil(center - t)
        hi = <long>floor(center + t)
        if hi < lo:
            return 0
        z = _nearest(center)
        if z < lo:
            z = lo
        elif z > hi:
            z = hi
        a = z - 1
        b = z + 1
        count = 0
        while True:
            d = rii * (z - center)
            ssq_c = ssq + d * d
            self.x[i] = z
            self._bump()
            if i == 0:
                self._emit(ssq_c)
            elif ssq_c <= self.d2_half:
                self._esd_rec(i - 1, ssq_c)
            else:
                add = self._sic_fill(i - 1)
                self.visited += i
                if self.visited > self.node_cap:
                    raise ResourceLimitError(f"node cap {self.node_cap} exceeded")
                self.protected += 1
                self._emit(ssq_c + add)
            count += 1
            if self.j_limit > 0 and count >= self.j_limit:
                break
            if a >= lo and (b > hi or center - a <= b - center):
                z = a
                a -= 1
            elif b <= hi:
                z = b
                b += 1
            else:
                break
        return 0

    cdef int _rsd_rec(self, int i, double kappa, double ssq) except -1:
        cdef double acc = 0.0
        cdef double center, sig, inv2s2, rho, dz, d, p, kc, dd, ssq_c, rii, add
        cdef double d0, e0
        cdef int j, count
        cdef long rad, z, a, b, zz, wlo, whi
        for j in range(i + 1, self.n):
            acc += self.R[i, j] * self.x[j]
        rii = self.R[i, i]
        center = (self.y[i] - acc) / rii
        sig = self.sigma / rii
        inv2s2 = 1.0 / (2.0 * sig * sig)
        rad = <long>ceil(sig * self.rad_scale) + 2
        wlo = <long>ceil(center - rad)
        whi = <long>floor(center + rad)
        z = _nearest(center)
        d0 = z - center
        e0 = d0 * d0 * inv2s2  # rescale by the dominant term; tiny sig_i
        rho = 0.0              # would otherwise underflow the whole mass
        for zz in range(wlo, whi + 1):
            dz = zz - center
            rho += exp(e0 - dz * dz * inv2s2)
        a = z - 1
        b = z + 1
        count = 0
        while count < self.j_max:
            d = z - center
            p = exp(e0 - d * d * inv2s2) / rho
            kc = kappa * p
            if kc < THRESH:
                self.probed += 1
                break  # children are probed closest-first; the rest only shrink
            self.x[i] = z
            self._bump()
            dd = rii * d
            ssq_c = ssq + dd * dd
            if i == 0:
                self._emit(ssq_c)
            elif self.protection and kc < 2.0:
                add = self._sic_fill(i - 1)
                self.visited += i
                if self.visited > self.node_cap:
                    raise ResourceLimitError(f"node cap {self.node_cap} exceeded")
                self.protected += 1
                self._emit(ssq_c + add)
            else:
                self._rsd_rec(i - 1, kc, ssq_c)
            count += 1
            # two-pointer outward walk, smaller integer wins distance ties
            if center - a <= b - center:
                z = a
                a -= 1
            else:
                z = b
                b += 1
        return 0


cdef _Search _make(R, y, long long node_cap):
    cdef _Search s = _Search()
    s.R = np.ascontiguousarray(R, dtype=np.float64)
    s.y = np.ascontiguousarray(y, dtype=np.float64)
    s.n = s.y.shape[0]
    s.x = np.zeros(s.n, dtype=np.int64)
    s.node_cap = node_cap
    s.visited = 0
    s.protected = 0
    s.probed = 0
    s.cands = []
    s.d2s = []
    return s


def enum_kernel(R, y, double d2_limit, long long node_cap, int j_limit=0):
    cdef _Search s = _make(R, y, node_cap)
    s.j_limit = j_limit
    s.d2_eff = d2_limit * (1.0 + D2_EPS)
    s._enum_rec(s.n - 1, 0.0)
    return s.cands, s.d2s, s.visited


def esd_protect_kernel(R, y, double sigma, double k, long long node_cap,
                       int j_limit=0):
    cdef _Search s = _make(R, y, node_cap)
    cdef double dr, ssq
    if k < 2.0:
        ssq = s._sic_fill(s.n - 1)
        s.visited = s.n
        s.protected = 1
        s._emit(ssq)
        return s.cands, s.d2s, s.visited, s.protected
    s.j_limit = j_limit
    dr = sigma * sqrt(2.0 * log(k))
    s.d2_eff = (dr * dr) * (1.0 + D2_EPS)
    s.d2_half = 2.0 * sigma * sigma * log(k / 2.0)
    s._esd_rec(s.n - 1, 0.0)
    return s.cands, s.d2s, s.visited, s.protected


def rsd_kernel(R, y, double sigma, double k, int j_max, bint protection,
               long long node_cap):
    cdef _Search s = _make(R, y, node_cap)
    cdef double ssq
    if protection and k < 2.0:
        ssq = s._sic_fill(s.n - 1)
        s.visited = s.n
        s.protected = 1
        s._emit(ssq)
        return s.cands, s.d2s, s.visited, s.protected, s.probed
    s.j_max = j_max
    s.protection = protection
    s.sigma = sigma
    s.rad_scale = sqrt(2.0 * log(1.0 / RHO_TOL))
    s._rsd_rec(s.n - 1, k, 0.0)
    return s.cands, s.d2s, s.visited, s.protected, s.probed


cdef int _gs(double[:, ::1] cols, double[:, ::1] bstar, double[:, ::1] mu,
             double[::1] norm2, double[::1] v, int n) except -1:
    cdef int i, j, t
    cdef double num, m, ss
    for i in range(n):
        for t in range(n):
            v[t] = cols[i, t]
        for j in range(i):
            num = 0.0
            for t in range(n):
                num += v[t] * bstar[j, t]
            m = num / norm2[j]
            mu[i, j] = m
            for t in range(n):
                v[t] -= m * bstar[j, t]
        ss = 0.0
        for t in range(n):
            ss += v[t] * v[t]
        if ss <= 1e-24:
            raise SingularBasisError("basis is numerically rank deficient")
        for t in range(n):
            bstar[i, t] = v[t]
        norm2[i] = ss
    return 0


def lll_kernel(B, double delta):
    Bm = np.ascontiguousarray(B, dtype=np.float64)
    cdef const double[:, ::1] Bv = Bm
    cdef int n = Bv.shape[0]
    cols_np = np.empty((n, n), dtype=np.float64)
    ucols_np = np.zeros((n, n), dtype=np.int64)
    cdef double[:, ::1] cols = cols_np
    cdef long long[:, ::1] ucols = ucols_np
    cdef double[:, ::1] bstar = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] mu = np.zeros((n, n), dtype=np.float64)
    cdef double[::1] norm2 = np.zeros(n, dtype=np.float64)
    cdef double[::1] v = np.zeros(n, dtype=np.float64)
    cdef int j, t, k
    cdef long guard = 0
    cdef long q
    cdef double tmpd
    cdef long long tmpl
    for j in range(n):
        for t in range(n):
            cols[j, t] = Bv[t, j]
        ucols[j, j] = 1
    _gs(cols, bstar, mu, norm2, v, n)
    k = 1
    while k < n:
        guard += 1
        if guard > 1000000:
            raise RuntimeError("LLL failed to converge")
        for j in range(k - 1, -1, -1):
            q = _nearest(mu[k, j])
            if q != 0:
                for t in range(n):
                    cols[k, t] -= q * cols[j, t]
                    ucols[k, t] -= q * ucols[j, t]
                for t in range(j):
                    mu[k, t] -= q * mu[j, t]
                mu[k, j] -= q
        if norm2[k] >= (delta - mu[k, k - 1] * mu[k, k - 1]) * norm2[k - 1]:
            k += 1
        else:
            for t in range(n):
                tmpd = cols[k - 1, t]
                cols[k - 1, t] = cols[k, t]
                cols[k, t] = tmpd
                tmpl = ucols[k - 1, t]
                ucols[k - 1, t] = ucols[k, t]
                ucols[k, t] = tmpl
            _gs(cols, bstar, mu, norm2, v, n)
            k = k - 1 if k - 1 > 1 else 1
    u = np.empty((n, n), dtype=np.int64)
    cdef long long[:, ::1] uv = u
    for j in range(n):
        for t in range(n):
            uv[t, j] = ucols[j, t]
    return u
