# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled segment-pair ratio minimum; see ``_pairs_py`` for the math."""

import numpy as np
from libc.math cimport sqrt, fabs, INFINITY, NAN

from ._pairs_py import ORIENT_BOUND, exact_crossing

cdef double _BOUND = ORIENT_BOUND


cdef inline double _hyp(double x, double y) nogil:
    return sqrt(x * x + y * y)


cdef inline double _edge(double wx, double wy, double d, double vx, double vy,
                         double h, double *bout) nogil:
    cdef double best = _hyp(wx, wy) / fabs(d)
    cdef double val, bs, den
    bout[0] = 0.0
    val = _hyp(wx + vx * h, wy + vy * h) / fabs(d + h)
    if val < best:
        best = val
        bout[0] = h
    den = (vx * vx + vy * vy) * d - (wx * vx + wy * vy)
    if den != 0.0:
        bs = ((wx * wx + wy * wy) - d * (wx * vx + wy * vy)) / den
        if bs > 0.0 and bs < h:
            val = _hyp(wx + vx * bs, wy + vy * bs) / fabs(d + bs)
            if val < best:
                best = val
                bout[0] = bs
    return best


cdef inline int _orient(double ax, double ay, double bx, double by, double cx, double cy) nogil:
    # sign of (a - c) x (b - c), or 2 when rounding could flip it
    cdef double left = (ax - cx) * (by - cy)
    cdef double right = (ay - cy) * (bx - cx)
    cdef double det = left - right
    if fabs(det) > _BOUND * (fabs(left) + fabs(right)):
        return 1 if det > 0 else -1
    return 2


cdef bint _crossing(double p0x, double p0y, double p1x, double p1y,
                    double q0x, double q0y, double q1x, double q1y) nogil:
    """Do the segments cross at a point interior to both?"""
    cdef int o1 = _orient(p0x, p0y, p1x, p1y, q0x, q0y)
    cdef int o2 = _orient(p0x, p0y, p1x, p1y, q1x, q1y)
    cdef int o3 = _orient(q0x, q0y, q1x, q1y, p0x, p0y)
    cdef int o4 = _orient(q0x, q0y, q1x, q1y, p1x, p1y)
    if o1 != 2 and o2 != 2 and o1 * o2 >= 0:
        return False
    if o3 != 2 and o4 != 2 and o3 * o4 >= 0:
        return False
    if o1 == 2 or o2 == 2 or o3 == 2 or o4 == 2:
        with gil:
            return exact_crossing(p0x, p0y, p1x, p1y, q0x, q0y, q1x, q1y)
    return True


cdef double _pair(const double[::1] t, const double[:, ::1] P, Py_ssize_t i,
                  Py_ssize_t j, double *pout, double *qout) nogil:
    cdef double t0 = t[i], t1 = t[i + 1], s0 = t[j], s1 = t[j + 1]
    cdef double hi = t1 - t0, hj = s1 - s0
    cdef double p0x = P[i, 0], p0y = P[i, 1], p1x = P[i + 1, 0], p1y = P[i + 1, 1]
    cdef double q0x = P[j, 0], q0y = P[j, 1], q1x = P[j + 1, 0], q1y = P[j + 1, 1]
    cdef double vix = (p1x - p0x) / hi, viy = (p1y - p0y) / hi
    cdef double vjx = (q1x - q0x) / hj, vjy = (q1y - q0y) / hj
    cdef double best, val, b, ex, ey, ee, lam, sig, gx, gy
    cdef double rx, ry, sx, sy, den, u, w

    if j == i + 1:
        ex = vix - vjx
        ey = viy - vjy
        ee = ex * ex + ey * ey
        lam = 0.0
        if ee > 0.0:
            lam = -(vjx * ex + vjy * ey) / ee
            if lam < 0.0:
                lam = 0.0
            elif lam > 1.0:
                lam = 1.0
        gx = vjx + lam * ex
        gy = vjy + lam * ey
        sig = INFINITY
        if lam > 0.0:
            sig = hi / lam
        if lam < 1.0 and hj / (1.0 - lam) < sig:
            sig = hj / (1.0 - lam)
        pout[0] = t1 - lam * sig
        qout[0] = t1 + (1.0 - lam) * sig
        return _hyp(gx, gy)

    if _crossing(p0x, p0y, p1x, p1y, q0x, q0y, q1x, q1y):
        rx = p1x - p0x
        ry = p1y - p0y
        sx = q1x - q0x
        sy = q1y - q0y
        den = rx * sy - ry * sx
        u = ((q0x - p0x) * sy - (q0y - p0y) * sx) / den
        w = ((q0x - p0x) * ry - (q0y - p0y) * rx) / den
        pout[0] = t0 + min(max(u, 0.0), 1.0) * hi
        qout[0] = s0 + min(max(w, 0.0), 1.0) * hj
        return 0.0

    best = _edge(q0x - p0x, q0y - p0y, s0 - t0, vjx, vjy, hj, &b)
    pout[0] = t0
    qout[0] = s0 + b
    val = _edge(q0x - p1x, q0y - p1y, s0 - t1, vjx, vjy, hj, &b)
    if val < best:
        best = val
        pout[0] = t1
        qout[0] = s0 + b
    val = _edge(p0x - q0x, p0y - q0y, t0 - s0, vix, viy, hi, &b)
    if val < best:
        best = val
        pout[0] = t0 + b
        qout[0] = s0
    val = _edge(p0x - q1x, p0y - q1y, t0 - s1, vix, viy, hi, &b)
    if val < best:
        best = val
        pout[0] = t0 + b
        qout[0] = s1
    return best


cdef inline double _gap(double a0, double a1, double b0, double b1) nogil:
    # distance between the intervals [min a, max a] and [min b, max b]
    cdef double alo = a0 if a0 < a1 else a1
    cdef double ahi = a1 if a0 < a1 else a0
    cdef double blo = b0 if b0 < b1 else b1
    cdef double bhi = b1 if b0 < b1 else b0
    if bhi < alo:
        return alo - bhi
    if ahi < blo:
        return blo - ahi
    return 0.0


def pair_min(t, P, A, B, bint symmetric):
    """Smallest ratio over segment pairs drawn from ``A`` x ``B``.

    Same contract as the numpy fallback.  Pairs whose bounding boxes are too
    far apart to beat the current best are skipped.
    """
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[:, ::1] Pv = np.ascontiguousarray(P, dtype=np.float64)
    cdef const long long[::1] Av = np.ascontiguousarray(A, dtype=np.int64)
    cdef const long long[::1] Bv = np.ascontiguousarray(B, dtype=np.int64)
    cdef Py_ssize_t na = Av.shape[0], nb = Bv.shape[0], x, y, i, j
    cdef double best = INFINITY, bp = NAN, bq = NAN, val, p, q, gx, gy, lb
    with nogil:
        for x in range(na):
            for y in range(nb):
                i = Av[x]
                j = Bv[y]
                if symmetric:
                    if i >= j:
                        continue
                elif i == j:
                    continue
                if i > j:
                    i, j = j, i
                if j > i + 1:
                    gx = _gap(Pv[i, 0], Pv[i + 1, 0], Pv[j, 0], Pv[j + 1, 0])
                    gy = _gap(Pv[i, 1], Pv[i + 1, 1], Pv[j, 1], Pv[j + 1, 1])
                    lb = _hyp(gx, gy) / (tv[j + 1] - tv[i])
                    if lb >= best:
                        continue
                val = _pair(tv, Pv, i, j, &p, &q)
                if val < best:
                    best = val
                    bp = p
                    bq = q
    return best, bp, bq
