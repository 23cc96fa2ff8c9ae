"""Pure numpy implementation of the segment-pair ratio minimum.

For parameters ``p`` on segment ``i`` and ``q`` on segment ``j > i`` the ratio
``|f(q) - f(p)| / (q - p)`` is the norm of a linear map of ``(p, q)`` divided
by a linear form, so its level sets in the parameter rectangle are convex.
A strictly positive minimum is therefore reached on the rectangle's boundary.
The only other possibility is zero, when the two segments meet.  On each edge
the problem is one-dimensional, with a single closed-form critical point.

Adjacent segments are special: the ratio only depends on the direction in
which ``(p, q)`` leaves the shared corner, and its infimum is the distance
from the origin to the segment joining the two velocities.  This infimum is
attained exactly on a ray, which gives the witness.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

CHUNK = 1 << 17
# relative error bound of the two-product orientation determinant, with margin
ORIENT_BOUND = 1e-15


def _edge_min(wx, wy, d, vx, vy, h):
    """Minimize ``|w + v b| / |d + b|`` over ``b`` in ``[0, h]``; return (value, b)."""
    best = np.hypot(wx, wy) / np.abs(d)
    bb = np.zeros_like(best)
    end = np.hypot(wx + vx * h, wy + vy * h) / np.abs(d + h)
    take = end < best
    best = np.where(take, end, best)
    bb = np.where(take, h, bb)
    ww = wx * wx + wy * wy
    wv = wx * vx + wy * vy
    vv = vx * vx + vy * vy
    den = vv * d - wv
    with np.errstate(divide="ignore", invalid="ignore"):
        bs = (ww - d * wv) / den
        ok = (den != 0) & (bs > 0) & (bs < h)
        bs = np.where(ok, bs, 0.0)
        mid = np.hypot(wx + vx * bs, wy + vy * bs) / np.abs(d + bs)
    take = ok & (mid < best)
    best = np.where(take, mid, best)
    bb = np.where(take, bs, bb)
    return best, bb


def orient(A, B, C):
    """Sign of ``(A - C) x (B - C)`` per row, or 2 where rounding could flip it."""
    left = (A[:, 0] - C[:, 0]) * (B[:, 1] - C[:, 1])
    right = (A[:, 1] - C[:, 1]) * (B[:, 0] - C[:, 0])
    det = left - right
    sure = np.abs(det) > ORIENT_BOUND * (np.abs(left) + np.abs(right))
    return np.where(sure, np.sign(det), 2).astype(np.int64)


def _exact_orient(ax, ay, bx, by, cx, cy) -> int:
    ax, ay, bx, by, cx, cy = (Fraction(v) for v in (ax, ay, bx, by, cx, cy))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def exact_crossing(p0x, p0y, p1x, p1y, q0x, q0y, q1x, q1y) -> bool:
    """Exact test that two segments cross at a point interior to both."""
    o1 = _exact_orient(p0x, p0y, p1x, p1y, q0x, q0y)
    o2 = _exact_orient(p0x, p0y, p1x, p1y, q1x, q1y)
    o3 = _exact_orient(q0x, q0y, q1x, q1y, p0x, p0y)
    o4 = _exact_orient(q0x, q0y, q1x, q1y, p1x, p1y)
    return o1 * o2 < 0 and o3 * o4 < 0


def crossing(P0, P1, Q0, Q1) -> np.ndarray:
    """Rows where segment ``P0 P1`` crosses ``Q0 Q1`` at a point interior to both.

    Touching at an end point is left to the edge minimization, which finds
    the zero there.  Orientation signs come from a floating-point filter;
    rows the filter cannot decide are settled in exact rational arithmetic.
    """
    o1, o2 = orient(P0, P1, Q0), orient(P0, P1, Q1)
    o3, o4 = orient(Q0, Q1, P0), orient(Q0, Q1, P1)
    unsure = (o1 == 2) | (o2 == 2) | (o3 == 2) | (o4 == 2)
    out = (o1 * o2 < 0) & (o3 * o4 < 0) & ~unsure
    maybe = unsure & ~(((o1 != 2) & (o2 != 2) & (o1 * o2 >= 0)) | ((o3 != 2) & (o4 != 2) & (o3 * o4 >= 0)))
    for k in np.nonzero(maybe)[0]:
        out[k] = exact_crossing(*P0[k], *P1[k], *Q0[k], *Q1[k])
    return out


def _pair_values(t, P, i, j):
    """Exact infimum of the ratio over segment pairs ``(i, j)`` with ``i < j``."""
    t0, t1, s0, s1 = t[i], t[i + 1], t[j], t[j + 1]
    hi, hj = t1 - t0, s1 - s0
    P0, P1, Q0, Q1 = P[i], P[i + 1], P[j], P[j + 1]
    vi = (P1 - P0) / hi[:, None]
    vj = (Q1 - Q0) / hj[:, None]

    val = np.full(i.shape, np.inf)
    pp = np.zeros(i.shape)
    qq = np.zeros(i.shape)

    def improve(v, p, q, mask=None):
        nonlocal val, pp, qq
        take = v < val if mask is None else mask & (v < val)
        val = np.where(take, v, val)
        pp = np.where(take, p, pp)
        qq = np.where(take, q, qq)

    # Edges of the parameter rectangle: a vertex of one segment against the other.
    for vert, tau in ((P0, t0), (P1, t1)):
        w = Q0 - vert
        v, b = _edge_min(w[:, 0], w[:, 1], s0 - tau, vj[:, 0], vj[:, 1], hj)
        improve(v, tau, s0 + b)
    for vert, tau in ((Q0, s0), (Q1, s1)):
        w = P0 - vert
        v, b = _edge_min(w[:, 0], w[:, 1], t0 - tau, vi[:, 0], vi[:, 1], hi)
        improve(v, t0 + b, tau)

    # Crossing segments give ratio zero.
    cross = crossing(P0, P1, Q0, Q1)
    if np.any(cross):
        r = P1 - P0
        s = Q1 - Q0
        qp = Q0 - P0
        den = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.clip((qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / den, 0.0, 1.0)
            w = np.clip((qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / den, 0.0, 1.0)
        improve(np.zeros(i.shape), t0 + u * hi, s0 + w * hj, cross)

    # Adjacent segments: distance from the origin to [v_j, v_i].
    adj = j == i + 1
    if np.any(adj):
        e = vi - vj
        ee = np.einsum("ij,ij->i", e, e)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.clip(-np.einsum("ij,ij->i", vj, e) / ee, 0.0, 1.0)
        lam = np.where(ee > 0, lam, 0.0)
        g = vj + lam[:, None] * e
        v = np.hypot(g[:, 0], g[:, 1])
        with np.errstate(divide="ignore"):
            sig = np.minimum(
                np.where(lam > 0, hi / lam, np.inf), np.where(lam < 1, hj / (1 - lam), np.inf)
            )
        val = np.where(adj, v, val)
        pp = np.where(adj, t1 - lam * sig, pp)
        qq = np.where(adj, t1 + (1 - lam) * sig, qq)
    return val, pp, qq


def pair_min(t, P, A, B, symmetric):
    """Smallest ratio over segment pairs drawn from ``A`` x ``B``.

    With ``symmetric`` only pairs ``a < b`` are used; otherwise all pairs with
    ``a != b``.  Returns ``(value, p, q)`` with ``p < q``, or ``(inf, nan, nan)``
    when there is no pair.
    """
    t = np.ascontiguousarray(t, dtype=float)
    P = np.ascontiguousarray(P, dtype=float)
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    best = (np.inf, np.nan, np.nan)
    if A.size == 0 or B.size == 0:
        return best
    rows = max(1, CHUNK // B.size)
    for start in range(0, A.size, rows):
        a = np.repeat(A[start : start + rows], B.size)
        b = np.tile(B, min(rows, A.size - start))
        keep = a < b if symmetric else a != b
        a, b = a[keep], b[keep]
        if a.size == 0:
            continue
        i, j = np.minimum(a, b), np.maximum(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            val, p, q = _pair_values(t, P, i, j)
        k = int(np.argmin(val))
        if val[k] < best[0]:
            best = (float(val[k]), float(p[k]), float(q[k]))
    return best
