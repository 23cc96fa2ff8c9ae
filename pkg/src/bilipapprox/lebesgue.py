"""Derivative-deviation averages, greedy bad sets and safe straightening windows.

Around a parameter ``x`` where the derivative exists, the average deviation

    M(p, q) = (1 / (q - p)) * integral_p^q |f'(z) - f'(x)| dz

measures how far the curve on ``[p, q]`` is from moving like it does at ``x``.
:func:`bad_set` greedily collects inflated intervals that cover every pair
with ``M >= eps / (2L)``.  Off that set, chords seen from ``x`` all point in
nearly the same direction.  What remains of ``(x - ell, x + ell)`` is the
window returned by :func:`lebesgue_window`, where chord replacement is safe.

:func:`straighten_lebesgue` applies this cell by cell on a uniform partition
with ``N`` cells.  A cell is admissible when the window around a point of its
central part covers the whole cell.  For PL inputs the non-admissible cells
cluster around corners, so the partition is stored sparsely: only cells near
a corner are examined, and ``N`` may grow far beyond what a dense array
would allow.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .curve import TOL, PLCurve, segment_replace
from .errors import (
    AmbiguousDerivativeError,
    CannotStraightenError,
    PathologicalInputError,
    WindowTooSmallError,
)

MAX_BAD_INTERVALS = 10_000
MAX_CELLS = 2**40
# Offsets of the trial points inside the central part, as fractions of its half-width.
TRIAL_OFFSETS = (0.0, -0.9, 0.9)


def merge_intervals(intervals) -> list[tuple[float, float]]:
    """Union of closed intervals as a sorted list of disjoint intervals."""
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


def subtract_intervals(lo: float, hi: float, holes) -> list[tuple[float, float]]:
    """``(lo, hi)`` minus the union of ``holes``, as open intervals."""
    pieces = []
    cur = lo
    for a, b in merge_intervals(holes):
        if b <= cur:
            continue
        if a >= hi:
            break
        if a > cur:
            pieces.append((cur, a))
        cur = max(cur, b)
    if cur < hi:
        pieces.append((cur, hi))
    return pieces


def total_length(intervals) -> float:
    return float(sum(b - a for a, b in intervals))


def _deviation_primitive(curve: PLCurve, v: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``integral_{t0}^{z} |f' - v|`` at each ``z``."""
    dev = np.hypot(*(curve.velocities - v).T)
    acc = np.r_[0.0, np.cumsum(curve.durations * dev)]
    k = curve.segment_of(z)
    return acc[k] + (np.asarray(z) - curve.t[k]) * dev[k]


def deviation(curve: PLCurve, x: float, p: float, q: float) -> float:
    """Average of ``|f'(z) - f'(x)|`` over ``[p, q]``; exact segment sum."""
    if not p < q:
        raise ValueError("deviation needs p < q")
    v = curve.velocity_at(x)
    F = _deviation_primitive(curve, v, np.array([p, q]))
    return float((F[1] - F[0]) / (q - p))


@dataclass(frozen=True)
class BadSet:
    """Greedy cover of the pairs with large deviation around ``x``.

    ``generators[j] = (p_j, q_j)`` is the pair chosen at step ``j`` and
    ``intervals[j] = (2 p_j - q_j, 2 q_j - p_j)`` its threefold inflation.
    ``uncovered[j]`` is the part of ``(p_j, q_j)`` not covered by earlier
    intervals at the time it was chosen.
    """

    x: float
    h: float
    threshold: float
    generators: tuple = ()
    intervals: tuple = ()
    uncovered: tuple = ()

    @property
    def total_measure(self) -> float:
        return total_length(merge_intervals(self.intervals))

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        inside = np.zeros(z.shape, dtype=bool)
        for a, b in self.intervals:
            inside |= (z >= a) & (z <= b)
        return inside


def _candidates(curve: PLCurve, lo: float, hi: float) -> np.ndarray:
    inner = curve.t[(curve.t > lo) & (curve.t < hi)]
    return np.unique(np.r_[lo, inner, hi])


def bad_set(curve: PLCurve, x: float, h: float, eps: float, L: float) -> BadSet:
    """Greedy bad set around ``x`` at threshold ``eps / (2L)``.

    Pairs range over breakpoints inside ``(x - h, x + h)`` plus the window ends,
    with the window clipped to the domain.  Each step takes the pair with
    ``M >= threshold`` whose part outside the current set is largest.  Ties go
    to the smallest ``p``, then the largest ``q``.  The set is closed, so a
    parameter on an interval end counts as inside.  The loop stops once every
    pair with ``M >= threshold`` has both ends inside.
    """
    t0, t1 = curve.domain
    lo, hi = max(t0, x - h), min(t1, x + h)
    tau = eps / (2.0 * L)
    v = curve.velocity_at(x)
    c = _candidates(curve, lo, hi)
    F = _deviation_primitive(curve, v, c)
    i, j = np.triu_indices(c.size, 1)
    M = (F[j] - F[i]) / (c[j] - c[i])
    heavy = M >= tau * (1.0 - 1e-12)
    i, j = i[heavy], j[heavy]
    gens, ints, unc = [], [], []
    covered_by: list[tuple[float, float]] = []
    while i.size:
        inside = np.zeros(c.size, dtype=bool)
        for a, b in ints:
            inside |= (c >= a) & (c <= b)
        if np.all(inside[i] & inside[j]):
            break
        if len(gens) >= MAX_BAD_INTERVALS:
            raise PathologicalInputError(f"bad set around {x} exceeded {MAX_BAD_INTERVALS} intervals")
        length = c[j] - c[i]
        cov = np.zeros(i.size)
        for a, b in covered_by:
            cov += np.clip(np.minimum(c[j], b) - np.maximum(c[i], a), 0.0, None)
        free = length - cov
        order = np.lexsort((-c[j], c[i], -free))
        k = order[0]
        p, q = float(c[i[k]]), float(c[j[k]])
        gens.append((p, q))
        ints.append((p - (q - p), q + (q - p)))
        unc.append(float(free[k]))
        covered_by = merge_intervals(ints)
    return BadSet(x, h, tau, tuple(gens), tuple(ints), tuple(unc))


@dataclass(frozen=True)
class Window:
    """``(x - ell, x + ell)`` minus the bad set, as disjoint open intervals."""

    x: float
    ell: float
    pieces: tuple
    bad: BadSet

    @property
    def measure(self) -> float:
        return total_length(self.pieces)


def lebesgue_window(curve: PLCurve, x: float, ell: float, eps: float, L: float, h: float | None = None) -> Window:
    """Window of safe chord endpoints around ``x``.

    ``h`` is the half-width of the region where the bad set is built; it
    defaults to ``ell / eps``.  Raises :class:`WindowTooSmallError` when less
    than ``(2 - eps) * ell`` of the window survives.
    """
    if h is None:
        h = ell / eps
    bad = bad_set(curve, x, h, eps, L)
    t0, t1 = curve.domain
    pieces = tuple(subtract_intervals(max(t0, x - ell), min(t1, x + ell), bad.intervals))
    win = Window(x, ell, pieces, bad)
    if win.measure < (2.0 - eps) * ell * (1.0 - 1e-12):
        raise WindowTooSmallError(f"window at {x} keeps {win.measure} < {(2 - eps) * ell}")
    return win


# Cell sets are sorted lists of inclusive index ranges ``(m0, m1)``: near each
# corner the non-admissible cells form long runs, so ranges stay small when
# the runs hold millions of cells.


def ranges_union(ranges) -> list[tuple[int, int]]:
    out: list[list[int]] = []
    for a, b in sorted(ranges):
        if a > b:
            continue
        if out and a <= out[-1][1] + 1:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def ranges_intersect(A, B) -> list[tuple[int, int]]:
    out, i, j = [], 0, 0
    while i < len(A) and j < len(B):
        lo, hi = max(A[i][0], B[j][0]), min(A[i][1], B[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if A[i][1] < B[j][1]:
            i += 1
        else:
            j += 1
    return out


def ranges_subtract(A, B) -> list[tuple[int, int]]:
    out = []
    for a, b in A:
        cur = a
        for c, d in B:
            if d < cur or c > b:
                continue
            if c > cur:
                out.append((cur, c - 1))
            cur = max(cur, d + 1)
        if cur <= b:
            out.append((cur, b))
    return out


def ranges_count(ranges) -> int:
    return sum(b - a + 1 for a, b in ranges)


def ranges_cells(ranges) -> np.ndarray:
    if not ranges:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([np.arange(a, b + 1, dtype=np.int64) for a, b in ranges])


def _cells_from_array(cells) -> list[tuple[int, int]]:
    cells = np.asarray(cells, dtype=np.int64)
    if cells.size == 0:
        return []
    breaks = np.nonzero(np.diff(cells) > 1)[0]
    starts = np.r_[cells[0], cells[breaks + 1]]
    ends = np.r_[cells[breaks], cells[-1]]
    return list(zip(starts.tolist(), ends.tolist()))


@dataclass
class PartitionReport:
    """Cells of the uniform partition and what straightening did with them.

    Cell ``m`` is ``[t0 + m w, t0 + (m + 1) w]`` with ``w = D / N``.  Only the
    non-admissible cells (as index ranges) and the admissible cells with
    non-default anchors are stored.  Default anchors are the cell center
    ``x_m`` with ``x_m^- = m w + eps_tilde w`` and ``x_m^+ = (m + 1) w -
    eps_tilde w``, measured from ``t0``.
    """

    t0: float
    domain_length: float
    N: int
    eps_tilde: float
    bad_ranges: list
    special_anchors: dict = field(default_factory=dict)
    bad_intervals: list = field(default_factory=list)
    good_set: list = field(default_factory=list)
    replaced: list = field(default_factory=list)
    history: list = field(default_factory=list)

    @property
    def bad_cells(self) -> np.ndarray:
        """Indices of the non-admissible cells (materialized; can be large)."""
        return ranges_cells(self.bad_ranges)

    @property
    def n_bad_cells(self) -> int:
        return ranges_count(self.bad_ranges)

    @property
    def cell_width(self) -> float:
        return self.domain_length / self.N

    def cell(self, m: int) -> tuple[float, float]:
        w = self.cell_width
        return self.t0 + m * w, self.t0 + (m + 1) * w

    def central_part(self, m: int) -> tuple[float, float]:
        a, b = self.cell(m)
        c, r = 0.5 * (a + b), 0.5 * self.eps_tilde * (b - a)
        return c - r, c + r

    def is_admissible(self, m: int) -> bool:
        k = bisect.bisect_right(self.bad_ranges, (m, math.inf)) - 1
        return not (k >= 0 and self.bad_ranges[k][0] <= m <= self.bad_ranges[k][1])

    def anchors(self, m: int) -> tuple[float, float, float]:
        """``(x_m, x_m^-, x_m^+)`` of an admissible cell."""
        if not self.is_admissible(m):
            raise KeyError(f"cell {m} is not admissible")
        if m in self.special_anchors:
            return self.special_anchors[m]
        a, b = self.cell(m)
        e = self.eps_tilde * self.cell_width
        return 0.5 * (a + b), a + e, b - e

    @property
    def nonadmissible_measure(self) -> float:
        return self.n_bad_cells * self.cell_width

    @property
    def good_measure(self) -> float:
        return self.domain_length - total_length(self.bad_intervals)


def _cell_range(lo, hi, base, w, N, grow):
    """Cells ``m`` with ``base + m w`` in ``(lo, hi)``, widened by ``grow`` cells
    on each side (negative ``grow`` shrinks)."""
    m0 = math.floor((lo - base) / w) + 1 - grow
    m1 = math.ceil((hi - base) / w) - 1 + grow
    m0, m1 = max(m0, 0), min(m1, N - 1)
    return (m0, m1) if m0 <= m1 else None


def _heavy_intervals(curve: PLCurve, h: float, tau: float, span):
    """Parameters ``x`` in ``span`` where the average deviation over
    ``(x - h, x + h)`` (clipped to the domain) from the velocity at ``x`` is at
    least ``tau``.

    On each segment the test is ``G(x) >= tau (hi - lo)`` with both sides
    piecewise linear in ``x``, so it is solved exactly between the kinks
    ``t_j +- h``.
    """
    t0, t1 = curve.domain
    t = curve.t
    out = []
    k0 = int(curve.segment_of(max(t0, span[0])))
    k1 = int(curve.segment_of(min(t1, span[1])))
    kinks = np.r_[t - h, t + h, t0 + h, t1 - h]
    for k in range(k0, k1 + 1):
        a, b = max(t[k], span[0]), min(t[k + 1], span[1])
        if not a < b:
            continue
        xs = np.unique(np.r_[a, kinks[(kinks > a) & (kinks < b)], b])
        lo, hi = np.maximum(t0, xs - h), np.minimum(t1, xs + h)
        F = _deviation_primitive(curve, curve.velocities[k], np.r_[lo, hi])
        H = F[xs.size :] - F[: xs.size] - tau * (hi - lo)
        pos = H >= 0
        for i in range(xs.size - 1):
            ha, hb = H[i], H[i + 1]
            if pos[i] and pos[i + 1]:
                out.append((xs[i], xs[i + 1]))
            elif pos[i] != pos[i + 1]:
                z = xs[i] + (xs[i + 1] - xs[i]) * ha / (ha - hb)
                out.append((xs[i], z) if pos[i] else (z, xs[i + 1]))
    return merge_intervals(out)


def _window_deviation(curve: PLCurve, x, lo, hi, kx):
    """Average deviation from the velocity of segment ``kx`` over ``[lo, hi]``, vectorized."""
    V = curve.velocities
    k_lo = curve.segment_of(lo)
    k_hi = curve.segment_of(np.maximum(lo, np.nextafter(hi, -np.inf)))
    total = np.zeros(x.shape)
    for o in range(int(np.max(k_hi - k_lo)) + 1 if x.size else 0):
        k = k_lo + o
        ok = k <= k_hi
        k = np.minimum(k, curve.n_segments - 1)
        ov = np.clip(np.minimum(hi, curve.t[k + 1]) - np.maximum(lo, curve.t[k]), 0.0, None)
        dev = np.hypot(*(V[k] - V[kx]).T)
        total += np.where(ok, ov * dev, 0.0)
    return total / (hi - lo)


def _check_cells(curve, m, off, t0, t1, w, et, L, corners, special):
    """Decide the cells ``m`` one by one at trial offset ``off``; returns a mask of admissible cells."""
    tau = et / (2.0 * L)
    center = t0 + (m + 0.5) * w
    x = center + off * 0.5 * et * w
    ell = 0.5 * w - np.abs(x - center)
    h = ell / et
    lo, hi = np.maximum(t0, x - h), np.minimum(t1, x + h)
    kx = curve.segment_of(x)
    at_corner = np.isin(x, corners)
    nc = np.searchsorted(corners, hi, "left") - np.searchsorted(corners, lo, "right")
    full = (nc == 0) & ~at_corner
    heavy = np.zeros(m.size, dtype=bool)
    rest = ~full & ~at_corner
    if np.any(rest):
        r = np.nonzero(rest)[0]
        heavy[r] = _window_deviation(curve, x[r], lo[r], hi[r], kx[r]) >= tau
    ok = full.copy()
    for r in np.nonzero(rest & ~heavy)[0]:
        try:
            win = lebesgue_window(curve, float(x[r]), float(ell[r]), et, L, h=float(h[r]))
        except (WindowTooSmallError, AmbiguousDerivativeError):
            continue
        a = t0 + m[r] * w
        b = a + w
        lo_piece = [(p, q) for p, q in win.pieces if p < a + 2 * et * w and q > a]
        hi_piece = [(p, q) for p, q in win.pieces if q > b - 2 * et * w and p < b]
        if not lo_piece or not hi_piece:
            continue
        p, q = lo_piece[0]
        s = 0.5 * (max(p, a) + min(q, a + 2 * et * w))
        p, q = hi_piece[-1]
        t = 0.5 * (max(p, b - 2 * et * w) + min(q, b))
        ok[r] = True
        special[int(m[r])] = (float(x[r]), s, t)
    if off != 0.0:
        for r in np.nonzero(full)[0]:
            a = t0 + m[r] * w
            e = et * w
            # the window is (x - ell, x + ell): keep x^- and x^+ inside it
            s = max(a + e, float(x[r] - ell[r]) + 0.5 * e)
            t = min(a + w - e, float(x[r] + ell[r]) - 0.5 * e)
            special[int(m[r])] = (float(x[r]), s, t)
    return ok


def _classify(curve: PLCurve, N: int, et: float, L: float):
    """Find the non-admissible cells (as ranges) and the non-default anchors for a given ``N``.

    Only cells whose windows can reach a corner are examined.  For each trial
    offset the cells whose window deviation is clearly at least the threshold
    are found as whole ranges by :func:`_heavy_intervals` and stay undecided.
    Cells whose window clearly misses every corner are admissible.  The
    remaining cells, near range boundaries, are checked one by one.
    """
    t0, t1 = curve.domain
    D = t1 - t0
    w = D / N
    corners = curve.corner_params
    tau = et / (2.0 * L)
    h_max = 0.5 * w / et
    if h_max >= 1.0 / (4.0 * L):
        # windows too wide for the sup-distance estimate of the chord replacement
        return [(0, N - 1)], {}
    base0 = t0 + 0.5 * w
    undecided = ranges_union(
        r for c in corners if (r := _cell_range(c - h_max, c + h_max, base0, w, N, 2)) is not None
    )
    special: dict = {}
    for off in TRIAL_OFFSETS:
        if not undecided:
            break
        shift = off * 0.5 * et * w
        base = base0 + shift
        h = (0.5 * w - abs(shift)) / et
        reach = ranges_union(
            r for c in corners if (r := _cell_range(c - h, c + h, base, w, N, 1)) is not None
        )
        span = (base + undecided[0][0] * w - h, base + undecided[-1][1] * w + h)
        heavy = ranges_union(
            r for p, q in _heavy_intervals(curve, h, tau, span)
            if (r := _cell_range(p, q, base, w, N, -1)) is not None
        )
        clear = ranges_subtract(undecided, reach)
        if off != 0.0 and clear:
            m = ranges_cells(clear)
            _check_cells(curve, m, off, t0, t1, w, et, L, corners, special)
        still = ranges_intersect(ranges_subtract(undecided, clear), heavy)
        edge = ranges_subtract(ranges_subtract(undecided, clear), heavy)
        if edge:
            m = ranges_cells(edge)
            ok = _check_cells(curve, m, off, t0, t1, w, et, L, corners, special)
            still = ranges_union(still + _cells_from_array(m[~ok]))
        undecided = still
    return undecided, special


def straighten_lebesgue(curve: PLCurve, eps: float, L: float, budget, protect=(), max_cells: int = MAX_CELLS):
    """Make ``curve`` piecewise linear off a set of measure at most ``eps`` times
    the domain length.

    Starting from ``N = ceil(1 / eps**2)`` cells, ``N`` doubles until the bad
    intervals (non-admissible clusters and any corner-bearing gaps) fill at
    most ``eps * D`` and avoid every interval in ``protect``.  Each admissible
    cell's sub-arc over ``(x_m^-, x_m^+)`` is then replaced by its chord.
    Returns ``(phi1, report)``.
    """
    et = budget.eps_tilde
    t0, t1 = curve.domain
    D = t1 - t0
    N = max(1, math.ceil(1.0 / eps**2))
    history = []
    while True:
        bad_ranges, special = _classify(curve, N, et, L)
        report = PartitionReport(t0, D, N, et, bad_ranges, special)
        _assemble(curve, report)
        bad_len = total_length(report.bad_intervals)
        history.append((N, bad_len))
        clash = any(lo < b and a < hi for a, b in protect for lo, hi in report.bad_intervals)
        if bad_len <= eps * D and not clash:
            break
        N *= 2
        if N > max_cells:
            raise CannotStraightenError(
                f"bad measure {bad_len} still above {eps * D} (protected clash: {clash}) at N={N // 2}"
            )
    report.history = history
    phi1 = curve
    for s, t in report.replaced:
        phi1 = segment_replace(phi1, s, t)
    return phi1, report


def _assemble(curve: PLCurve, report: PartitionReport) -> None:
    """Fill in bad intervals, good set and the list of chord replacements."""
    t0, D, N = report.t0, report.domain_length, report.N
    t1 = t0 + D
    w = report.cell_width
    corners = curve.corner_params
    bad = []
    for m0, m1 in report.bad_ranges:
        lo = t0 if m0 == 0 else report.anchors(m0 - 1)[2]
        hi = t1 if m1 == N - 1 else report.anchors(m1 + 1)[1]
        bad.append((lo, hi))
    replaced = []
    for c in corners:
        if any(lo < c < hi for lo, hi in bad):
            continue
        m = min(N - 1, int((c - t0) // w))
        _, s, t = report.anchors(m)
        if s < c < t:
            if not replaced or replaced[-1] != (s, t):
                replaced.append((s, t))
            continue
        if c <= s:
            lo = t0 if m == 0 else report.anchors(m - 1)[2]
            hi = s
        else:
            lo = t
            hi = t1 if m == N - 1 else report.anchors(m + 1)[1]
        if lo < c < hi:
            bad.append((lo, hi))
    report.bad_intervals = merge_intervals(bad)
    report.good_set = [(a, b) for a, b in subtract_intervals(t0, t1, report.bad_intervals) if b - a > TOL]
    report.replaced = replaced
