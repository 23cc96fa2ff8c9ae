"""Closed PL curves on the unit circle and their approximation.

A closed curve is parametrized by angle: vertex ``k`` sits at angle
``alpha_k`` in ``[0, 2 pi)`` and the curve is linear in the angle between
consecutive vertices, wrapping from the last one back to the first.
Distances between parameters are chordal, ``|e^{ix} - e^{iy}| =
2 |sin((x - y) / 2)|``.

:func:`approximate_closed` cuts the circle into short arcs between anchor
points, lifts each arc to an interval where chord and parameter distance
differ by a factor of at most ``1 - eps'``, runs the pinned open-curve
pipeline on each arc and glues the results back together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .curve import TOL, VELOCITY_TOL, PLCurve, segment_replace
from .errors import ChartTooLongError, DomainError, PreconditionError, StageError, BilipError, WindowTooSmallError
from .lebesgue import lebesgue_window
from .pipeline import approximate_pinned
from .verify import BiLipReport, DEFAULT_SLACK

TWO_PI = 2.0 * math.pi
DEFAULT_SAMPLES = 2048
REFINE_PAIRS = 6
REFINE_ROUNDS = 3
MIN_CHORD = 1e-7


def chord(x, y):
    """Distance between ``e^{ix}`` and ``e^{iy}``."""
    return 2.0 * np.abs(np.sin(0.5 * (np.asarray(x) - np.asarray(y))))


@dataclass(frozen=True, eq=False)
class ClosedPLCurve:
    """Closed PL curve with vertex ``pts[k]`` at angle ``angles[k]``."""

    angles: np.ndarray
    pts: np.ndarray

    def __post_init__(self):
        a = np.array(self.angles, dtype=float)
        p = np.array(self.pts, dtype=float)
        if a.ndim != 1 or p.shape != (a.size, 2):
            raise DomainError("angles and points must have matching lengths")
        if a.size < 3:
            raise DomainError("a closed curve needs at least 3 vertices")
        if a[0] < 0 or a[-1] >= TWO_PI or np.any(np.diff(a) <= 0):
            raise DomainError("angles must increase strictly within [0, 2 pi)")
        if not np.all(np.isfinite(p)):
            raise DomainError("points must be finite")
        a.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "pts", p)

    @classmethod
    def from_vertices(cls, pts, angles=None) -> "ClosedPLCurve":
        pts = np.asarray(pts, dtype=float)
        if angles is None:
            angles = TWO_PI * np.arange(len(pts)) / len(pts)
        return cls(angles, pts)

    @property
    def n_vertices(self) -> int:
        return self.angles.size

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(np.r_[self.angles, self.angles[0] + TWO_PI])

    @property
    def chords(self) -> np.ndarray:
        return np.roll(self.pts, -1, axis=0) - self.pts

    @property
    def velocities(self) -> np.ndarray:
        return self.chords / self.gaps[:, None]

    @property
    def speeds(self) -> np.ndarray:
        return np.hypot(*self.chords.T) / self.gaps

    @property
    def corner_mask(self) -> np.ndarray:
        """``True`` at vertices where the velocity jumps."""
        v = self.velocities
        jump = np.hypot(*(v - np.roll(v, 1, axis=0)).T)
        scale = np.maximum(np.maximum(self.speeds, np.roll(self.speeds, 1)), 1.0)
        return jump > VELOCITY_TOL * scale

    def eval(self, theta) -> np.ndarray:
        a0 = self.angles[0]
        u = np.mod(np.asarray(theta, dtype=float) - a0, TWO_PI) + a0
        ext = np.r_[self.angles, a0 + TWO_PI]
        P = np.vstack([self.pts, self.pts[:1]])
        k = np.clip(np.searchsorted(ext, u, "right") - 1, 0, self.n_vertices - 1)
        f = (u - ext[k]) / (ext[k + 1] - ext[k])
        return (1.0 - f)[..., None] * P[k] + f[..., None] * P[k + 1]

    __call__ = eval

    def as_open(self, start: float | None = None) -> PLCurve:
        """The curve on ``[start, start + 2 pi]``; closes up at the end."""
        start = self.angles[0] if start is None else start
        return _lift(self, start, start + TWO_PI)


def _lift(curve: ClosedPLCurve, a: float, b: float) -> PLCurve:
    m0 = math.floor((a - curve.angles[-1]) / TWO_PI)
    m1 = math.ceil((b - curve.angles[0]) / TWO_PI)
    reps = np.arange(m0, m1 + 1)
    lifted = (curve.angles[None, :] + TWO_PI * reps[:, None]).ravel()
    idx = np.tile(np.arange(curve.n_vertices), reps.size)
    inside = (lifted > a + TOL) & (lifted < b - TOL)
    t = np.r_[a, lifted[inside], b]
    pts = np.vstack([curve.eval(a), curve.pts[idx[inside]], curve.eval(b)])
    return PLCurve(t, pts)


def lift(curve: ClosedPLCurve, a: float, b: float) -> PLCurve:
    """The open curve ``t -> curve(t mod 2 pi)`` on ``[a, b]``, ``b - a < 2 pi``."""
    if not b - a < TWO_PI:
        raise ChartTooLongError(f"chart [{a}, {b}] is not shorter than 2 pi")
    if not a < b:
        raise DomainError("lift needs a < b")
    return _lift(curve, a, b)


def theta_ratio(theta: float) -> float:
    """``2 sin(theta / 2) / theta``, with value 1 at 0."""
    return 1.0 if theta == 0 else 2.0 * math.sin(0.5 * theta) / theta


def theta_residual(theta: float, eps_prime: float) -> float:
    """How far ``theta`` is from ``1 - eps' <= 2 sin(theta/2)/theta <= 1``; 0 when it holds."""
    r = theta_ratio(theta)
    return max(0.0, (1.0 - eps_prime) - r, r - 1.0)


def choose_theta(eps_prime: float) -> float:
    """Largest ``theta <= pi/2`` with ``2 sin(theta/2)/theta >= 1 - eps'``."""
    if not 0 < eps_prime < 1:
        raise DomainError("eps_prime must lie in (0, 1)")
    target = 1.0 - eps_prime
    if theta_ratio(0.5 * math.pi) >= target:
        return 0.5 * math.pi
    lo, hi = 0.0, 0.5 * math.pi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if theta_ratio(mid) >= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15:
            break
    return lo


def constant_chain(L: float, eps_prime: float) -> list[float]:
    """``[L_1, ..., L_7]``: chart distortion and the straightening and pinned
    losses, applied in turn."""
    s = 1.0 / (1.0 - eps_prime)
    L1 = L * s
    L2 = L1 + eps_prime
    L3 = L2 * s
    L4 = L3 + eps_prime
    L5 = L4 * s
    L6 = L5 + eps_prime
    L7 = L6 * s
    return [L1, L2, L3, L4, L5, L6, L7]


def choose_eps_prime(L: float, eps: float) -> float:
    """Largest power of two ``eps' < 1`` with ``L_7 <= L + eps / 2``."""
    for k in range(1, 1100):
        e = 2.0**-k
        if constant_chain(L, e)[-1] <= L + 0.5 * eps:
            return e
    raise PreconditionError(f"no eps' for L={L}, eps={eps}")


@dataclass(frozen=True)
class ChartSpec:
    """One arc ``[a, b]`` between consecutive anchors, in lifted angles.

    ``s``/``t`` bound the straightened pieces around the anchors at ``a`` and
    ``b``; the pinned run keeps ``[a, a_prime]`` and ``[b_prime, b]`` fixed.
    """

    a: float
    b: float
    theta: float
    eps_prime: float
    p: float
    s: float
    t: float
    a_prime: float
    b_prime: float
    delta: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if not 0 < self.b - self.a < TWO_PI:
            raise ChartTooLongError(f"chart [{self.a}, {self.b}] has bad length")
        if theta_residual(self.theta, self.eps_prime) > 1e-12:
            raise DomainError("theta does not satisfy the chord/arc bound")

    @property
    def length(self) -> float:
        return self.b - self.a


def chart_distortion(chart: ChartSpec, n: int = 33) -> tuple[float, float]:
    """Smallest and largest ``chord / |y - x|`` over pairs of ``n`` sample points."""
    x = np.linspace(chart.a, chart.b, n)
    i, j = np.triu_indices(n, 1)
    r = chord(x[i], x[j]) / (x[j] - x[i])
    return float(r.min()), float(r.max())


def chart_distortion_holds(chart: ChartSpec, n: int = 33) -> bool:
    lo, hi = chart_distortion(chart, n)
    return lo >= (1.0 - chart.eps_prime) * (1.0 - 1e-12) and hi <= 1.0 + 1e-12


# ----------------------------------------------------------------- measurement


def _pair_ratio(curve: ClosedPLCurve, x: float, y: float) -> float:
    c = float(chord(x, y))
    if c < MIN_CHORD:
        # too close for a stable quotient; the local limit is the segment speed
        return math.nan
    d = curve.eval(np.array([x, y]))
    return float(np.hypot(*(d[0] - d[1]))) / c


def _refine(curve, x, y, h, sign):
    """Local search (alternating bounded scalar minimizations) for a pair
    maximizing ``sign * ratio``."""
    best = np.nan_to_num(sign * _pair_ratio(curve, x, y), nan=-np.inf)
    for _ in range(REFINE_ROUNDS):
        for which in (0, 1):
            cx, cy = x, y
            if which == 0:
                fn = lambda z: -sign * _pair_ratio(curve, z, cy)  # noqa: E731
                lo, hi = cx - h, cx + h
            else:
                fn = lambda z: -sign * _pair_ratio(curve, cx, z)  # noqa: E731
                lo, hi = cy - h, cy + h
            res = minimize_scalar(lambda z: np.nan_to_num(fn(z), nan=np.inf), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            val = -res.fun
            if np.isfinite(val) and val > best:
                best = val
                if which == 0:
                    x = float(res.x)
                else:
                    y = float(res.x)
    return sign * best, (x, y)


def measure_closed(curve: ClosedPLCurve, samples: int = DEFAULT_SAMPLES) -> BiLipReport:
    """Chordal Lipschitz and inverse-Lipschitz constants, by sampling.

    Samples are the vertices, ``samples`` uniform angles and the segment
    midpoints.  The local limits (segment speeds) are included exactly.  The
    best few sampled pairs are then refined by bounded scalar searches.  The
    result brackets the true values from inside, so a pass is a measurement,
    not a proof.
    """
    u = np.unique(np.r_[curve.angles, TWO_PI * np.arange(samples) / samples,
                        curve.angles + 0.5 * curve.gaps])
    u = np.unique(np.mod(u, TWO_PI))
    u = u[np.r_[True, np.diff(u) > 1e-9]]
    P = curve.eval(u)
    n = u.size
    top_max: list = []
    top_min: list = []
    for i in range(n - 1):
        d = np.hypot(*(P[i + 1 :] - P[i]).T)
        r = d / chord(u[i + 1 :], u[i])
        k = int(np.argmax(r))
        top_max.append((float(r[k]), i, i + 1 + k))
        k = int(np.argmin(r))
        top_min.append((float(r[k]), i, i + 1 + k))
    top_max.sort(key=lambda z: -z[0])
    top_min.sort(key=lambda z: z[0])
    h = TWO_PI / samples
    sp = curve.speeds
    kmax, kmin = int(np.argmax(sp)), int(np.argmin(sp))
    seg_wit = lambda k: (float(curve.angles[k]), float(curve.angles[k] + curve.gaps[k]))  # noqa: E731
    up, wmax = float(sp[kmax]), seg_wit(kmax)
    low, wmin = float(sp[kmin]), seg_wit(kmin)
    for val, i, j in top_max[:1]:
        if val > up:
            up, wmax = val, (float(u[i]), float(u[j]))
    for val, i, j in top_min[:1]:
        if val < low:
            low, wmin = val, (float(u[i]), float(u[j]))
    for val, i, j in top_max[:REFINE_PAIRS]:
        v, w = _refine(curve, u[i], u[j], h, +1)
        if v > up:
            up, wmax = v, w
    for val, i, j in top_min[:REFINE_PAIRS]:
        v, w = _refine(curve, u[i], u[j], h, -1)
        if v < low:
            low, wmin = v, w
    return BiLipReport(float(up), float(low), tuple(map(float, wmax)), tuple(map(float, wmin)), h)


def check_closed_bilip(curve: ClosedPLCurve, L: float, samples: int = DEFAULT_SAMPLES,
                       slack: float = DEFAULT_SLACK):
    """``(passes, report)`` for the chordal ``L``-biLipschitz claim."""
    rep = measure_closed(curve, samples)
    return rep.passes(L, slack), rep


def closed_sup_distance(a: ClosedPLCurve, b: ClosedPLCurve, samples: int = DEFAULT_SAMPLES) -> tuple[float, float]:
    """Largest ``|a(x) - b(x)|``; both are linear between the union of their
    vertex angles, so that union (plus a uniform grid) is exact."""
    u = np.unique(np.r_[a.angles, b.angles, TWO_PI * np.arange(samples) / samples])
    d = np.hypot(*(a.eval(u) - b.eval(u)).T)
    k = int(np.argmax(d))
    return float(d[k]), float(u[k])


def simplify_closed(curve: ClosedPLCurve) -> ClosedPLCurve:
    """Drop vertices across which the velocity does not change."""
    keep = curve.corner_mask
    if keep.all() or keep.sum() < 3:
        return curve
    return ClosedPLCurve(curve.angles[keep], curve.pts[keep])


def merge_collinear(curve: ClosedPLCurve, angle_tol: float = 1e-9) -> ClosedPLCurve:
    """Drop vertices where the direction does not turn, even if the speed
    changes; the merged segments are reparametrized linearly."""
    c = curve.chords
    prev = np.roll(c, 1, axis=0)
    turn = np.abs(np.arctan2(prev[:, 0] * c[:, 1] - prev[:, 1] * c[:, 0], np.sum(prev * c, axis=1)))
    keep = turn > angle_tol
    if keep.all() or keep.sum() < 3:
        return curve
    return ClosedPLCurve(curve.angles[keep], curve.pts[keep])


# ----------------------------------------------------------------- approximation


def place_anchors(curve: ClosedPLCurve, theta: float) -> np.ndarray:
    """Anchor angles, increasing, each strictly inside a segment, with every
    cyclic gap below ``theta``.

    Starts from ``M = floor(2 pi / theta) + 1`` uniform angles.  Each is moved
    to the nearest segment midpoint when one lies within a quarter of the grid
    spacing; otherwise it stays on the grid, nudged off a vertex if needed.
    ``M`` grows until every gap is below ``theta``.
    """
    mids = np.mod(curve.angles + 0.5 * curve.gaps, TWO_PI)
    M = int(TWO_PI // theta) + 1
    while True:
        grid = TWO_PI * np.arange(M) / M
        step = TWO_PI / M
        d = np.abs(np.mod(mids[None, :] - grid[:, None] + math.pi, TWO_PI) - math.pi)
        k = np.argmin(d, axis=1)
        anchors = np.where(d[np.arange(M), k] <= 0.25 * step, mids[k], grid)
        for i, x in enumerate(anchors):
            near = np.abs(np.mod(curve.angles - x + math.pi, TWO_PI) - math.pi)
            j = int(np.argmin(near))
            if near[j] < 1e-9:
                anchors[i] = np.mod(curve.angles[j] + 0.5 * curve.gaps[j], TWO_PI)
        anchors = np.unique(anchors)
        if anchors.size >= 3:
            gaps = np.diff(np.r_[anchors, anchors[0] + TWO_PI])
            if gaps.max() < theta:
                return anchors
        M += 1


def _straighten_anchor(curve: ClosedPLCurve, z: float, theta: float, eps_prime: float, L1: float):
    """Replace a short arc around anchor ``z`` by its chord; returns ``(curve, s, t)``."""
    chart = lift(curve, z - 0.5 * theta, z + 0.5 * theta)
    corners = chart.corner_params
    room = float(np.min(np.abs(corners - z))) if corners.size else 0.5 * theta
    ell = 0.25 * min(room, 0.125 * theta)
    for _ in range(40):
        try:
            win = lebesgue_window(chart, z, ell, eps_prime, L1)
            break
        except WindowTooSmallError:
            ell *= 0.5
    else:
        raise PreconditionError(f"no straightening window at anchor {z}")
    left = [p for p in win.pieces if p[0] < z]
    right = [p for p in win.pieces if p[1] > z]
    s = 0.5 * (left[0][0] + min(left[0][1], z))
    t = 0.5 * (max(right[-1][0], z) + right[-1][1])
    straight = segment_replace(chart, s, t)
    if straight is chart:
        return curve, s, t
    # push the replaced piece back onto the circle
    inner = straight.t[(straight.t > s - TOL) & (straight.t < t + TOL)]
    keep = ~_in_arc(curve.angles, s, t)
    ang = np.r_[curve.angles[keep], np.mod(inner, TWO_PI)]
    pts = np.vstack([curve.pts[keep], straight.eval(inner)])
    order = np.argsort(ang)
    return ClosedPLCurve(ang[order], pts[order]), s, t


def _in_arc(angles, lo, hi):
    """Angles (mod 2 pi) in the closed lifted arc ``[lo, hi]``."""
    return np.mod(angles - lo, TWO_PI) <= hi - lo + TOL


def _pinned_arc(i, arc, L5, eps_prime, delta, a, a_prime, grid_step):
    """Pinned run on one lifted arc at constant ``L5 + eps'`` that moves the arc
    by at most ``delta``.  Tries ``eps'`` first and falls back to
    ``min(eps', delta)`` when the measured movement is too large."""
    last = None
    for eps_arc in dict.fromkeys((eps_prime, min(eps_prime, delta))):
        try:
            res = approximate_pinned(arc, L5, eps_arc, a, a_prime, grid_step)
        except BilipError as exc:
            last = exc
            continue
        if res.certified and res.sup_distance <= delta:
            return res
        last = PreconditionError(f"pinned run at eps={eps_arc} moved {res.sup_distance} (limit {delta}) "
                                 f"or did not certify")
    raise StageError(f"arc {i}", last) from last


@dataclass
class ClosedApproximation:
    curve: ClosedPLCurve
    report: BiLipReport
    certified: bool
    sup_distance: float
    eps_prime: float
    theta: float
    chain: list
    delta: float
    eta: float
    charts: list = field(default_factory=list)
    arc_results: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.curve, self.report))


def approximate_closed(curve: ClosedPLCurve, L: float, eps: float, samples: int = DEFAULT_SAMPLES,
                       grid_step: float | None = None) -> ClosedApproximation:
    """Closed PL curve within ``eps`` of ``curve`` and chordally ``(L + eps)``-biLipschitz."""
    ok, rep = check_closed_bilip(curve, L, samples)
    if not ok:
        raise PreconditionError(f"input is not chordally {L}-biLipschitz (witness {rep.failing_witness(L)})")
    ep = choose_eps_prime(L, eps)
    theta = choose_theta(ep)
    chain = constant_chain(L, ep)
    anchors = place_anchors(curve, theta)
    phi1 = curve
    st = []
    for z in anchors:
        phi1, s, t = _straighten_anchor(phi1, float(z), theta, ep, chain[0])
        st.append((s, t))
    lifted_anchors = np.r_[anchors, anchors[0] + TWO_PI]
    ends = []
    for i in range(anchors.size):
        a, b = float(lifted_anchors[i]), float(lifted_anchors[i + 1])
        arc = lift(phi1, a, b)
        corners = arc.corner_params
        if corners.size == 0:
            ends.append(None)
            continue
        room = min(corners[0] - a, b - corners[-1])
        aa = min(room, 0.2 * (b - a))
        ends.append((aa, 0.5 * aa))
    eta = min((float(chord(e[1], 0.0)) for e in ends if e is not None), default=math.inf)
    delta = min(0.25 * eps, 0.25 * eta)
    charts, results = [], []
    ang_parts, pt_parts = [], []
    for i in range(anchors.size):
        a, b = float(lifted_anchors[i]), float(lifted_anchors[i + 1])
        arc = lift(phi1, a, b)
        s_i, t_i = st[i]
        if ends[i] is None:
            charts.append(ChartSpec(a, b, theta, ep, a, s_i, t_i, a, b, delta, eta))
            results.append(None)
            out = arc
        else:
            aa, ap = ends[i]
            charts.append(ChartSpec(a, b, theta, ep, a, s_i, t_i, a + ap, b - ap, delta, eta))
            res = _pinned_arc(i, arc, chain[4], ep, delta, aa, ap, grid_step)
            results.append(res)
            out = res.curve
        ang_parts.append(out.t[:-1])
        pt_parts.append(out.pts[:-1])
    ang = np.mod(np.concatenate(ang_parts), TWO_PI)
    pts = np.vstack(pt_parts)
    order = np.argsort(ang, kind="stable")
    result = simplify_closed(ClosedPLCurve(ang[order], pts[order]))
    ok, rep = check_closed_bilip(result, L + eps, samples)
    sup, _ = closed_sup_distance(result, curve, samples)
    merged = merge_collinear(result)
    if merged is not result:
        m_ok, m_rep = check_closed_bilip(merged, L + eps, samples)
        m_sup, _ = closed_sup_distance(merged, curve, samples)
        if m_ok and m_sup <= eps:
            result, ok, rep, sup = merged, m_ok, m_rep, m_sup
    return ClosedApproximation(result, rep, ok and sup <= eps, sup, ep, theta, chain, delta, eta, charts, results)
