"""End-to-end approximation of an ``L``-biLipschitz curve.

Stages, each producing a new curve:

1. :func:`~bilipapprox.lebesgue.straighten_lebesgue` makes the curve
   piecewise linear outside a few short *bad intervals* around its corners.
2. :func:`speedup` reparametrizes short strips on both sides of each bad
   interval to run at speed ``L + xi``.
3. :func:`shorten_bad_intervals` replaces each bad interval by a locally short
   speed-``(L + xi)`` arc, shrinking the domain.
4. :func:`pl_sample_c1` resamples the shortened arcs on uniform grids.
5. :func:`rescale` stretches the domain back to its original length.

The result is certified by measurement: exact endpoints, sup-distance at
most ``eps`` and the ``(L + eps)``-biLipschitz check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .budget import ConstantBudget, choose_constants
from .curve import TOL, PLCurve, concat, insert_breakpoint, restrict, sup_distance
from .errors import (
    AccountingError,
    BilipError,
    BudgetError,
    PreconditionError,
    SamplingError,
    StageError,
)
from .kernels import pair_min
from .lebesgue import straighten_lebesgue, subtract_intervals
from .shorten import shorten
from .timechange import TimeChange
from .verify import BiLipReport, check_bilip, corner_angle_check, split_segments

MAX_SAMPLING_DOUBLINGS = 16


def _bad_from_good(domain, good_set):
    t0, t1 = domain
    return [(a, b) for a, b in subtract_intervals(t0, t1, good_set) if b - a > TOL]


def strip_length(curve: PLCurve, bad, budget: ConstantBudget, cap: float = math.inf) -> float:
    """Half the shortest linear piece next to a bad interval, capped so that
    the strips shrink the domain by less than ``xi`` times its length and
    their total stays below ``xi``."""
    t0, t1 = curve.domain
    corners = curve.corner_params
    pieces = []
    for k, (lo, hi) in enumerate(bad):
        if lo > t0 + TOL:
            left = max(t0, bad[k - 1][1] if k else t0)
            j = np.searchsorted(corners, lo - TOL, "left")
            pieces.append(lo - max(left, corners[j - 1] if j else t0))
        if hi < t1 - TOL:
            right = min(t1, bad[k + 1][0] if k + 1 < len(bad) else t1)
            j = np.searchsorted(corners, hi + TOL, "right")
            pieces.append(min(right, corners[j] if j < corners.size else t1) - hi)
    shortest = min(pieces) if pieces else curve.domain_length
    return min(0.5 * shortest, budget.xi * min(curve.domain_length, 1.0) / (4.0 * max(1, len(bad))), cap)


def speedup(curve: PLCurve, good_set, budget: ConstantBudget, L: float):
    """Run the strips of length ``budget.ell`` beside each bad interval at
    speed ``L + xi``.  Returns ``(phi2, tau)`` with ``phi2(tau(x)) = curve(x)``."""
    t0, t1 = curve.domain
    bad = _bad_from_good(curve.domain, good_set)
    if not bad:
        return curve, TimeChange.identity(t0, t1)
    ell, target = budget.ell, L + budget.xi
    strips = []
    for lo, hi in bad:
        if lo > t0 + TOL:
            strips.append((lo - ell, lo))
        if hi < t1 - TOL:
            strips.append((hi, hi + ell))
    c = curve
    for a, b in strips:
        if a < t0 - TOL or b > t1 + TOL:
            raise BudgetError(f"strip ({a}, {b}) leaves the domain")
        inner = c.corner_params
        if np.any((inner > a + TOL) & (inner < b - TOL)):
            raise BudgetError(f"curve is not linear on the strip ({a}, {b})")
        c, _ = insert_breakpoint(c, a)
        c, _ = insert_breakpoint(c, b)
    X = np.unique(np.r_[t0, [s for st in strips for s in st], t1])
    slopes = np.ones(X.size - 1)
    for a, b in strips:
        k = int(np.argmin(np.abs(X - a)))
        speed = c.speeds[c.segment_of(0.5 * (a + b))]
        if speed > target * (1 + 1e-12):
            raise BudgetError(f"strip speed {speed} above {target}")
        slopes[k] = speed / target
    tau = TimeChange.from_slopes(X, slopes)
    new_t = tau(c.t)
    # keep the start exact and the strip ends aligned with the map's breakpoints
    new_t[0] = t0
    return PLCurve(new_t, c.pts), tau


@dataclass
class ShortenedInterval:
    lo: float
    b: float
    b_prime: float
    certificate: object
    trace: object


def shorten_bad_intervals(curve: PLCurve, bad, L_eff: float, budget: ConstantBudget, order: str = "ltr"):
    """Shorten every bad interval (given in ``curve``'s parameters).

    Returns ``(phi3, tau_tilde, smooth, records)``; ``smooth`` lists the
    shortened intervals in ``phi3``'s parameters and ``tau_tilde`` maps
    ``curve``'s parameters to ``phi3``'s (slope 1 off the bad intervals).
    """
    t0, t1 = curve.domain
    if not bad:
        return curve, TimeChange.identity(t0, t1), [], []
    seq = list(range(len(bad)))
    if order == "rtl":
        seq.reverse()
    shrink = [0.0] * len(bad)
    new_hi = [0.0] * len(bad)
    records: list = [None] * len(bad)
    c = curve
    for k in seq:
        offset = sum(shrink[i] for i in range(k))
        lo, hi = bad[k][0] - offset, bad[k][1] - offset
        grid = min(budget.grid_step * curve.domain_length, (hi - lo) / 64.0)
        c, cert, trace = shorten(c, lo, hi, L_eff, grid, check_input=False)
        bp = trace.final_b_prime
        shrink[k] = hi - bp
        new_hi[k] = bp
        records[k] = ShortenedInterval(lo, hi, bp, cert, trace)
    offsets = np.cumsum([0.0] + shrink)
    smooth = [(bad[k][0] - offsets[k], bad[k][1] - offsets[k + 1]) for k in range(len(bad))]
    X = [t0]
    Y = [t0]
    for k, (lo, hi) in enumerate(bad):
        for x, y in ((lo, smooth[k][0]), (hi, smooth[k][1])):
            if x > X[-1]:
                X.append(x)
                Y.append(y)
    if t1 > X[-1]:
        X.append(t1)
        Y.append(t1 - offsets[-1])
    return c, TimeChange(X, Y), smooth, records


def _replace_polyline(curve: PLCurve, lo: float, hi: float, k: int) -> PLCurve:
    c, i = insert_breakpoint(curve, lo)
    c, j = insert_breakpoint(c, hi)
    xs = np.linspace(c.t[i], c.t[j], k + 1)[1:-1]
    pts = c.eval(xs)
    return PLCurve(np.r_[c.t[: i + 1], xs, c.t[j:]], np.r_[c.pts[: i + 1], pts, c.pts[j:]])


def _local_ok(curve: PLCurve, lo: float, hi: float, L_target: float) -> bool:
    c, inside, outside = split_segments(curve, lo, hi)
    sp = c.speeds[inside]
    if sp.max() > L_target or sp.min() < 1.0 / L_target:
        return False
    v1 = pair_min(c.t, c.pts, inside, outside, False)[0]
    v2 = pair_min(c.t, c.pts, inside, inside, True)[0]
    return min(v1, v2) >= 1.0 / L_target


def pl_sample_c1(curve: PLCurve, smooth_intervals, L_eff: float, budget: ConstantBudget):
    """Replace each shortened arc by its interpolant on ``k`` equal pieces.

    ``k`` doubles from 1 until the pairs touching the arc pass at
    ``L_eff (1 + xi)`` and the arc moves by at most ``xi``.  Returns
    ``(phi4, counts)`` with the chosen ``k`` per interval (0 if untouched).
    """
    c = curve
    counts = []
    L_target = L_eff * (1.0 + budget.xi)
    for lo, hi in smooth_intervals:
        inner = c.corner_params
        if not np.any((inner > lo + TOL) & (inner < hi - TOL)):
            counts.append(0)
            continue
        for d in range(MAX_SAMPLING_DOUBLINGS + 1):
            k = 2**d
            cand = _replace_polyline(c, lo, hi, k)
            moved, _ = sup_distance(restrict(cand, lo, hi), restrict(c, lo, hi))
            if moved <= budget.xi and _local_ok(cand, lo, hi, L_target):
                c = cand
                counts.append(k)
                break
        else:
            raise SamplingError(f"no uniform resampling of ({lo}, {hi}) up to {k} pieces")
    return c, counts


def rescale(curve: PLCurve, C_prime: float, budget: ConstantBudget | None = None, length: float | None = None) -> PLCurve:
    """Stretch the domain ``[t0, t0 + C']`` to ``[t0, t0 + length]``."""
    t0 = curve.t[0]
    length = 1.0 if length is None else length
    if budget is not None and not (1.0 - 2.0 * budget.xi) * length - TOL <= C_prime <= length + TOL:
        raise AccountingError(f"C' = {C_prime} outside [{(1 - 2 * budget.xi) * length}, {length}]")
    if C_prime == length:
        return curve
    t = t0 + (curve.t - t0) * (length / C_prime)
    t[-1] = t0 + length
    return PLCurve(t, curve.pts)


@dataclass
class ApproximationResult:
    """Output curve, its measured report and everything needed to audit it."""

    curve: PLCurve
    report: BiLipReport
    budget: ConstantBudget
    certified: bool
    sup_distance: float
    endpoints_exact: bool
    C: float
    C_prime: float
    stages: dict = field(default_factory=dict)
    partition: object = None
    shortened: list = field(default_factory=list)
    sample_counts: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.curve, self.report, self.budget))


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except BilipError as exc:
        raise StageError(name, exc) from exc


def _run_stages(curve: PLCurve, L: float, eps: float, budget: ConstantBudget, protect=(), ell_cap=math.inf):
    """Stages 1-4; returns the intermediate curves and bookkeeping."""
    D = curve.domain_length
    phi1, part = _stage("straighten", straighten_lebesgue, curve, budget.xi, L, budget, protect)
    bad = part.bad_intervals
    ell = strip_length(phi1, bad, budget, ell_cap)
    budget = _stage("budget", budget.with_strips, len(bad), max(ell, 1e-300))
    phi2, tau = _stage("speedup", speedup, phi1, part.good_set, budget, L)
    C = phi2.domain_length
    if not (1.0 - budget.xi) * D - TOL <= C <= D + TOL:
        raise StageError("speedup", AccountingError(f"C = {C} outside [{(1 - budget.xi) * D}, {D}]"))
    L_eff = L + budget.xi
    bad2 = [(float(tau(a)), float(tau(b))) for a, b in bad]
    phi3, tau_t, smooth, records = _stage("shorten", shorten_bad_intervals, phi2, bad2, L_eff, budget)
    phi4, counts = _stage("sample", pl_sample_c1, phi3, smooth, L_eff, budget)
    C_prime = phi4.domain_length
    if not (1.0 - 2.0 * budget.xi) * D - TOL <= C_prime <= D + TOL:
        raise StageError("rescale", AccountingError(f"C' = {C_prime} outside [{(1 - 2 * budget.xi) * D}, {D}]"))
    stages = {"phi1": phi1, "phi2": phi2, "phi3": phi3, "phi4": phi4, "tau": tau, "tau_tilde": tau_t}
    return budget, part, stages, records, counts, C, C_prime


def _certify(out: PLCurve, curve: PLCurve, L: float, eps: float, budget: ConstantBudget):
    grid = budget.grid_step * curve.domain_length
    sup, _ = sup_distance(out, curve, grid)
    ok, rep = check_bilip(out, L + eps, grid, budget.slack)
    ends = np.array_equal(out.pts[0], curve.pts[0]) and np.array_equal(out.pts[-1], curve.pts[-1])
    ends = ends and out.t[0] == curve.t[0] and out.t[-1] == curve.t[-1]
    return ok and sup <= eps and ends, rep, sup, ends


def approximate(curve: PLCurve, L: float, eps: float, grid_step: float | None = None) -> ApproximationResult:
    """``(L + eps)``-biLipschitz PL approximation of an ``L``-biLipschitz curve
    within sup-distance ``eps``, with the same endpoints.

    A failed certification is reported in the result (``certified=False``),
    never raised.
    """
    budget = choose_constants(L, eps) if grid_step is None else choose_constants(L, eps, grid_step)
    ok, rep = check_bilip(curve, L, slack=budget.slack)
    if not ok:
        raise PreconditionError(f"input is not {L}-biLipschitz (witness {rep.failing_witness(L)})")
    budget, part, stages, records, counts, C, C_prime = _run_stages(curve, L, eps, budget)
    D = curve.domain_length
    out = _stage("rescale", rescale, stages["phi4"], C_prime, budget, D)
    certified, report, sup, ends = _certify(out, curve, L, eps, budget)
    return ApproximationResult(out, report, budget, certified, sup, ends, C, C_prime, stages, part, records, counts)


def approximate_pinned(curve: PLCurve, L: float, eps: float, a: float, a_prime: float,
                       grid_step: float | None = None) -> ApproximationResult:
    """Like :func:`approximate`, but the output equals the input exactly on the
    first and last ``a_prime`` of the domain.

    The curve must be linear on the first and last ``a`` of its domain.  The
    middle is compressed so the end pieces can stay in place.
    """
    t0, t1 = curve.domain
    D = t1 - t0
    if not 0 < a_prime < a < D / 2:
        raise PreconditionError("need 0 < a' < a < half the domain")
    corners = curve.corner_params
    if np.any((corners > t0) & (corners < t0 + a)) or np.any((corners > t1 - a) & (corners < t1)):
        raise PreconditionError("curve is not linear on the end strips")
    budget = choose_constants(L, eps) if grid_step is None else choose_constants(L, eps, grid_step)
    ok, rep = check_bilip(curve, L, slack=budget.slack)
    if not ok:
        raise PreconditionError(f"input is not {L}-biLipschitz (witness {rep.failing_witness(L)})")
    guard = 0.45 * (a - a_prime)
    protect = [(t0, t0 + a - guard), (t1 - a + guard, t1)]
    budget, part, stages, records, counts, C, C_prime = _run_stages(
        curve, L, eps, budget, protect, ell_cap=guard / 4.0
    )
    phi4 = stages["phi4"]
    if phi4 is curve:
        out = curve
    else:
        out = _stage("pin", _pin_ends, curve, phi4, a, a_prime)
    certified, report, sup, ends = _certify(out, curve, L, eps, budget)
    left, right = restrict(curve, t0, t0 + a_prime), restrict(curve, t1 - a_prime, t1)
    ends_kept = left.same_as(restrict(out, t0, t0 + a_prime)) and right.same_as(restrict(out, t1 - a_prime, t1))
    return ApproximationResult(out, report, budget, certified and ends_kept, sup, ends, C, C_prime, stages, part,
                               records, counts)


def _pin_ends(curve: PLCurve, phi4: PLCurve, a: float, a_prime: float) -> PLCurve:
    """Glue the input's end pieces to the middle of ``phi4``, compressed so
    that ``phi4`` on ``[a, C' - a]`` fills ``[a, D - a]``."""
    t0, t1 = curve.domain
    D = t1 - t0
    Cp = phi4.domain_length
    g = TimeChange([t0, t0 + a, t1 - a, t1], [t0, t0 + a, t0 + Cp - a, t0 + Cp])
    ginv = g.inverse()
    xs = ginv(phi4.t)
    near = np.min(np.abs(xs[:, None] - g.x[None, :]), axis=1) <= TOL  # would leave sliver segments
    xs = np.union1d(xs[~near], g.x)
    xs[0], xs[-1] = t0, t1
    full = PLCurve(xs, phi4.eval(np.clip(g(xs), phi4.t[0], phi4.t[-1])))
    mid = restrict(full, t0 + a_prime, t1 - a_prime)
    left = restrict(curve, t0, t0 + a_prime)
    right = restrict(curve, t1 - a_prime, t1)
    for end, k in ((left.pts[-1], 0), (right.pts[0], -1)):
        if np.max(np.abs(mid.pts[k] - end)) > 1e-9:
            raise AccountingError(f"pinned junction mismatch {mid.pts[k]} vs {end}")
    pts = mid.pts.copy()
    pts[0], pts[-1] = left.pts[-1], right.pts[0]
    t = mid.t.copy()
    t[0], t[-1] = left.t[-1], right.t[0]
    return concat(concat(left, PLCurve(t, pts)), right)


def corner_violations(result: ApproximationResult) -> list:
    """Corner-law violations of a result at its certified constant."""
    return corner_angle_check(result.curve, result.budget.L + result.budget.eps)
