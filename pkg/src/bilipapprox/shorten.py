"""Fast and short reparametrizations of a curve on a bad interval.

Given an ``L``-biLipschitz curve that moves in a straight line at speed ``L``
just outside ``[a, b]``, a *fast* replacement keeps everything outside, runs
at speed exactly ``L`` on a shorter interval ``[a, b']`` and keeps every
chord from inside to outside at ratio ``>= 1/L``.  A *short* one has the
smallest possible ``b'``.

A fast curve that is not short has a sub-arc whose speed-``L`` chord can
replace it without breaking the inverse bound.  :func:`shorten` looks for such
sub-arcs over a dyadic hierarchy of candidate intervals and restarts after
every accepted replacement.  It stops at a curve where no candidate is
accepted (locally short).  Its certificate records fastness and the global
``L``-biLipschitz check; both are measured, not assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import chain

import numpy as np

from .curve import TOL, PLCurve, angle_between, direction, fast_reparam_segment, insert_breakpoint, turning_angles
from .errors import DegenerateChordError, NonConvergenceError, PreconditionError, WouldExpandError
from .kernels import pair_min
from .verify import BiLipReport, check_bilip, inverse_lipschitz_between, split_segments

SNAP_REL = 1e-9  # candidate ends this close (relative to b' - a) to a breakpoint snap onto it

MAX_ACCEPTED = 10_000
CORNER_MIN = 1e-9  # turning angles below this count as straight
STEP_SLACK = 1e-9
SPEED_TOL = 1e-9


def speed_L_reparam(curve: PLCurve, a: float, b: float, L: float) -> tuple[PLCurve, float]:
    """Traverse the image of ``[a, b]`` at speed ``L`` on ``[a, b']``.

    ``b' = a + arclength(a, b) / L``; the part after ``b`` is shifted left by
    ``b - b'``.
    """
    c, i = insert_breakpoint(curve, a)
    c, j = insert_breakpoint(c, b)
    sp = c.speeds[i:j]
    excess = _rounded_speed_excess(c, np.arange(i, j), L)
    if np.any((sp > L) & (excess > 1e-12 * L)):
        raise WouldExpandError(f"speed {sp.max()} exceeds L={L} on [{a}, {b}]")
    if np.all(excess <= 1e-12 * L):
        return curve, float(c.t[j])
    lengths = np.hypot(c.chords[i:j, 0], c.chords[i:j, 1])
    if np.any(lengths == 0):
        raise PreconditionError("the curve stalls inside the interval")
    a = float(c.t[i])
    inner = a + np.cumsum(lengths) / L
    bp = float(inner[-1])
    new_t = np.concatenate([c.t[: i + 1], inner, bp + (c.t[j + 1 :] - c.t[j])])
    return PLCurve(new_t, c.pts), bp


@dataclass(frozen=True)
class FastCertificate:
    """Measured evidence that a curve is fast on ``[a, b_prime]``."""

    a: float
    b: float | None
    b_prime: float
    L: float
    speed_dev: float
    mild_value: float
    mild_witness: tuple
    slack: float = 1e-6
    global_report: BiLipReport | None = None

    @property
    def bounds_ok(self) -> bool:
        if self.b is None:
            return True
        lower = self.a + (self.b - self.a) / self.L**2
        return lower - 1e-9 <= self.b_prime <= self.b + 1e-9

    @property
    def passed(self) -> bool:
        ok = self.speed_dev <= SPEED_TOL and self.mild_value >= 1.0 / self.L - self.slack and self.bounds_ok
        if self.global_report is not None:
            ok = ok and self.global_report.passes(self.L, self.slack)
        return ok


def is_fast(curve: PLCurve, a: float, b_prime: float, L: float, grid_step: float | None = None,
            b: float | None = None, slack: float = 1e-6) -> FastCertificate:
    """Check speed ``L`` on ``[a, b']`` and the inside/outside chord bound."""
    if b_prime - a <= TOL:
        return FastCertificate(a, b, b_prime, L, 0.0, math.inf, (math.nan, math.nan), slack)
    c, inside, outside = split_segments(curve, a, b_prime)
    dev = float(np.max(_rounded_speed_excess(c, inside, L))) if inside.size else 0.0
    val, wit = inverse_lipschitz_between(c, inside, outside)
    return FastCertificate(a, b, b_prime, L, dev, val, wit, slack)


@dataclass(frozen=True)
class StepResult:
    accepted: bool
    curve: PLCurve
    s_plus: float
    witness: tuple | None = None
    ratio: float = math.inf
    degenerate: bool = False


def straightening_step(curve: PLCurve, a: float, b_prime: float, r: float, s: float, L: float,
                       grid_step: float | None = None) -> StepResult:
    """Try replacing the sub-arc over ``(r, s)`` by its chord at speed ``L``.

    The candidate is accepted when every chord from the new segment to the
    rest of the curve still has ratio ``>= 1/L`` (up to ``1e-9``).  Pairs
    inside ``[a, b']`` are checked too, which keeps the curve globally
    ``L``-biLipschitz after each accepted step.
    """
    if not a - TOL <= r < s <= b_prime + TOL:
        raise PreconditionError(f"({r}, {s}) is not inside [{a}, {b_prime}]")
    try:
        new, s_plus = fast_reparam_segment(curve, r, s, L)
    except DegenerateChordError:
        return StepResult(False, curve, s, degenerate=True)
    if new is curve:
        return StepResult(True, curve, s_plus)
    i = int(np.searchsorted(new.t, r - TOL))
    others = np.r_[0:i, i + 1 : new.n_segments]
    val, p, q = pair_min(new.t, new.pts, np.array([i]), others, False)
    if val >= 1.0 / L - STEP_SLACK:
        return StepResult(True, new, s_plus, ratio=val)
    return StepResult(False, curve, s_plus, witness=(p, q), ratio=val)


@dataclass
class StraightenTrace:
    """Every candidate tried: ``(r, s, s_plus, accepted, b_prime_after)``."""

    iterations: list = field(default_factory=list)
    final_b_prime: float = math.nan

    @property
    def accepted(self) -> list:
        return [it for it in self.iterations if it[3]]

    @property
    def rejected(self) -> list:
        return [it for it in self.iterations if not it[3]]


def dyadic_candidates(a: float, b: float, grid_step: float):
    """Sub-intervals of ``[a, b]``, coarse to fine: the whole interval, then at
    each level the dyadic cells followed by the cells shifted by half a width.
    Stops once the width drops below ``grid_step``."""
    yield a, b
    k = 1
    while True:
        n = 2**k
        w = (b - a) / n
        if w < grid_step:
            return
        for i in range(n):
            yield a + i * w, (b if i == n - 1 else a + (i + 1) * w)
        for i in range(n - 1):
            yield a + (i + 0.5) * w, a + (i + 1.5) * w
        k += 1


def corner_candidates(curve: PLCurve, a: float, b: float, half_widths):
    """Windows centred on the corners inside ``(a, b)``, sharpest corner
    first, one per half-width (clipped to ``[a, b]``).  Dyadic cells only
    straddle a corner with half-width near the grid step, which can be too
    wide to cut it.
    """
    t = curve.t
    ang = turning_angles(curve)
    inner = np.flatnonzero((t[1:-1] > a + TOL) & (t[1:-1] < b - TOL) & (ang > CORNER_MIN)) + 1
    for k in inner[np.argsort(-ang[inner - 1], kind="stable")]:
        for h in half_widths:
            yield max(t[k] - h, a), min(t[k] + h, b)


def grid_schedule(a: float, b: float, grid_step: float) -> list:
    """Stage grids ``grid_step * 2**k``, coarse to fine, starting at the
    largest one not above ``(b - a) / 64``."""
    top = (b - a) / 64.0
    k = 0
    while grid_step * 2.0 ** (k + 1) <= top:
        k += 1
    return [grid_step * 2.0**j for j in range(k, -1, -1)]


def _speed_tol(curve: PLCurve, k: int, L: float) -> float:
    """Relative speed tolerance for segment ``k``; short segments far from 0
    lose precision to the rounding of their breakpoints."""
    scale = max(abs(curve.t[k]), abs(curve.t[k + 1]), 1.0)
    return L * (SPEED_TOL + 8.0 * np.finfo(float).eps * scale / curve.durations[k])


def _rounded_speed_excess(curve: PLCurve, idx, L: float) -> np.ndarray:
    """``|speed - L|`` on segments ``idx`` minus what breakpoint rounding explains."""
    t = curve.t
    scale = np.maximum(np.maximum(np.abs(t[idx]), np.abs(t[idx + 1])), 1.0)
    rounding = L * 8.0 * np.finfo(float).eps * scale / curve.durations[idx]
    return np.maximum(np.abs(curve.speeds[idx] - L) - rounding, 0.0)


def _linear_hypothesis(curve: PLCurve, a: float, b: float, L: float) -> None:
    t0, t1 = curve.domain
    if a > t0 + TOL:
        k = int(np.searchsorted(curve.t, a - TOL, "left")) - 1
        if abs(curve.speeds[k] - L) > _speed_tol(curve, k, L):
            raise PreconditionError(f"speed {curve.speeds[k]} just before a={a} is not L={L}")
    if b < t1 - TOL:
        k = int(np.searchsorted(curve.t, b + TOL, "right")) - 1
        if abs(curve.speeds[k] - L) > _speed_tol(curve, k, L):
            raise PreconditionError(f"speed {curve.speeds[k]} just after b={b} is not L={L}")


def _sweep(psi, a, bp, L, grid, half_widths, trace, n_acc, max_accepted):
    """Straighten until no candidate is accepted.  A step must not raise the
    largest turning angle inside ``(a, b')``, so refining the grid never
    makes the result less smooth."""
    while True:
        corners = psi.corner_params
        corners = corners[(corners > a + TOL) & (corners < bp - TOL)]
        if corners.size == 0:
            return psi, bp, n_acc
        cap = discrete_smoothness(psi, a, bp)
        knots = psi.t
        snap = SNAP_REL * (bp - a)
        moved = False
        for r, s in chain(dyadic_candidates(a, bp, grid), corner_candidates(psi, a, bp, half_widths)):
            r, s = _snap(r, knots, snap), _snap(s, knots, snap)
            if s - r <= snap:
                continue
            if np.searchsorted(corners, s - TOL, "left") <= np.searchsorted(corners, r + TOL, "right"):
                continue
            res = straightening_step(psi, a, bp, r, s, L)
            if res.accepted and s - res.s_plus > 1e-12:
                new_bp = _snap(bp - (s - res.s_plus), res.curve.t, TOL)
                if discrete_smoothness(res.curve, a, new_bp) <= cap:
                    psi, bp = res.curve, new_bp
                    trace.iterations.append((r, s, res.s_plus, True, bp))
                    moved = True
                    break
            trace.iterations.append((r, s, res.s_plus, False, bp))
        if not moved:
            return psi, bp, n_acc
        n_acc += 1
        if n_acc >= max_accepted:
            raise NonConvergenceError(f"{n_acc} accepted steps without settling")


def shorten(curve: PLCurve, a: float, b: float, L: float, grid_step: float | None = None,
            check_input: bool = True, max_accepted: int = MAX_ACCEPTED):
    """Locally short replacement of ``curve`` on ``[a, b]``.

    Returns ``(curve, certificate, trace)``.  ``grid_step`` is the finest
    candidate width; it defaults to ``(b - a) / 64``.
    """
    if not a < b:
        raise PreconditionError("shorten needs a < b")
    _linear_hypothesis(curve, a, b, L)
    if check_input:
        ok, rep = check_bilip(curve, L)
        if not ok:
            raise PreconditionError(f"input is not {L}-biLipschitz: {rep}")
    grid = grid_step if grid_step else (b - a) / 64.0
    psi, bp = speed_L_reparam(curve, a, b, L)
    trace = StraightenTrace()
    n_acc = 0
    stages = grid_schedule(a, b, grid)
    for n, g in enumerate(stages):
        half_widths = stages[: n + 1] + [0.5 * g, 0.25 * g]
        psi, bp, n_acc = _sweep(psi, a, bp, L, g, half_widths, trace, n_acc, max_accepted)
    trace.final_b_prime = bp
    cert = is_fast(psi, a, bp, L, grid, b=b)
    _, rep = check_bilip(psi, L)
    cert = FastCertificate(cert.a, b, bp, L, cert.speed_dev, cert.mild_value, cert.mild_witness,
                           cert.slack, rep)
    return psi, cert, trace


def _snap(x: float, knots: np.ndarray, tol: float) -> float:
    """Nearest breakpoint if it lies within ``tol`` of ``x``, else ``x``.
    Keeps straightening from leaving segments of near-zero duration."""
    k = int(np.argmin(np.abs(knots - x)))
    return float(knots[k]) if abs(knots[k] - x) <= tol else x


@dataclass(frozen=True)
class DirectionEstimate:
    """Directions ``theta = PQ``, ``theta' = PS``, ``nu = QS`` and the slacks of
    ``|theta - theta'| <= eta / L^2`` and
    ``theta.nu - eta / L^2 <= (PS - PQ) / delta <= theta.nu + eta / L^2``
    (a residual ``<= 0`` means the inequality holds)."""

    ell: float
    eta: float
    L: float
    delta: float
    theta: np.ndarray
    theta_prime: np.ndarray
    nu: np.ndarray
    residual1: float
    residual2_lo: float
    residual2_hi: float

    @property
    def holds(self) -> bool:
        return max(self.residual1, self.residual2_lo, self.residual2_hi) <= 0.0


def direction_estimates(P, Q, S, ell: float, eta: float, L: float) -> DirectionEstimate:
    P, Q, S = (np.asarray(v, dtype=float) for v in (P, Q, S))
    PQ = float(np.hypot(*(Q - P)))
    if PQ < ell / 2.0:
        raise PreconditionError(f"|PQ| = {PQ} is below ell/2 = {ell / 2}")
    delta = float(np.hypot(*(S - Q)))
    if delta == 0.0:
        raise DegenerateChordError("S coincides with Q")
    PS = float(np.hypot(*(S - P)))
    th, thp, nu = direction(Q - P), direction(S - P), direction(S - Q)
    tol = eta / L**2
    ratio = (PS - PQ) / delta
    dot = float(th @ nu)
    return DirectionEstimate(
        ell, eta, L, delta, th, thp, nu,
        angle_between(th, thp) - tol, (dot - tol) - ratio, ratio - (dot + tol),
    )


def fit_delta_bar(ell: float, eta: float, L: float, n_dirs: int = 24) -> float:
    """Largest power of two ``delta`` for which the direction estimates hold on
    a probe set: ``|PQ| = ell/2`` and ``|QS| = delta``, each direction drawn from
    ``n_dirs`` equally spaced angles."""
    ang = 2 * np.pi * np.arange(n_dirs) / n_dirs
    dirs = np.c_[np.cos(ang), np.sin(ang)]
    Q = np.zeros(2)
    for k in range(0, 200):
        d = 2.0**-k
        if all(
            direction_estimates(Q - 0.5 * ell * (1 + 1e-9) * u, Q, Q + d * v, ell, eta, L).holds
            for u in dirs for v in dirs
        ):
            return d
    return 0.0


def discrete_smoothness(curve: PLCurve, a: float, b_prime: float) -> float:
    """Largest turning angle at breakpoints strictly inside ``(a, b')``."""
    if curve.n_segments < 2:
        return 0.0
    inner = (curve.t[1:-1] > a + TOL) & (curve.t[1:-1] < b_prime - TOL)
    ang = turning_angles(curve)[inner & curve.corner_mask]
    return float(ang.max()) if ang.size else 0.0
