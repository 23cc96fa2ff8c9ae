"""Piecewise-linear planar curves and the elementary chord surgeries.

A :class:`PLCurve` is a list of strictly increasing parameters ``t`` together
with one vertex per parameter; between consecutive parameters the curve is the
linear interpolation of the two vertices.  Points and directions are plain
``numpy`` arrays of shape ``(2,)``.

The two surgeries used everywhere else are

* :func:`segment_replace` -- replace the sub-arc over ``(s, t)`` by its chord,
  keeping the same parameter interval;
* :func:`fast_reparam_segment` -- replace it by its chord traversed at speed
  ``L``, which shortens the domain by ``t - t_plus``.

Both insert breakpoints at ``s`` and ``t`` first so outputs stay exactly PL.
Parameter comparisons use the absolute tolerance :data:`TOL`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    AmbiguousDerivativeError,
    DegenerateChordError,
    DomainError,
    JunctionError,
    NotLipschitzError,
)

TOL = 1e-12
# Relative size of a velocity jump below which a breakpoint is not a corner.
VELOCITY_TOL = 1e-10


@dataclass(frozen=True)
class Interval:
    """Open or closed real interval ``lo < hi``; openness is up to the caller."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise DomainError(f"invalid interval ({self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def direction(v) -> np.ndarray:
    """Unit vector along ``v``."""
    v = np.asarray(v, dtype=float)
    n = float(np.hypot(v[0], v[1]))
    if n == 0.0:
        raise DegenerateChordError("zero vector has no direction")
    return v / n


def angle_between(u, v) -> float:
    """Unsigned angle in ``[0, pi]`` between two nonzero vectors."""
    cross = u[0] * v[1] - u[1] * v[0]
    return float(np.arctan2(abs(cross), u[0] * v[0] + u[1] * v[1]))


@dataclass(frozen=True, eq=False)
class PLCurve:
    """Piecewise-linear map from ``[t[0], t[-1]]`` into the plane.

    Arrays are copied, validated and made read-only on construction.
    """

    t: np.ndarray
    pts: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        pts = np.array(self.pts, dtype=float).reshape(-1, 2)
        if t.size < 2:
            raise DomainError("a curve needs at least two breakpoints")
        if pts.shape[0] != t.size:
            raise DomainError("breakpoints and vertices differ in length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(pts))):
            raise DomainError("non-finite breakpoint or vertex")
        if np.any(np.diff(t) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        t.flags.writeable = False
        pts.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "pts", pts)

    @classmethod
    def from_vertices(cls, pts, t=None) -> "PLCurve":
        """Build a curve; with ``t`` omitted the parameters are ``0, 1, ..., n``."""
        pts = np.asarray(pts, dtype=float)
        if t is None:
            t = np.arange(len(pts), dtype=float)
        return cls(t, pts)

    @property
    def n_segments(self) -> int:
        return self.t.size - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @property
    def domain_length(self) -> float:
        return float(self.t[-1] - self.t[0])

    @cached_property
    def durations(self) -> np.ndarray:
        return np.diff(self.t)

    @cached_property
    def chords(self) -> np.ndarray:
        return np.diff(self.pts, axis=0)

    @cached_property
    def velocities(self) -> np.ndarray:
        return self.chords / self.durations[:, None]

    @cached_property
    def speeds(self) -> np.ndarray:
        return np.hypot(self.chords[:, 0], self.chords[:, 1]) / self.durations

    @cached_property
    def corner_mask(self) -> np.ndarray:
        """Boolean per interior breakpoint: does the velocity jump there?"""
        v = self.velocities
        jump = np.hypot(*(v[1:] - v[:-1]).T)
        scale = np.maximum(np.maximum(self.speeds[1:], self.speeds[:-1]), 1.0)
        return jump > VELOCITY_TOL * scale

    @cached_property
    def corner_params(self) -> np.ndarray:
        """Parameters of the genuine corners, in increasing order."""
        return self.t[1:-1][self.corner_mask]

    def _clamp(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.t[0], self.t[-1]
        if np.any(t < lo - TOL) or np.any(t > hi + TOL) or np.any(~np.isfinite(t)):
            raise DomainError(f"parameter outside domain [{lo}, {hi}]")
        return np.clip(t, lo, hi)

    def segment_of(self, t) -> np.ndarray | int:
        """Index of the segment containing ``t`` (right-continuous, last one closed)."""
        t = self._clamp(t)
        i = np.searchsorted(self.t, t, side="right") - 1
        i = np.clip(i, 0, self.n_segments - 1)
        return int(i) if i.ndim == 0 else i

    def eval(self, t) -> np.ndarray:
        """Point(s) of the curve at parameter(s) ``t``; exact at breakpoints."""
        t = self._clamp(t)
        i = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, self.n_segments - 1)
        f = (t - self.t[i]) / (self.t[i + 1] - self.t[i])
        f = f[..., None]
        return (1.0 - f) * self.pts[i] + f * self.pts[i + 1]

    __call__ = eval

    def speed(self, i: int) -> float:
        if not 0 <= i < self.n_segments:
            raise IndexError(f"segment index {i} out of range")
        return float(self.speeds[i])

    def arclength(self, u: float, v: float) -> float:
        """Length of the image of ``[u, v]``."""
        if u > v:
            raise DomainError("arclength needs u <= v")
        if u == v:
            return 0.0
        sub = restrict(self, u, v)
        return float(np.sum(np.hypot(sub.chords[:, 0], sub.chords[:, 1])))

    def velocity_at(self, x: float, side: str | None = None) -> np.ndarray:
        """Derivative at ``x``; at a corner a ``side`` ('left'/'right') is required."""
        x = float(self._clamp(x))
        k = int(np.searchsorted(self.t, x))
        at_break = k < self.t.size and self.t[k] == x
        if at_break and 0 < k < self.n_segments:
            if self.corner_mask[k - 1] and side is None:
                raise AmbiguousDerivativeError(f"corner at parameter {x}")
            return self.velocities[k - 1] if side == "left" else self.velocities[k]
        return self.velocities[self.segment_of(x)]

    def same_as(self, other: "PLCurve") -> bool:
        """Bitwise equality of breakpoints and vertices."""
        return (
            self.t.shape == other.t.shape
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.pts, other.pts)
        )


def evaluate(curve: PLCurve, t):
    return curve.eval(t)


def speed(curve: PLCurve, i: int) -> float:
    return curve.speed(i)


def arclength(curve: PLCurve, u: float, v: float) -> float:
    return curve.arclength(u, v)


def insert_breakpoint(curve: PLCurve, s: float) -> tuple[PLCurve, int]:
    """Return a curve with a breakpoint at ``s`` and its index.

    Parameters within :data:`TOL` of an existing breakpoint snap to it and the
    input is returned unchanged.
    """
    s = float(curve._clamp(s))
    k = int(np.searchsorted(curve.t, s))
    for j in (k - 1, k):
        if 0 <= j < curve.t.size and abs(curve.t[j] - s) <= TOL:
            return curve, j
    p = curve.eval(s)
    t = np.insert(curve.t, k, s)
    pts = np.insert(curve.pts, k, p, axis=0)
    return PLCurve(t, pts), k


def segment_replace(curve: PLCurve, s: float, t: float) -> PLCurve:
    """Replace the sub-arc over ``(s, t)`` by its chord on the same interval."""
    if s > t + TOL:
        raise DomainError("segment_replace needs s <= t")
    curve._clamp([s, t])
    if t - s <= TOL:
        return curve
    c, i = insert_breakpoint(curve, s)
    c, j = insert_breakpoint(c, t)
    if j - i <= 1:
        return curve
    keep = np.r_[0 : i + 1, j : c.t.size]
    return PLCurve(c.t[keep], c.pts[keep])


def fast_reparam_segment(curve: PLCurve, s: float, t: float, L: float) -> tuple[PLCurve, float]:
    """Replace the sub-arc over ``(s, t)`` by its chord run at speed ``L``.

    Returns the new curve and ``t_plus = s + chord / L``; everything after
    ``t`` is shifted left by ``t - t_plus``.
    """
    if not s < t:
        raise DomainError("fast_reparam_segment needs s < t")
    c, i = insert_breakpoint(curve, s)
    c, j = insert_breakpoint(c, t)
    chord = float(np.hypot(*(c.pts[j] - c.pts[i])))
    if chord == 0.0:
        raise DegenerateChordError(f"chord over ({s}, {t}) has length zero")
    s, t = float(c.t[i]), float(c.t[j])
    t_plus = s + chord / L
    if t_plus > t + TOL:
        raise NotLipschitzError(f"chord {chord} is longer than L*(t-s) = {L * (t - s)}")
    if t - t_plus <= TOL:
        if j - i == 1:
            return curve, t
        t_plus = t
    new_t = np.concatenate([c.t[: i + 1], [t_plus], t_plus + (c.t[j + 1 :] - c.t[j])])
    new_pts = np.concatenate([c.pts[: i + 1], c.pts[j : j + 1], c.pts[j + 1 :]])
    return PLCurve(new_t, new_pts), t_plus


def concat(left: PLCurve, right: PLCurve) -> PLCurve:
    """Glue two curves whose domains abut and whose end points coincide."""
    if abs(left.t[-1] - right.t[0]) > TOL:
        raise JunctionError(f"domains do not abut: {left.t[-1]} vs {right.t[0]}")
    if np.max(np.abs(left.pts[-1] - right.pts[0])) > TOL:
        raise JunctionError(f"end points differ: {left.pts[-1]} vs {right.pts[0]}")
    return PLCurve(np.concatenate([left.t, right.t[1:]]), np.concatenate([left.pts, right.pts[1:]]))


def restrict(curve: PLCurve, u: float, v: float) -> PLCurve:
    """The curve on ``[u, v]``, with breakpoints inserted at the ends."""
    if not u < v:
        raise DomainError("restrict needs u < v")
    c, i = insert_breakpoint(curve, u)
    c, j = insert_breakpoint(c, v)
    if j <= i:
        raise DomainError(f"interval ({u}, {v}) is shorter than the tolerance")
    return PLCurve(c.t[i : j + 1], c.pts[i : j + 1])


def shift_domain(curve: PLCurve, offset: float) -> PLCurve:
    return PLCurve(curve.t + offset, curve.pts)


def turning_angles(curve: PLCurve) -> np.ndarray:
    """Unsigned turning angle at each interior breakpoint."""
    c = curve.chords
    cross = c[:-1, 0] * c[1:, 1] - c[:-1, 1] * c[1:, 0]
    dot = np.einsum("ij,ij->i", c[:-1], c[1:])
    return np.arctan2(np.abs(cross), dot)


def simplify(curve: PLCurve) -> PLCurve:
    """Drop interior breakpoints across which the velocity does not change."""
    keep = np.r_[True, curve.corner_mask, True]
    if keep.all():
        return curve
    return PLCurve(curve.t[keep], curve.pts[keep])


def sup_distance(a: PLCurve, b: PLCurve, grid_step: float | None = None) -> tuple[float, float]:
    """Maximum of ``|a(x) - b(x)|`` over the common domain and where it occurs.

    Both curves are linear between the union of their breakpoints, so that
    union is enough; grid points are added when ``grid_step`` is given.
    """
    if abs(a.t[0] - b.t[0]) > TOL or abs(a.t[-1] - b.t[-1]) > TOL:
        raise DomainError("sup_distance needs curves on the same domain")
    xs = [a.t, b.t]
    if grid_step:
        n = int(np.ceil(a.domain_length / grid_step))
        xs.append(np.linspace(a.t[0], a.t[-1], n + 1))
    x = np.unique(np.clip(np.concatenate(xs), max(a.t[0], b.t[0]), min(a.t[-1], b.t[-1])))
    d = np.hypot(*(a.eval(x) - b.eval(x)).T)
    k = int(np.argmax(d))
    return float(d[k]), float(x[k])
