"""Measure Lipschitz and inverse-Lipschitz constants of PL curves.

For a PL curve the largest chord/parameter ratio is the largest segment speed.
The smallest ratio is an infimum over pairs of segments.  For each pair it is
computed exactly by :func:`bilipapprox.kernels.pair_min` (boundary of the
parameter rectangle plus a crossing test), so no sampling is involved.  The
``grid_step`` carried by reports is the resolution used for sup-distance
checks and closed-curve sampling; open-curve constants do not depend on it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .curve import PLCurve, insert_breakpoint, turning_angles
from .kernels import pair_min

DEFAULT_SLACK = 1e-6
GRID_DIVISIONS = 2048


def default_grid_step(domain_length: float) -> float:
    """``BILIP_GRID`` if set, else ``domain_length / 2048``."""
    env = os.environ.get("BILIP_GRID")
    if env:
        return float(env)
    return domain_length / GRID_DIVISIONS


@dataclass(frozen=True)
class BiLipReport:
    """Measured extremal ratios with the parameter pairs that realize them."""

    lip_upper: float
    inv_lip_lower: float
    witness_max: tuple[float, float]
    witness_min: tuple[float, float]
    grid_step: float

    @property
    def bilip_constant(self) -> float:
        inv = math.inf if self.inv_lip_lower <= 0 else 1.0 / self.inv_lip_lower
        return max(self.lip_upper, inv, 1.0)

    def passes(self, L: float, slack: float = DEFAULT_SLACK) -> bool:
        return self.lip_upper <= L + slack and self.inv_lip_lower >= 1.0 / L - slack

    def failing_witness(self, L: float, slack: float = DEFAULT_SLACK):
        """The pair that breaks the claim, or ``None`` when it holds."""
        if self.inv_lip_lower < 1.0 / L - slack:
            return self.witness_min
        if self.lip_upper > L + slack:
            return self.witness_max
        return None

    def as_dict(self) -> dict:
        return {
            "lip_upper": self.lip_upper,
            "inv_lip_lower": self.inv_lip_lower,
            "bilip_constant": self.bilip_constant,
            "witness_max": list(self.witness_max),
            "witness_min": list(self.witness_min),
            "grid_step": self.grid_step,
        }


def lipschitz_upper(curve: PLCurve) -> float:
    return float(np.max(curve.speeds))


def _fastest(curve: PLCurve):
    i = int(np.argmax(curve.speeds))
    return float(curve.speeds[i]), (float(curve.t[i]), float(curve.t[i + 1]))


def _slowest(curve: PLCurve, segs=None):
    idx = np.arange(curve.n_segments) if segs is None else np.asarray(segs)
    if idx.size == 0:
        return math.inf, (math.nan, math.nan)
    i = int(idx[np.argmin(curve.speeds[idx])])
    return float(curve.speeds[i]), (float(curve.t[i]), float(curve.t[i + 1]))


def inverse_lipschitz(curve: PLCurve, grid_step: float | None = None):
    """Infimum of ``|f(p) - f(q)| / |p - q|`` and a pair realizing it.

    Returns ``(value, (p, q))``.  The value is 0 when the curve meets itself or
    stalls; that is reported, not raised.
    """
    idx = np.arange(curve.n_segments)
    val, p, q = pair_min(curve.t, curve.pts, idx, idx, True)
    slow, w = _slowest(curve)
    if slow <= val:
        return slow, w
    return val, (p, q)


def inverse_lipschitz_between(curve: PLCurve, segs_a, segs_b, symmetric: bool = False):
    """Same as :func:`inverse_lipschitz` but over segment pairs from two sets."""
    val, p, q = pair_min(curve.t, curve.pts, segs_a, segs_b, symmetric)
    return val, (p, q)


def split_segments(curve: PLCurve, lo: float, hi: float):
    """Insert breakpoints at ``lo`` and ``hi``; return the curve and the index
    arrays of segments inside and outside ``[lo, hi]``."""
    c, i = insert_breakpoint(curve, lo)
    c, j = insert_breakpoint(c, hi)
    inside = np.arange(i, j)
    outside = np.r_[0:i, j : c.n_segments]
    return c, inside, outside


def inverse_lipschitz_mixed(curve: PLCurve, lo: float, hi: float):
    """Infimum of the ratio over pairs with one parameter in ``[lo, hi]`` and
    the other outside it."""
    if hi <= lo:
        return math.inf, (math.nan, math.nan)
    c, inside, outside = split_segments(curve, lo, hi)
    return inverse_lipschitz_between(c, inside, outside)


def measure(curve: PLCurve, grid_step: float | None = None) -> BiLipReport:
    """Both extremal ratios of ``curve`` with witnesses."""
    g = grid_step if grid_step is not None else default_grid_step(curve.domain_length)
    up, wmax = _fastest(curve)
    low, wmin = inverse_lipschitz(curve, g)
    return BiLipReport(up, low, wmax, wmin, g)


def check_bilip(curve: PLCurve, L: float, grid_step: float | None = None, slack: float = DEFAULT_SLACK):
    """Does ``curve`` satisfy the ``L``-biLipschitz inequalities up to ``slack``?

    Returns ``(passed, report)``.
    """
    report = measure(curve, grid_step)
    return report.passes(L, slack), report


def max_turning(L: float) -> float:
    """Largest turning angle an ``L``-biLipschitz curve can have at a corner.

    At a corner with both speeds equal to ``L`` and turning angle ``a`` the
    smallest ratio is ``L cos(a/2)``; requiring it to be at least ``1/L`` gives
    ``a <= pi - 2 asin(1/L**2)``.  Lower speeds only make the ratio smaller, so
    the bound holds at every corner.
    """
    return math.pi - 2.0 * math.asin(min(1.0, 1.0 / (L * L)))


@dataclass(frozen=True)
class CornerViolation:
    index: int
    param: float
    angle: float
    bound: float


def corner_angle_check(curve: PLCurve, L: float, tol: float = 1e-9) -> list[CornerViolation]:
    """Corners whose turning angle exceeds :func:`max_turning` by more than ``tol``."""
    if curve.n_segments < 2:
        return []
    bound = max_turning(L)
    ang = turning_angles(curve)
    bad = np.nonzero(curve.corner_mask & (ang > bound + tol))[0]
    return [CornerViolation(int(k + 1), float(curve.t[k + 1]), float(ang[k]), bound) for k in bad]
