"""Seeded generators of biLipschitz PL curves and brute-force oracles.

Generators draw from a Philox stream keyed by the seed, so a ``GenSpec`` always
yields the same curve.  Every curve is accepted only after the measured
check passes at the target constant.  The oracle is deliberately naive: a
double loop over a uniform parameter grid with no refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import PLCurve
from .errors import GenerationError
from .verify import check_bilip, max_turning

MAX_ATTEMPTS = 1000
SHRINK = 0.97


@dataclass(frozen=True)
class GenSpec:
    """What to generate.  ``grid`` > 0 snaps open-curve breakpoints to
    multiples of ``1 / grid`` on ``[0, 1]``."""

    seed: int
    target_L: float
    vertex_count: int
    closed: bool = False
    grid: int = 0

    def __post_init__(self):
        if not self.target_L > 1:
            raise GenerationError("target_L must exceed 1")
        if self.vertex_count < (3 if self.closed else 2):
            raise GenerationError("too few vertices")
        if not 0 <= self.seed < 2**64:
            raise GenerationError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Generated:
    curve: object
    report: object
    attempts: int


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _durations(rng, n: int, grid: int) -> np.ndarray:
    w = rng.uniform(0.5, 1.5, n)
    w /= w.sum()
    if grid:
        units = np.maximum(1, np.round(w * grid).astype(np.int64))
        while units.sum() > grid:
            units[np.argmax(units)] -= 1
        while units.sum() < grid:
            units[np.argmin(units)] += 1
        return units / grid
    return w


def _open_attempt(rng, spec: GenSpec, k: int) -> PLCurve:
    n = spec.vertex_count - 1
    L = spec.target_L
    beta = 0.5 * max_turning(L) * SHRINK**k
    span = math.log(L) * SHRINK**k
    base = rng.uniform(-math.pi, math.pi)
    ang = base + rng.uniform(-beta, beta, n)
    speed = np.exp(rng.uniform(-span, span, n))
    dur = _durations(rng, n, spec.grid)
    t = np.r_[0.0, np.cumsum(dur)]
    t[-1] = 1.0
    steps = (speed * np.diff(t))[:, None] * np.c_[np.cos(ang), np.sin(ang)]
    return PLCurve(t, np.vstack([np.zeros(2), np.cumsum(steps, axis=0)]))


def _closed_attempt(rng, spec: GenSpec, k: int):
    from .circle import ClosedPLCurve

    n = spec.vertex_count
    L = spec.target_L
    jitter = SHRINK**k
    ang = 2 * np.pi * (np.arange(n) + 0.3 * jitter * rng.uniform(-1, 1, n)) / n
    ang = np.sort(np.mod(ang - ang[0], 2 * np.pi))
    if spec.seed % 2:
        ratio = math.exp(rng.uniform(0, math.log(L)) * jitter)
        rx, ry = math.sqrt(ratio), 1.0 / math.sqrt(ratio)
        rad = 1.0 + 0.1 * jitter * rng.uniform(-1, 1, n)
    else:
        rx = ry = 1.0
        rad = 1.0 + 0.15 * jitter * rng.uniform(-1, 1, n)
    pts = np.c_[rx * rad * np.cos(ang), ry * rad * np.sin(ang)]
    return ClosedPLCurve(ang, pts)


def generate(spec: GenSpec) -> Generated:
    """Rejection-sample until the measured check passes at ``target_L`` with
    zero slack.  Turning and speed ranges shrink with each rejection."""
    rng = _rng(spec.seed)
    if spec.closed:
        from .circle import check_closed_bilip

    for k in range(MAX_ATTEMPTS):
        if spec.closed:
            curve = _closed_attempt(rng, spec, k)
            ok, rep = check_closed_bilip(curve, spec.target_L, slack=0.0)
        else:
            curve = _open_attempt(rng, spec, k)
            ok, rep = check_bilip(curve, spec.target_L, slack=0.0)
        if ok:
            return Generated(curve, rep, k + 1)
    raise GenerationError(f"no {spec.target_L}-biLipschitz curve after {MAX_ATTEMPTS} attempts")


def gen_bilip_curve(spec: GenSpec):
    """A seeded ``target_L``-biLipschitz PL curve (open or closed)."""
    return generate(spec).curve


def oracle_inverse_lipschitz(curve, resolution: int) -> float:
    """Smallest chord/parameter ratio over all pairs of a uniform grid.

    Open curves use ``resolution`` points on the domain and the parameter
    difference.  Closed curves use ``resolution`` angles in ``[0, 2 pi)`` and
    the chord distance on the unit circle.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    closed = not isinstance(curve, PLCurve)
    if closed:
        u = 2 * np.pi * np.arange(resolution) / resolution
    else:
        u = np.linspace(curve.t[0], curve.t[-1], resolution)
    P = curve.eval(u)
    best = math.inf
    for a in range(resolution - 1):
        d = np.hypot(*(P[a + 1 :] - P[a]).T)
        gap = u[a + 1 :] - u[a]
        if closed:
            gap = 2.0 * np.abs(np.sin(0.5 * gap))
        best = min(best, float(np.min(d / gap)))
    return best


def oracle_lipschitz(curve, resolution: int) -> float:
    """Largest chord/parameter ratio over consecutive grid points (open curves)."""
    u = np.linspace(curve.t[0], curve.t[-1], resolution)
    P = curve.eval(u)
    return float(np.max(np.hypot(*np.diff(P, axis=0).T) / np.diff(u)))


def right_angle(unit: float = 1.0) -> PLCurve:
    """Unit-speed right angle: ``(0, 0) -> (u, 0) -> (u, u)`` on ``[0, 2u]``."""
    return PLCurve([0.0, unit, 2 * unit], [[0, 0], [unit, 0], [unit, unit]])


def semicircle_polygon(n: int = 64) -> PLCurve:
    """``n`` equal chords of the unit upper semicircle at constant speed, on ``[0, pi]``."""
    a = np.linspace(0.0, np.pi, n + 1)
    return PLCurve(a, np.c_[np.cos(a), np.sin(a)])


def padded(curve: PLCurve, pad: float) -> PLCurve:
    """``curve`` on ``[0, 1]`` shrunk into ``[pad, 1 - pad]`` with straight
    end pieces of length ``pad`` continuing the first and last segments."""
    t = pad + (1 - 2 * pad) * (curve.t - curve.t[0]) / curve.domain_length
    v0 = curve.velocities[0] / (1 - 2 * pad) * curve.domain_length
    v1 = curve.velocities[-1] / (1 - 2 * pad) * curve.domain_length
    pts = np.vstack([curve.pts[0] - pad * v0, curve.pts, curve.pts[-1] + pad * v1])
    return PLCurve(np.r_[0.0, t, 1.0], pts)
