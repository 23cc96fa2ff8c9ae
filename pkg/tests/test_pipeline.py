import math

import numpy as np
import pytest

from bilipapprox.budget import ConstantBudget, choose_constants
from bilipapprox.curve import PLCurve, restrict, sup_distance
from bilipapprox.errors import PreconditionError
from bilipapprox.pipeline import (
    approximate, approximate_pinned, corner_violations, pl_sample_c1, rescale, shorten_bad_intervals, speedup,
)
from bilipapprox.testkit import GenSpec, generate, padded, right_angle
from bilipapprox.timechange import TimeChange
from bilipapprox.verify import measure

SQRT2 = math.sqrt(2)


def timed(pts, speeds):
    pts = np.asarray(pts, dtype=float)
    lengths = np.hypot(*np.diff(pts, axis=0).T)
    return PLCurve(np.r_[0.0, np.cumsum(lengths / np.asarray(speeds, dtype=float))], pts)


def test_speedup_identity_without_bad_intervals(ra):
    b = choose_constants(SQRT2 * 1.001, 0.25)
    out, tau = speedup(ra, [(0.0, 2.0)], b, SQRT2)
    assert out is ra and tau(1.3) == 1.3


def test_speedup_strip_shrink():
    c = PLCurve([0, 0.4, 0.5, 0.6, 1], [[0, 0], [0.4, 0], [0.5, 0.1], [0.6, 0], [1, 0]])
    b = ConstantBudget(1.9, 1.0, 0.1, 2.0**-6, 1, 0.01, 1e-7)
    out, tau = speedup(c, [(0.0, 0.4), (0.6, 1.0)], b, 1.9)
    # both strips run at speed 2 instead of 1: 2 * 0.01 * (1 - 1/2)
    assert c.domain_length - out.domain_length == pytest.approx(0.01)
    assert np.all(tau.slopes <= 1.0)
    x = np.linspace(0, 1, 101)
    assert np.allclose(out.eval(tau(x)), c.eval(x))


def test_shorten_bad_interval_right_angle():
    L = 2.0
    c = timed([[-1, 0], [0, 0], [1, 0], [1, 1], [1, 2]], [L, 1, 1, L])
    b = choose_constants(L, 0.25)
    phi3, tau_t, smooth, records = shorten_bad_intervals(c, [(c.t[1], c.t[3])], L, b)
    lo, hi = smooth[0]
    seg = restrict(phi3, lo, hi)
    assert seg.n_segments == 1
    assert hi - lo == pytest.approx(SQRT2 / L)
    assert tau_t(c.t[-1]) == pytest.approx(phi3.t[-1])


def test_shorten_order_does_not_matter():
    L = 2.0
    pts = [[0, 0], [1, 0], [1.5, 0.4], [2, 0], [3, 0], [3.5, -0.4], [4, 0], [5, 0]]
    c = timed(pts, [L, 1, 1, L, 1, 1, L])
    b = choose_constants(L, 0.25)
    bad = [(c.t[1], c.t[3]), (c.t[4], c.t[6])]
    left = shorten_bad_intervals(c, bad, L, b, "ltr")[0]
    right = shorten_bad_intervals(c, bad, L, b, "rtl")[0]
    assert left.domain == pytest.approx(right.domain)
    x = np.linspace(*left.domain, 513)
    assert np.allclose(left.eval(x), right.eval(x), atol=1e-12)


def test_pl_sample_untouched_and_empty(ra):
    b = choose_constants(2.0, 0.25)
    out, counts = pl_sample_c1(ra, [], 2.0, b)
    assert out is ra and counts == []
    out, counts = pl_sample_c1(ra, [(0.0, 1.0)], 2.0, b)
    assert out is ra and counts == [0]


def test_quarter_circle_sampling_approaches_arc_constant():
    L = 2.0
    fine = np.linspace(0, math.pi / 2, 4097)
    arc = PLCurve(fine / L, np.c_[np.cos(fine), np.sin(fine)])
    limit = measure(arc).bilip_constant
    gaps = []
    for k in (4, 8, 16):
        a = np.linspace(0, math.pi / 2, k + 1)
        poly = PLCurve(a / L, np.c_[np.cos(a), np.sin(a)])
        gaps.append(abs(measure(poly).bilip_constant - limit))
    assert gaps[0] > gaps[1] > gaps[2]


def test_rescale():
    c = generate(GenSpec(1, 2.0, 8)).curve
    assert rescale(c, 1.0) is c
    short = PLCurve(c.t * 0.99, c.pts)
    out = rescale(short, 0.99)
    assert out.domain == (0.0, 1.0)
    r4, r = measure(short), measure(out)
    assert r.lip_upper == pytest.approx(0.99 * r4.lip_upper)
    assert r.inv_lip_lower == pytest.approx(0.99 * r4.inv_lip_lower)
    assert r.lip_upper <= r4.lip_upper / 0.99


def test_straight_segment_unchanged():
    line = PLCurve([0, 1], [[0, 0], [1, 0]])
    res = approximate(line, 1 + 1e-9, 0.25)
    assert res.certified and res.curve.same_as(line)


def test_right_angle_certifies():
    ra01 = PLCurve([0, 0.5, 1], [[0, 0], [0.5, 0], [0.5, 0.5]])
    L = SQRT2 * (1 + 1e-9)
    res = approximate(ra01, L, 0.25)
    assert res.certified
    assert res.sup_distance <= 0.25
    assert res.curve.n_segments < 10**6
    assert corner_violations(res) == []


def test_random_curve_23():
    g = generate(GenSpec(23, 2.3, 20))
    res = approximate(g.curve, 2.3, 0.2)
    assert res.certified
    assert res.report.passes(2.5, 1e-6)
    assert np.array_equal(res.curve.pts[0], g.curve.pts[0])
    assert np.array_equal(res.curve.pts[-1], g.curve.pts[-1])


def test_stage_bookkeeping():
    g = generate(GenSpec(4, 2.0, 15))
    res = approximate(g.curve, 2.0, 0.25)
    xi = res.budget.xi
    assert 1 - xi <= res.C <= 1 and 1 - 2 * xi <= res.C_prime <= 1
    assert set(res.stages) == {"phi1", "phi2", "phi3", "phi4", "tau", "tau_tilde"}
    assert isinstance(res.stages["tau"], TimeChange)
    curve, report, budget = res
    assert curve is res.curve


def test_rejects_input_above_L(ra):
    with pytest.raises(PreconditionError):
        approximate(ra, 1.2, 0.25)


def test_pinned_right_angle():
    c = padded(right_angle(0.5), 0.1)
    L = SQRT2 * (1 + 1e-7)
    for a_prime in (0.05, 0.099):
        res = approximate_pinned(c, L, 0.25, 0.1, a_prime)
        assert res.certified
        for lo, hi in ((0.0, a_prime), (1 - a_prime, 1.0)):
            assert restrict(res.curve, lo, hi).same_as(restrict(c, lo, hi))


def test_pinned_junction_leaves_no_sliver():
    # a mapped breakpoint lands one ulp from the junction at 0.9 for this curve
    c = padded(generate(GenSpec(24, 1.5, 10 + (24 * 7) % 31)).curve, 0.1)
    L = measure(c).bilip_constant * (1 + 1e-9)
    res = approximate_pinned(c, L, 0.25, 0.1, 0.05)
    assert res.certified
    assert np.min(np.diff(res.curve.t)) > 1e-9


def test_pinned_needs_linear_ends():
    c = PLCurve([0, 0.2, 2], [[0, 0], [0.2, 0], [0.2, 1.8]])
    with pytest.raises(PreconditionError):
        approximate_pinned(c, 20.0, 0.25, 0.5, 0.25)


def test_long_domain():
    c = PLCurve([0, 1, 2], [[0, 0], [1, 0], [1, 1]])
    res = approximate(c, SQRT2 * (1 + 1e-9), 0.25)
    assert res.certified and res.curve.domain == (0.0, 2.0)


def test_global_linear_pinned_is_identity():
    line = PLCurve([0, 1], [[0, 0], [1, 1]])
    res = approximate_pinned(line, 1.5, 0.25, 0.1, 0.05)
    assert res.certified and res.curve.same_as(line)
    d, _ = sup_distance(res.curve, line)
    assert d == 0.0
