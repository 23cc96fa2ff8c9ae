import math

import numpy as np
import pytest

from bilipapprox.circle import (
    TWO_PI, ChartSpec, ClosedPLCurve, approximate_closed, chart_distortion_holds, check_closed_bilip, choose_eps_prime,
    choose_theta, chord, closed_sup_distance, constant_chain, lift, measure_closed, merge_collinear, place_anchors,
    theta_ratio, theta_residual,
)
from bilipapprox.errors import ChartTooLongError, DomainError
from bilipapprox.testkit import GenSpec, generate, oracle_inverse_lipschitz

# dense oracle at 4096 angles, frozen
NGON64_INV_LIP = 0.9983947845887453


def ngon(n, rx=1.0, ry=1.0):
    a = TWO_PI * np.arange(n) / n
    return ClosedPLCurve(a, np.c_[rx * np.cos(a), ry * np.sin(a)])


def test_chord():
    assert chord(0.0, math.pi) == pytest.approx(2.0)
    assert chord(0.1, TWO_PI + 0.1) == pytest.approx(0.0, abs=1e-15)


def test_closed_curve_validation():
    with pytest.raises(DomainError):
        ClosedPLCurve([0, 1], [[0, 0], [1, 0]])
    with pytest.raises(DomainError):
        ClosedPLCurve([0, 1, 7], [[0, 0], [1, 0], [0, 1]])


def test_eval_wraps():
    c = ngon(6)
    assert np.allclose(c.eval(TWO_PI), c.pts[0])
    assert np.allclose(c.eval(-TWO_PI / 12), 0.5 * (c.pts[0] + c.pts[-1]))


def test_lift_half_polygon():
    c = ngon(64)
    arc = lift(c, 0.0, math.pi)
    assert arc.n_segments == 32
    assert np.allclose(arc.pts, c.pts[:33])


def test_lift_matches_closed_eval(rng):
    c = generate(GenSpec(3, 2.0, 10, closed=True)).curve
    arc = lift(c, 1.0, 4.0)
    x = rng.uniform(1.0, 4.0, 100)
    assert np.allclose(arc.eval(x), c.eval(x), atol=1e-15)


def test_lift_across_seam():
    c = ngon(64)
    arc = lift(c, -0.5, 0.5)
    x = np.linspace(-0.5, 0.5, 301)
    assert np.allclose(arc.eval(x), c.eval(np.mod(x, TWO_PI)), atol=1e-15)
    with pytest.raises(ChartTooLongError):
        lift(c, 0.0, TWO_PI)


def test_choose_theta():
    th = choose_theta(0.01)
    # small-angle estimate sqrt(24 * 0.01) = 0.4899; the exact root is a bit larger
    assert th == pytest.approx(math.sqrt(0.24), abs=1e-3)
    assert th == pytest.approx(0.4906356177080506, abs=1e-12)
    for ep in (0.5, 0.1, 1e-3, 1e-6, 1e-9):
        assert theta_residual(choose_theta(ep), ep) <= 1e-12
    assert choose_theta(1e-12) < 1e-5
    assert theta_ratio(0.0) == 1.0


def test_constants_chain():
    L, eps = 2.0, 0.25
    ep = choose_eps_prime(L, eps)
    chain = constant_chain(L, ep)
    assert len(chain) == 7
    assert all(b > a for a, b in zip(chain, chain[1:]))
    assert chain[-1] <= L + eps / 2
    assert constant_chain(L, 2 * ep)[-1] > L + eps / 2


def test_chart_distortion():
    ep = 0.01
    th = choose_theta(ep)
    ch = ChartSpec(0.3, 0.3 + th, th, ep, 0.3, 0.31, 0.3 + th - 0.01, 0.305, 0.3 + th - 0.005)
    assert chart_distortion_holds(ch)
    wide = ChartSpec(0.3, 0.3 + 3 * th, th, ep, 0.3, 0.31, 0.3, 0.305, 0.3)
    assert not chart_distortion_holds(wide)


def test_measure_ngon_against_oracle():
    c = ngon(64)
    rep = measure_closed(c)
    assert rep.inv_lip_lower == pytest.approx(NGON64_INV_LIP, abs=1e-5)
    assert oracle_inverse_lipschitz(c, 4096) == pytest.approx(NGON64_INV_LIP, abs=1e-15)
    assert rep.lip_upper == pytest.approx(1.0, abs=1e-12)


def test_ngon_constant_tends_to_one():
    vals = [measure_closed(ngon(n)).bilip_constant for n in (16, 32, 64, 128)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] - 1 < 1e-3


@pytest.mark.parametrize("seed", [1, 2, 5, 8])
def test_measure_generated_against_oracle(seed):
    c = generate(GenSpec(seed, 2.0, 12, closed=True)).curve
    rep = measure_closed(c)
    oracle = oracle_inverse_lipschitz(c, 2048)
    assert rep.inv_lip_lower <= oracle + 1e-9
    assert rep.inv_lip_lower == pytest.approx(oracle, abs=1e-3)


def test_place_anchors_cover():
    c = ngon(64)
    th = choose_theta(2.0**-8)
    anchors = place_anchors(c, th)
    gaps = np.diff(np.r_[anchors, anchors[0] + TWO_PI])
    assert np.all(gaps < th)
    assert not np.any(np.isin(anchors, c.angles))


def test_merge_collinear():
    a = TWO_PI * np.arange(8) / 8
    sq = ClosedPLCurve(a, [[1, 0], [0.5, 0.5], [0, 1], [-0.5, 0.5], [-1, 0], [-0.5, -0.5], [0, -1], [0.5, -0.5]])
    assert merge_collinear(sq).n_vertices == 4


def test_ngon_approximation():
    c = ngon(64)
    L = measure_closed(c).bilip_constant * (1 + 1e-6)
    res = approximate_closed(c, L, 0.25)
    assert res.certified
    assert res.sup_distance <= 0.25
    ok, _ = check_closed_bilip(res.curve, L + 0.25)
    assert ok
    assert all(chart_distortion_holds(ch) for ch in res.charts)


def test_ellipse_approximation():
    c = ngon(48, 2.0, 1.0)
    L = measure_closed(c).bilip_constant * (1 + 1e-6)
    res = approximate_closed(c, L, 0.25)
    assert res.certified
    d, _ = closed_sup_distance(res.curve, c)
    assert d <= 0.25


def test_few_vertices_stay_few():
    a = np.array([0, 0.5, 1, 1.5]) * math.pi
    sq = ClosedPLCurve(a, [[1, 0], [0, 1], [-1, 0], [0, -1]])
    L = measure_closed(sq).bilip_constant * (1 + 1e-6)
    res = approximate_closed(sq, L, 1.0)
    assert res.certified
    assert res.curve.n_vertices <= 4 * sq.n_vertices
