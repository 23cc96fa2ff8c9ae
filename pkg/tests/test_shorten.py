import math

import numpy as np
import pytest

from bilipapprox.curve import PLCurve, fast_reparam_segment
from bilipapprox.errors import PreconditionError, WouldExpandError
from bilipapprox.shorten import (
    corner_candidates, direction_estimates, discrete_smoothness, dyadic_candidates, fit_delta_bar,
    grid_schedule, is_fast, shorten, speed_L_reparam, straightening_step,
)
from bilipapprox.verify import check_bilip, inverse_lipschitz_mixed

SQRT2 = math.sqrt(2)


def timed(pts, speeds):
    """PL curve through ``pts`` with the given speed on each segment."""
    pts = np.asarray(pts, dtype=float)
    lengths = np.hypot(*np.diff(pts, axis=0).T)
    return PLCurve(np.r_[0.0, np.cumsum(lengths / np.asarray(speeds, dtype=float))], pts)


def hairpin(gap=0.1, L=6.0):
    """A tent on ``[0, b]`` followed by a loop that ends ``gap`` below the tent's chord."""
    return timed([[0, 0], [1, 1], [2, 0], [2, -0.5], [1, -0.5], [1, -gap]], [1, 1, L, 1, 1])


def test_speed_L_reparam_examples(ra):
    out, bp = speed_L_reparam(ra, 0, 2, SQRT2)
    assert bp == pytest.approx(SQRT2)
    assert np.allclose(out.speeds, SQRT2)
    assert np.array_equal(out.pts, ra.pts)
    line = PLCurve([0, 1], [[0, 0], [2, 0]])
    assert speed_L_reparam(line, 0, 1, 2.0) == (line, 1.0)
    unit = PLCurve([0, 1], [[0, 0], [1, 0]])
    assert speed_L_reparam(unit, 0, 1, 2.0)[1] == 0.5
    with pytest.raises(WouldExpandError):
        speed_L_reparam(line, 0, 1, 1.5)


def test_is_fast_examples(ra):
    out, bp = speed_L_reparam(ra, 0, 2, SQRT2)
    cert = is_fast(out, 0, bp, SQRT2, b=2.0)
    assert cert.passed
    assert cert.mild_value == math.inf  # nothing outside [a, b']
    slow = PLCurve([0, 0.5, 1.5, 2], [[0, 0], [1, 0], [2, 0], [3, 0]])
    assert is_fast(slow, 0, 2, 2.0).speed_dev > 0
    assert not is_fast(slow, 0, 2, 2.0).passed
    assert is_fast(slow, 1.0, 1.0, 2.0).passed


def test_mild_value_matches_mixed_brute_force():
    c = hairpin()
    L = 6.0
    psi, bp = speed_L_reparam(c, 0, c.t[2], L)
    cert = is_fast(psi, 0, bp, L)
    x_in = np.linspace(0, bp, 400)
    x_out = np.linspace(bp, psi.t[-1], 1200)
    F, G = psi.eval(x_in), psi.eval(x_out)
    D = np.hypot(F[:, None, 0] - G[None, :, 0], F[:, None, 1] - G[None, :, 1])
    T = np.abs(x_in[:, None] - x_out[None, :])
    brute = np.min(np.where(T > 0, D / np.where(T > 0, T, 1), np.inf))
    assert cert.mild_value <= brute + 1e-12
    assert cert.mild_value == pytest.approx(inverse_lipschitz_mixed(psi, 0, bp)[0])


def test_whole_domain_step_accepts(ra):
    psi, bp = speed_L_reparam(ra, 0, 2, SQRT2)
    res = straightening_step(psi, 0, bp, 0, bp, SQRT2)
    assert res.accepted
    assert res.curve.n_segments == 1
    assert res.s_plus == pytest.approx(1.0, abs=1e-12)


def test_hairpin_step_rejected_with_witness():
    c = hairpin()
    psi, bp = speed_L_reparam(c, 0, c.t[2], 6.0)
    res = straightening_step(psi, 0, bp, 0, bp, 6.0)
    assert not res.accepted and res.witness is not None
    assert res.ratio < 1 / 6.0
    # the witness realizes the ratio on the straightened candidate
    cand, _ = fast_reparam_segment(psi, 0, bp, 6.0)
    p, q = res.witness
    assert np.hypot(*(cand.eval(q) - cand.eval(p))) / abs(q - p) == pytest.approx(res.ratio, rel=1e-9)


def test_straight_step_is_identity():
    line = PLCurve([0, 1], [[0, 0], [2, 0]])
    res = straightening_step(line, 0, 1, 0.25, 0.75, 2.0)
    assert res.accepted and res.curve is line and res.s_plus == 0.75


def test_shorten_right_angle_single_segment(ra):
    out, cert, trace = shorten(ra, 0, 2, SQRT2)
    assert out.n_segments == 1
    assert cert.b_prime == pytest.approx(0 + SQRT2 / SQRT2, abs=1e-12)
    assert cert.passed
    assert discrete_smoothness(out, 0, cert.b_prime) == 0.0


def test_shorten_straight_is_identity():
    line = PLCurve([0, 1], [[0, 0], [2, 0]])
    out, cert, _ = shorten(line, 0, 1, 2.0)
    assert out.same_as(line) and cert.b_prime == 1.0


def test_shorten_blocked_by_external_point():
    c = hairpin()
    b = c.t[2]
    out, cert, trace = shorten(c, 0, b, 6.0)
    assert cert.passed
    assert 0 + b / 36 < cert.b_prime < b
    assert out.n_segments > c.n_segments - 1  # not collapsed to a single chord
    assert trace.rejected and trace.accepted
    ok, _ = check_bilip(out, 6.0)
    assert ok


def test_shorten_needs_speed_L_outside():
    c = timed([[0, 0], [1, 1], [2, 0], [3, 0]], [1, 1, 1])
    with pytest.raises(PreconditionError):
        shorten(c, 0, c.t[2], 2.0)


def test_dyadic_candidates_order():
    cands = list(dyadic_candidates(0.0, 1.0, 0.25))
    assert cands[0] == (0.0, 1.0)
    assert cands[1:4] == [(0.0, 0.5), (0.5, 1.0), (0.25, 0.75)]
    assert all(s - r >= 0.25 for r, s in cands)


def test_shorten_hairpin_idempotent():
    c = hairpin(gap=0.05)
    b = c.t[2]
    out, cert, _ = shorten(c, 0, b, 6.0)
    again, cert2, trace2 = shorten(out, 0, cert.b_prime, 6.0, b / 64)
    assert again.same_as(out) and cert2.b_prime == cert.b_prime
    assert not trace2.accepted


def test_shorten_smoothness_does_not_grow_with_refinement():
    c = hairpin(gap=0.05)
    b = c.t[2]
    angles = []
    for g in (b / 64, b / 128, b / 256):
        out, cert, _ = shorten(c, 0, b, 6.0, g)
        assert cert.passed
        angles.append(discrete_smoothness(out, 0, cert.b_prime))
    assert angles[1] <= angles[0] and angles[2] <= angles[1]


def test_grid_schedule_nests():
    outer = grid_schedule(0.0, 1.0, 1 / 256)
    assert outer == [1 / 64, 1 / 128, 1 / 256]
    assert grid_schedule(0.0, 1.0, 1 / 512) == outer + [1 / 512]
    assert grid_schedule(0.0, 1.0, 0.5) == [0.5]
    assert grid_schedule(0.0, 1.0, 0.01) == [0.01]


def test_corner_candidates_centred_and_clipped(ra):
    cands = list(corner_candidates(ra, 0.0, 2.0, [0.5, 2.0]))
    assert cands == [(0.5, 1.5), (0.0, 2.0)]
    assert list(corner_candidates(ra, 0.0, 1.0, [0.5])) == []  # corner on the window edge
    assert list(corner_candidates(PLCurve([0, 1], [[0, 0], [1, 0]]), 0.0, 1.0, [0.1])) == []


def test_direction_estimates():
    d = direction_estimates([0, 0], [1, 0], [1, 0.01], 1.0, 0.1, 2.0)
    assert d.residual1 == pytest.approx(math.atan(0.01) - 0.1 / 4)
    assert d.residual1 < 0
    line = direction_estimates([0, 0], [1, 0], [1.5, 0], 1.0, 0.1, 2.0)
    assert (line.theta == line.nu).all()
    assert line.residual2_lo == pytest.approx(-0.1 / 4) and line.residual2_hi == pytest.approx(-0.1 / 4)
    tiny = direction_estimates([0, 0], [1, 0], [1 + 1e-9, 0], 1.0, 0.1, 2.0)
    assert tiny.residual1 == pytest.approx(-0.1 / 4)
    assert fit_delta_bar(1.0, 0.1, 2.0) > 0


def test_discrete_smoothness(ra):
    assert discrete_smoothness(PLCurve([0, 1], [[0, 0], [1, 0]]), 0, 1) == 0.0
    assert discrete_smoothness(ra, 0, 2) == pytest.approx(math.pi / 2)
