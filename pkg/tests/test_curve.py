import math

import numpy as np
import pytest

from bilipapprox.curve import (
    PLCurve, arclength, concat, evaluate, fast_reparam_segment, insert_breakpoint, restrict,
    segment_replace, shift_domain, simplify, speed, sup_distance, turning_angles,
)
from bilipapprox.errors import DegenerateChordError, DomainError, JunctionError, NotLipschitzError
from bilipapprox.testkit import right_angle


def test_eval_midpoints(ra, straight2):
    assert np.allclose(evaluate(straight2, 0.5), [1.0, 0.0])
    assert np.allclose(evaluate(ra, 1.5), [1.0, 0.5])


def test_eval_at_breakpoints_is_exact(rng):
    t = np.cumsum(np.r_[0.0, rng.uniform(0.1, 1.0, 9)])
    pts = rng.normal(size=(10, 2))
    c = PLCurve(t, pts)
    assert np.array_equal(c.eval(t), pts)


def test_speeds(ra, straight2):
    assert speed(straight2, 0) == 2.0
    assert speed(ra, 1) == 1.0
    stall = PLCurve([0, 1, 2], [[0, 0], [1, 0], [1, 0]])
    assert speed(stall, 1) == 0.0


def test_arclength(ra, straight2):
    assert arclength(ra, 0, 2) == pytest.approx(2.0)
    assert arclength(straight2, 0, 1) == pytest.approx(2.0)
    assert arclength(ra, 0.5, 1.5) == pytest.approx(1.0)


def test_rejects_bad_breakpoints():
    with pytest.raises(DomainError):
        PLCurve([0, 1, 1], [[0, 0], [1, 0], [2, 0]])
    with pytest.raises(DomainError):
        PLCurve([0, 1], [[0, 0], [1, 0], [2, 0]])


def test_segment_replace_right_angle(ra):
    out = segment_replace(ra, 0.5, 1.5)
    assert np.allclose(out.t, [0, 0.5, 1.5, 2])
    assert np.allclose(out.pts, [[0, 0], [0.5, 0], [1, 0.5], [1, 1]])


def test_segment_replace_trivial_cases(ra, straight2):
    assert segment_replace(straight2, 0.2, 0.7).same_as(straight2)
    assert segment_replace(ra, 1, 1) is ra


def test_fast_reparam_right_angle(ra):
    out, t_plus = fast_reparam_segment(ra, 0, 2, math.sqrt(2))
    assert t_plus == pytest.approx(1.0, abs=1e-15)
    assert out.n_segments == 1
    assert np.allclose(out.pts, [[0, 0], [1, 1]])
    assert out.speeds[0] == pytest.approx(math.sqrt(2), abs=1e-12)


def test_fast_reparam_trivial_cases():
    line = PLCurve([0, 1], [[0, 0], [2, 0]])
    out, t_plus = fast_reparam_segment(line, 0.25, 0.75, 2.0)
    assert out is line and t_plus == 0.75
    unit = PLCurve([0, 1], [[0, 0], [1, 0]])
    out, t_plus = fast_reparam_segment(unit, 0, 1, 2.0)
    assert t_plus == 0.5 and out.domain == (0.0, 0.5)


def test_fast_reparam_errors(ra):
    loop = PLCurve([0, 1, 2], [[0, 0], [1, 0], [0, 0]])
    with pytest.raises(DegenerateChordError):
        fast_reparam_segment(loop, 0, 2, 2.0)
    with pytest.raises(NotLipschitzError):
        fast_reparam_segment(ra, 0, 2, 0.5)


def test_restrict_concat_shift(ra):
    seg = restrict(ra, 0, 1)
    assert seg.n_segments == 1 and np.allclose(seg.pts, [[0, 0], [1, 0]])
    assert concat(restrict(ra, 0, 1), restrict(ra, 1, 2)).same_as(ra)
    moved = shift_domain(ra, 1.0)
    x = np.linspace(0, 2, 17)
    assert np.allclose(moved.eval(x + 1), ra.eval(x))
    with pytest.raises(JunctionError):
        concat(restrict(ra, 0, 1), shift_domain(restrict(ra, 1, 2), 0.5))


def test_insert_breakpoint_snaps(ra):
    c, k = insert_breakpoint(ra, 1.0 + 1e-14)
    assert c is ra and k == 1
    c, k = insert_breakpoint(ra, 0.5)
    assert c.t.tolist() == [0, 0.5, 1, 2] and k == 1


def test_turning_and_simplify(ra):
    assert turning_angles(ra) == pytest.approx([math.pi / 2])
    line = PLCurve([0, 1, 3], [[0, 0], [1, 1], [3, 3]])
    assert simplify(line).n_segments == 1


def test_sup_distance(ra):
    d, where = sup_distance(ra, segment_replace(ra, 0, 2))
    assert d == pytest.approx(math.sqrt(2) / 2)
    assert where == pytest.approx(1.0)
