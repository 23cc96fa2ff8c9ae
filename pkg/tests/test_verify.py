import math

import numpy as np
import pytest

from bilipapprox import kernels
from bilipapprox.curve import PLCurve
from bilipapprox.testkit import GenSpec, generate, oracle_inverse_lipschitz, semicircle_polygon
from bilipapprox.verify import (
    check_bilip, corner_angle_check, inverse_lipschitz, inverse_lipschitz_mixed, lipschitz_upper, max_turning,
    measure,
)

SQRT2 = math.sqrt(2)


def test_lipschitz_upper(ra, straight2):
    assert lipschitz_upper(straight2) == 2.0
    assert lipschitz_upper(ra) == 1.0
    c = PLCurve([0, 1, 2, 3], [[0, 0], [1, 0], [1, 3], [1.5, 3]])
    assert lipschitz_upper(c) == 3.0


def test_inverse_lipschitz_examples(ra, straight2):
    assert inverse_lipschitz(straight2)[0] == pytest.approx(2.0)
    val, (p, q) = inverse_lipschitz(ra)
    assert val == pytest.approx(1 / SQRT2, abs=1e-12)
    assert (p, q) == pytest.approx((0.0, 2.0))
    val, _ = inverse_lipschitz(semicircle_polygon(64))
    assert val == pytest.approx(2 / math.pi, abs=1e-3)


def test_degenerate_vertex_is_reported():
    stall = PLCurve([0, 1, 2], [[0, 0], [1, 0], [1, 0]])
    val, _ = inverse_lipschitz(stall)
    assert val == 0.0
    ok, rep = check_bilip(stall, 10.0)
    assert not ok and rep.failing_witness(10.0) is not None


def test_self_intersection_gives_zero():
    c = PLCurve([0, 1, 2, 3], [[0, 0], [2, 0], [1, 1], [1, -1]])
    assert inverse_lipschitz(c)[0] == pytest.approx(0.0, abs=1e-12)


def test_check_bilip_examples(ra, straight2):
    ok, _ = check_bilip(ra, SQRT2)
    assert ok
    ok, rep = check_bilip(ra, 1.2)
    assert not ok
    assert rep.failing_witness(1.2) == pytest.approx((0.0, 2.0))
    ok, _ = check_bilip(straight2, 2.0, slack=0.0)
    assert ok


def test_report_fields(ra):
    rep = measure(ra)
    assert rep.bilip_constant == pytest.approx(SQRT2)
    d = rep.as_dict()
    assert set(d) >= {"lip_upper", "inv_lip_lower", "bilip_constant", "witness_min"}


def test_mixed_pairs(ra):
    val, (p, q) = inverse_lipschitz_mixed(ra, 1.5, 2.0)
    # pairs with one end in [1.5, 2] and the other in [0, 1.5]
    assert val == pytest.approx(1 / SQRT2, abs=1e-12)
    assert 1.5 <= max(p, q) <= 2.0


def test_corner_law(ra):
    assert max_turning(SQRT2) == pytest.approx(2 * math.pi / 3)
    assert corner_angle_check(ra, SQRT2) == []
    back = PLCurve([0, 1, 2], [[0, 0], [2, 0], [0, 0]])
    assert len(corner_angle_check(back, 100.0)) == 1
    assert corner_angle_check(PLCurve([0, 1], [[0, 0], [1, 1]]), 1.5) == []


def _random_curve(rng, n):
    t = np.cumsum(np.r_[0.0, rng.uniform(0.2, 1.0, n)])
    P = np.cumsum(rng.normal(size=(n + 1, 2)), axis=0)
    return PLCurve(t, P)


def test_compiled_and_python_kernels_agree(rng):
    for _ in range(100):
        c = _random_curve(rng, int(rng.integers(2, 12)))
        idx = np.arange(c.n_segments)
        a = kernels.pair_min(c.t, c.pts, idx, idx, True)
        b = kernels.pair_min_python(c.t, c.pts, idx, idx, True)
        assert a[0] == pytest.approx(b[0], rel=1e-12, abs=1e-15)


def test_exact_value_never_above_dense_brute_force(rng):
    for _ in range(30):
        c = _random_curve(rng, int(rng.integers(2, 7)))
        val, (p, q) = inverse_lipschitz(c)
        x = np.linspace(c.t[0], c.t[-1], 700)
        F = c.eval(x)
        i, j = np.triu_indices(x.size, 1)
        brute = np.min(np.hypot(*(F[j] - F[i]).T) / (x[j] - x[i]))
        assert val <= brute + 1e-12
        if val > 0 and p != q:
            assert np.hypot(*(c.eval(q) - c.eval(p))) / abs(q - p) == pytest.approx(val, rel=1e-9)


def test_agrees_with_oracle_on_grid_curve():
    g = generate(GenSpec(3, 2.0, 9, grid=4096)).curve
    assert inverse_lipschitz(g)[0] == pytest.approx(oracle_inverse_lipschitz(g, 4097), abs=1e-6)


# Three nearly collinear segments; the float line-intersection test wrongly
# reports that the first and last cross.
NEAR_PARALLEL_T = [0.8635299995249174, 1.0487429340069887, 1.0487437896166958, 1.0487473717112084]
NEAR_PARALLEL_P = [[0.6873771571023316, 0.5837626956413019], [0.5199100980576851, 0.683151809034041],
                   [0.5199085798624659, 0.6831527100594585], [0.519902223206589, 0.6831564826365573]]


def test_near_parallel_segments_do_not_cross():
    c = PLCurve(NEAR_PARALLEL_T, NEAR_PARALLEL_P)
    for kernel in (kernels.pair_min, kernels.pair_min_python):
        val, _, _ = kernel(c.t, c.pts, np.array([0]), np.array([2]), False)
        assert val > 1.0
    assert inverse_lipschitz(c)[0] > 1.0


def test_proper_crossing_found_by_both_kernels():
    c = PLCurve([0, 1, 2, 3], [[0, 0], [2, 0], [1, 1], [1, -1]])
    for kernel in (kernels.pair_min, kernels.pair_min_python):
        val, p, q = kernel(c.t, c.pts, np.array([0]), np.array([2]), False)
        assert val == 0.0 and (p, q) == pytest.approx((0.5, 2.5))
