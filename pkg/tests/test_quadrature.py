import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biewos.errors import QuadratureError
from biewos.greens import HemisphereFrame
from biewos.quadrature import cap_rule, gauss_legendre, polar_rule, ring_rule, tri_rule


def test_small_rules():
    g1 = gauss_legendre(1)
    assert g1.nodes.tolist() == [0.0] and g1.weights.tolist() == [2.0]
    g2 = gauss_legendre(2)
    assert np.allclose(g2.nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    assert np.allclose(g2.weights, [1, 1], atol=1e-15)
    g3 = gauss_legendre(3)
    assert np.sum(g3.weights * g3.nodes ** 4) == pytest.approx(0.4, abs=1e-15)


@pytest.mark.parametrize("n", [1, 5, 17, 40, 64])
def test_matches_numpy(n):
    g = gauss_legendre(n)
    x, w = np.polynomial.legendre.leggauss(n)
    assert np.allclose(g.nodes, x, atol=1e-14) and np.allclose(g.weights, w, atol=1e-14)
    assert np.all(np.diff(g.nodes) > 0) and np.all(g.weights > 0)
    assert g.weights.sum() == pytest.approx(2.0, abs=1e-14)


@pytest.mark.parametrize("n", range(2, 11))
def test_degree_exactness(n):
    g = gauss_legendre(n)
    for d in range(2 * n):
        exact = 0.0 if d % 2 else 2.0 / (d + 1)
        assert np.sum(g.weights * g.nodes ** d) == pytest.approx(exact, abs=1e-13)


@pytest.mark.parametrize("n", [0, 65])
def test_order_out_of_range(n):
    with pytest.raises(QuadratureError):
        gauss_legendre(n)


def test_cap_rule():
    fr = HemisphereFrame(np.zeros(3), 1.0)
    r = cap_rule(fr, 20)
    assert r.weights.sum() == pytest.approx(2 * math.pi, rel=1e-8)
    g = gauss_legendre(20)
    assert np.allclose(np.unique(r.theta), np.sort(math.pi / 4 * (g.nodes + 1)))
    fr2 = HemisphereFrame(np.array([1.0, 0, 0]), 0.5, np.array([0, 1.0, 0]))
    r2 = cap_rule(fr2, 30)
    cos_t = (r2.points - fr2.center) @ fr2.axis / 0.5
    assert np.sum(r2.weights * cos_t) == pytest.approx(math.pi * 0.25, rel=1e-10)
    with pytest.raises(QuadratureError):
        cap_rule(fr, 1)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5), st.floats(1e-6, 0.9), st.integers(2, 30))
def test_ring_rule_area(a, frac, n):
    r = ring_rule(a, frac * a, n)
    assert r.weights.sum() == pytest.approx(math.pi * (a * a - (frac * a) ** 2), rel=1e-10)
    assert r.rho.min() >= frac * a


def test_ring_rule_errors():
    with pytest.raises(QuadratureError):
        ring_rule(1.0, 1.0, 4)
    with pytest.raises(QuadratureError):
        ring_rule(1.0, 0.1, 4, radial_scale="log")


def test_tri_rule_degree():
    rule = tri_rule(4)
    u, v = rule.bary[:, 1], rule.bary[:, 2]
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
    # int_T u^p v^q = p! q! / (p + q + 2)!
    for p in range(4):
        for q in range(4 - p):
            exact = math.factorial(p) * math.factorial(q) / math.factorial(p + q + 2)
            assert np.sum(rule.weights * u ** p * v ** q) == pytest.approx(exact, rel=1e-13)


def test_tri_rule_on_physical_triangle():
    verts = np.array([[0, 0, 0], [2.0, 0, 0], [0, 1.0, 1.0]])
    pts, w = tri_rule(3).on(verts)
    assert w.sum() == pytest.approx(0.5 * np.linalg.norm(np.cross(verts[1], verts[2])), rel=1e-14)


def test_polar_rule_one_over_r_from_vertex():
    verts = np.array([[0.0, 0, 0], [1.0, 0, 0], [0, 1.0, 0]])
    pr = polar_rule(verts, verts[0], 20)
    val = np.sum(pr.weights / pr.r)
    # int_0^{pi/2} d alpha / (cos alpha + sin alpha)
    assert val == pytest.approx(math.sqrt(2) * math.log(1 + math.sqrt(2)), rel=1e-6)


def test_polar_rule_interior_point_against_refinement():
    verts = np.array([[0.0, 0, 0], [1.0, 0, 0], [0.3, 0.8, 0]])
    x = np.array([0.4, 0.25, 0.0])
    pr = polar_rule(verts, x, 20)
    val = np.sum(pr.weights / pr.r)
    # oracle: split into many small sub-triangles, each integrated by its own polar rule
    ref = 0.0
    for k in range(3):
        a, b = verts[k], verts[(k + 1) % 3]
        for j in range(40):
            p, q = a + (b - a) * j / 40, a + (b - a) * (j + 1) / 40
            sub = polar_rule(np.array([x, p, q]), x, 30)
            ref += np.sum(sub.weights / sub.r)
    assert val == pytest.approx(ref, rel=1e-4)
    assert pr.weights.sum() == pytest.approx(0.4, rel=1e-12)
