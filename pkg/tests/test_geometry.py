import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biewos.errors import ClassificationError, DomainViolationError, GeometryError
from biewos.geometry import (INFINITY, Plate, boundary_values, classify_exit, distance_to_boundary,
                             eval_dirichlet, four_plates, half_space, plate_set,
                             point_charge_half_space, project_to_boundary, sine_data, thin_disk,
                             constant_data)

coord = st.floats(-3, 3, allow_nan=False)


def test_half_space_distance():
    sc = half_space(constant_data(0.0))
    q = distance_to_boundary(sc, (3.0, -7.0, 2.0))
    assert q.distance == 2.0 and q.feature_id == 0


def test_disk_distance_center_and_rim():
    sc = thin_disk(1.0)
    assert distance_to_boundary(sc, (0, 0, 0.5)).distance == pytest.approx(0.5, abs=1e-12)
    assert distance_to_boundary(sc, (2, 0, 0)).distance == pytest.approx(1.0, abs=1e-12)


def test_disk_distance_against_dense_sampling(rng):
    sc = thin_disk(1.0)
    r = np.sqrt(rng.random(200_000))
    t = 2 * math.pi * rng.random(200_000)
    pts = np.stack([r * np.cos(t), r * np.sin(t), 0 * r], axis=1)
    for p in [(1.5, 0.3, 0.4), (0.2, -0.1, 0.05), (-1.2, 1.1, -0.7)]:
        d = distance_to_boundary(sc, p).distance
        brute = np.linalg.norm(pts - np.array(p), axis=1).min()
        assert d <= brute + 1e-12
        assert brute - d < 5e-3


def test_points_on_boundary_rejected():
    with pytest.raises(DomainViolationError):
        distance_to_boundary(half_space(constant_data(0.0)), (0.0, 0.0, -1.0))
    with pytest.raises(DomainViolationError):
        distance_to_boundary(thin_disk(1.0), (0.5, 0.0, 0.0))


def test_dirichlet_examples():
    assert eval_dirichlet(four_plates(), (-0.5, 0.5, 0.0)) == 1.0
    sc = plate_set([Plate(0, 4, 0, 4)], sine_data(1, 1))
    assert eval_dirichlet(sc, (math.pi / 2, math.pi / 2, 0.0)) == pytest.approx(1.0)
    hs = point_charge_half_space(1.0, 1.0)
    assert eval_dirichlet(hs, (0.5, 0.0, 0.0)) == pytest.approx(1 / math.sqrt(1.25), rel=1e-14)


def test_dirichlet_far_from_boundary():
    with pytest.raises(ClassificationError):
        eval_dirichlet(four_plates(), (0.3, 0.3, 0.1))


def test_classify_exit():
    assert classify_exit(half_space(constant_data(0)), (2e5, 0, 0), 1e-5, 1e5) == INFINITY
    assert classify_exit(half_space(constant_data(0)), (0, 0, 1e-6), 1e-5) == 0
    assert classify_exit(four_plates(), (-0.4, -0.6, 5e-6), 1e-5) == 2  # plate III


def test_seam_tie_breaks_to_lowest_index():
    fid = classify_exit(four_plates(), (0.0, 0.5, 1e-7), 1e-5)
    assert fid == 0


def test_overlapping_plates_rejected():
    with pytest.raises(GeometryError):
        plate_set([Plate(0, 1, 0, 1), Plate(0.5, 2, 0, 1)])


@settings(max_examples=200, deadline=None)
@given(coord, coord, st.floats(0.01, 2), coord, coord, st.floats(0.01, 2))
def test_distance_is_lipschitz(x1, y1, z1, x2, y2, z2):
    sc = four_plates()
    p, q = np.array([x1, y1, z1]), np.array([x2, y2, z2])
    d1 = distance_to_boundary(sc, p).distance
    d2 = distance_to_boundary(sc, q).distance
    assert abs(d1 - d2) <= np.linalg.norm(p - q) + 1e-12


@settings(max_examples=100, deadline=None)
@given(coord, coord, st.floats(0.01, 2))
def test_ball_free_of_boundary(x, y, z):
    sc = four_plates()
    p = np.array([x, y, z])
    d = distance_to_boundary(sc, p).distance
    g = np.linspace(-1, 1, 41)
    X, Y = np.meshgrid(g, g)
    pts = np.stack([X.ravel(), Y.ravel(), 0 * X.ravel()], axis=1)
    assert np.linalg.norm(pts - p, axis=1).min() >= d - 1e-12


@settings(max_examples=100, deadline=None)
@given(coord, coord, st.floats(1e-6, 2))
def test_projection_classification_idempotent(x, y, z):
    sc = four_plates()
    proj, fid, _ = project_to_boundary(sc, (x, y, z))
    assert classify_exit(sc, proj, 1e-5) == fid
    proj2, fid2, _ = project_to_boundary(sc, proj)
    assert fid2 == fid and np.allclose(proj2, proj)


def test_boundary_values_vectorised():
    vals = boundary_values(four_plates(), [(-0.5, 0.5, 0), (0.5, 0.5, 0)])
    assert list(vals) == [1.0, 0.0]
