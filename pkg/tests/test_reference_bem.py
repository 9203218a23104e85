import math

import numpy as np
import pytest
from scipy import integrate

from biewos.errors import GeometryError
from biewos.geometry import Plate, four_plates, plate_set, point_charge_sphere, thin_disk
from biewos.reference_bem import (panelize_plates, plate_matrix, rectangle_integral,
                                  solve_charge_density)


@pytest.mark.parametrize("p", [(0.5, 0.5), (0.1, 0.9), (1.3, -0.2), (0.0, 0.0)])
def test_rectangle_integral_vs_adaptive(p):
    px, py = p

    def inner(y):
        return integrate.quad(lambda x: 1 / math.hypot(x - px, y - py), 0, 1,
                              points=[px] if 0 < px < 1 else None, limit=200)[0]

    ref = integrate.quad(inner, 0, 1, points=[py] if 0 < py < 1 else None, limit=200)[0]
    assert rectangle_integral(px, py, 0, 1, 0, 1) == pytest.approx(ref, rel=1e-7)


def test_self_term_of_square():
    # integral of 1/r over a unit square about its centre: 4 ln(1 + sqrt 2)
    assert rectangle_integral(0, 0, -0.5, 0.5, -0.5, 0.5) == pytest.approx(4 * math.log(1 + math.sqrt(2)))


def test_panels_tile_plates():
    pan = panelize_plates(four_plates(), 7, "cosine")
    assert pan.areas.sum() == pytest.approx(4.0, rel=1e-14)
    assert len(pan.rects) == 4 * 49


def test_matrix_symmetric_for_equal_panels():
    A = plate_matrix(panelize_plates(four_plates(), 6))
    assert np.allclose(A, A.T, rtol=1e-10, atol=0)


def test_mirror_symmetric_density():
    sc = plate_set([Plate(-2, -1, 0, 1, 1.0), Plate(1, 2, 0, 1, 1.0)])
    sol = solve_charge_density(sc, 8)
    left = sol.sigma[:64].reshape(8, 8)
    right = sol.sigma[64:].reshape(8, 8)
    assert np.allclose(left[::-1], right, rtol=1e-10)


def test_disk_total_charge_converges():
    qs = [solve_charge_density(thin_disk(), n).total_charge for n in (20, 40, 80)]
    errs = [abs(q - 8.0) for q in qs]
    assert errs[-1] < 0.02 * 8
    assert errs[1] <= 0.5 * errs[0] and errs[2] <= 0.5 * errs[1]


def test_disk_density():
    sol = solve_charge_density(thin_disk(), 40)
    assert sol.face_density([(0.5, 0.0)])[0] == pytest.approx(0.735105, rel=0.02)
    assert sol.residual < 1e-10
    with pytest.raises(GeometryError):
        sol.face_density([(1.5, 0.0)])


def test_four_plates_oracle_stable():
    a = solve_charge_density(four_plates(), 17).face_density([(-0.2273, 0.2273)])[0]
    b = solve_charge_density(four_plates(), 33).face_density([(-0.2273, 0.2273)])[0]
    assert a == pytest.approx(b, rel=0.01)
    assert b == pytest.approx(2.607, rel=0.03)


def test_curved_scene_rejected():
    with pytest.raises(GeometryError):
        solve_charge_density(point_charge_sphere(), 4)
