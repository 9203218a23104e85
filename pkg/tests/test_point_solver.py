import math

import numpy as np
import pytest

from biewos.errors import GeometryError, SingularityError
from biewos.geometry import (constant_data, four_plates, half_space,
                             point_charge_half_space, point_charge_sphere)
from biewos.point_solver import point_frame, sigma1_prime, sigma2_prime, solve_point
from biewos.wos import WosConfig

EXACT_DENSITY = 1.0 / 1.25 ** 1.5
SIGMA2 = {0.1: 0.018777, 0.2: 0.037515, 0.5: 0.093054, 0.7: 0.128971, 1.0: 0.179973}


def exact_sampler(fn):
    def sample(points):
        v = fn(np.asarray(points))
        return v, np.zeros_like(v), np.ones(len(v), dtype=np.int64)
    return sample


def half_space_u(p):
    return 1.0 / np.sqrt(p[:, 0] ** 2 + p[:, 1] ** 2 + (p[:, 2] + 1.0) ** 2)


@pytest.mark.parametrize("a", sorted(SIGMA2))
def test_sigma2_matches_table(a):
    fr = point_frame((0.5, 0, 0), a)
    sc = point_charge_half_space()
    assert sigma2_prime(sc, fr, 1e-6 * a, 20) == pytest.approx(SIGMA2[a], abs=1.5e-6)
    # default shell width: within 0.1%
    assert sigma2_prime(sc, fr, 1e-4 * a, 20) == pytest.approx(SIGMA2[a], rel=1e-3)


def test_sigma2_constant_data_vanishes():
    sc = half_space(constant_data(2.5))
    assert sigma2_prime(sc, point_frame((0, 0, 0), 0.4), 1e-4, 20) == 0.0


def test_sigma2_bit_identical():
    sc = point_charge_half_space()
    fr = point_frame((0.5, 0, 0), 0.7)
    assert sigma2_prime(sc, fr, 1e-5, 20) == sigma2_prime(sc, fr, 1e-5, 20)


def test_sigma2_first_order_in_delta():
    sc = point_charge_half_space()
    fr = point_frame((0.5, 0, 0), 0.5)
    ref = sigma2_prime(sc, fr, 1e-6 * 0.5, 20, "radius")
    e2 = sigma2_prime(sc, fr, 1e-2 * 0.5, 20, "radius") - ref
    e3 = sigma2_prime(sc, fr, 1e-3 * 0.5, 20, "radius") - ref
    assert 0.05 <= e3 / e2 <= 0.2


def test_sigma2_exact_plates_vs_ring():
    sc = four_plates()
    fr = point_frame((-0.2273, 0.2273, 0), 0.3)
    exact = sigma2_prime(sc, fr, 0, 20, method="exact")
    ring = sigma2_prime(sc, fr, 1e-6 * 0.3, 64, method="ring")
    assert exact == pytest.approx(0.089185, rel=1e-4)
    assert ring == pytest.approx(exact, rel=0.02)


def test_sigma2_exact_inside_single_plate_is_zero():
    fr = point_frame((-0.5, 0.5, 0), 0.2)
    assert sigma2_prime(four_plates(), fr, 0, 20, method="exact") == pytest.approx(0.0, abs=1e-15)


def test_sigma2_on_seam_rejected():
    with pytest.raises(SingularityError):
        sigma2_prime(four_plates(), point_frame((0.0, 0.5, 0), 0.3), 0, 20, method="exact")


@pytest.mark.parametrize("a", [0.1, 0.5, 1.0])
def test_exact_sampler_recovers_density(a):
    res = solve_point(point_charge_half_space(), point_frame((0.5, 0, 0), a), 20, 20, delta=1e-7 * a,
                      sampler=exact_sampler(half_space_u))
    assert res.total == pytest.approx(EXACT_DENSITY, rel=1e-5)
    assert res.total == res.sigma1 + res.sigma2


@pytest.mark.parametrize("a", [0.05, 0.3, 2.0])
def test_constant_solution_annihilated(a):
    sc = half_space(constant_data(3.0))
    res = solve_point(sc, point_frame((0.1, -0.4, 0), a), 20, 20,
                      sampler=exact_sampler(lambda p: np.full(len(p), 3.0)))
    assert abs(res.total) <= 1e-8


def test_mock_sampler_equal_to_center_value_gives_zero_sigma1():
    sc = point_charge_half_space()
    fr = point_frame((0.5, 0, 0), 0.5)
    phi_x = 1 / math.sqrt(1.25)
    val, se = sigma1_prime(sc, fr, 20, sampler=exact_sampler(lambda p: np.full(len(p), phi_x)))
    assert val == pytest.approx(0.0, abs=1e-14) and se == 0.0


def test_sigma1_with_wos():
    sc = point_charge_half_space()
    val, se = sigma1_prime(sc, point_frame((0.5, 0, 0), 0.5), 20, WosConfig(n_paths=1000, seed=1))
    assert abs(val - 0.622487) < 4 * se
    assert abs(val - 0.62146) < 4 * se


def test_path_bookkeeping():
    res = solve_point(point_charge_half_space(), point_frame((0.5, 0, 0), 0.5), 6, 6,
                      wos_cfg=WosConfig(n_paths=50))
    assert res.n_paths == 6 * 6 * 50
    assert res.config["n_g1"] == 6


def test_sphere_scene_rejected():
    with pytest.raises(GeometryError):
        solve_point(point_charge_sphere(), point_frame((0, 0, 3), 0.5), 4, 4,
                    wos_cfg=WosConfig(n_paths=10))


def test_tilted_axis_rejected():
    with pytest.raises(GeometryError):
        sigma2_prime(point_charge_half_space(), point_frame((0.5, 0, 0), 0.5, (0, 0.1, 1)), 1e-4, 4)
