import dataclasses
import math

import numpy as np
import pytest

from biewos.errors import ExtrapolationError, GeometryError
from biewos.geometry import constant_data, half_space, point_charge_sphere, thin_disk
from biewos.mesh import PatchMesh, latitude_mesh
from biewos.patch_solver import (SystemKind, assemble, exact_gamma_grid, interp_gamma,
                                 sample_gamma_grid, setup_flat_patch, setup_sphere_patch,
                                 solve_patch)
from biewos.wos import WosConfig

TARGET = -1.0 / (36.0 * math.pi)


def coulomb(p):
    return 1.0 / (4.0 * math.pi * np.linalg.norm(p, axis=1))


@pytest.fixture(scope="module")
def sphere_setup():
    return setup_sphere_patch(point_charge_sphere(), (0, 0, 3), 1.0, n_rings=6, n_theta=16, n_phi=32)


def test_mesh_structure(sphere_setup, tmp_path):
    mesh = sphere_setup.mesh
    assert mesh.n_panels == 6 * 36
    assert np.all(mesh.areas > 0)
    # every vertex on the sphere, normals outward of the charge
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 3.0)
    assert np.all(np.sum(mesh.normals * mesh.centroids, axis=1) > 0)
    # conforming: every interior edge shared by exactly two triangles
    edges = {}
    for t in mesh.triangles:
        for i in range(3):
            e = tuple(sorted((t[i], t[(i + 1) % 3])))
            edges[e] = edges.get(e, 0) + 1
    assert set(edges.values()) <= {1, 2}
    assert sum(v == 1 for v in edges.values()) == 6 * 6
    mesh.dump(tmp_path / "m.txt")
    back = PatchMesh.load(tmp_path / "m.txt")
    assert np.array_equal(back.triangles, mesh.triangles) and np.allclose(back.vertices, mesh.vertices)


def test_setup_errors():
    with pytest.raises(GeometryError):
        setup_sphere_patch(point_charge_sphere(), (0, 0, 2.5), 1.0)
    with pytest.raises(GeometryError):
        setup_sphere_patch(thin_disk(), (0, 0, 0), 1.0)
    with pytest.raises(GeometryError):
        latitude_mesh(None, 0)


def test_interp_exact_at_nodes_and_linear_in_theta(sphere_setup):
    fr = sphere_setup.frame
    grid = exact_gamma_grid(sphere_setup, lambda p: fr.to_spherical(p)[1])
    T, P = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    nodes = fr.from_spherical(T.ravel(), P.ravel())
    assert np.allclose(interp_gamma(grid, nodes), grid.values.ravel(), atol=1e-12)
    rng = np.random.default_rng(1)
    th = grid.theta_rim * rng.random(200)
    ph = 2 * math.pi * rng.random(200)
    assert np.allclose(interp_gamma(grid, fr.from_spherical(th, ph)), th, atol=1e-12)
    with pytest.raises(ExtrapolationError):
        interp_gamma(grid, fr.from_spherical(grid.theta_rim + 0.05, 0.0))


def test_interp_smooth_field_default_grid():
    st = setup_sphere_patch(point_charge_sphere(), (0, 0, 3), 1.0, n_rings=1)
    grid = exact_gamma_grid(st, coulomb)
    rng = np.random.default_rng(2)
    y = st.frame.from_spherical(st.theta_rim * rng.random(2000), 2 * math.pi * rng.random(2000))
    err = np.abs(interp_gamma(grid, y) / coulomb(y) - 1)
    assert err.max() <= 1e-3


def test_gamma_grid_mock_and_rim(sphere_setup):
    sc = point_charge_sphere()
    grid = sample_gamma_grid(sc, sphere_setup, WosConfig(),
                             sampler=lambda p: (np.full(len(p), 2.0), np.zeros(len(p)), np.ones(len(p))))
    assert np.all(grid.values[:-1] == 2.0)
    assert np.allclose(grid.values[-1], 1 / (12 * math.pi))
    r = np.linalg.norm(sphere_setup.frame.from_spherical(grid.theta[:-1], 0.0), axis=1)
    assert np.all(r > 3.0)


def test_gamma_grid_wos_values():
    sc = point_charge_sphere()
    st = setup_sphere_patch(sc, (0, 0, 3), 1.0, n_rings=2, n_theta=4, n_phi=6)
    grid = sample_gamma_grid(sc, st, WosConfig(n_paths=4000, seed=3))
    T, P = np.meshgrid(grid.theta[:-1], grid.phi, indexing="ij")
    exact = coulomb(st.frame.from_spherical(T.ravel(), P.ravel()))
    se = np.sqrt(grid.variances[:-1].ravel() / grid.counts[:-1].ravel())
    assert np.all(np.abs(grid.values[:-1].ravel() - exact) < 4 * se)
    assert grid.n_paths == 4 * 6 * 4000


@pytest.mark.parametrize("kind", ["second", "first"])
def test_sphere_exact_data(sphere_setup, kind):
    nf = solve_patch(point_charge_sphere(), sphere_setup, kind, gamma=coulomb)
    inner = nf.r < 0.7
    assert np.abs(nf.values[inner] / TARGET - 1).max() < 0.01
    assert nf.residual <= 1e-10 and len(nf.values) == sphere_setup.mesh.n_panels


def test_flat_linear_field():
    hs = half_space(constant_data(0.0))
    st = setup_flat_patch(hs, (0, 0, 0), 1.0, n_rings=6)
    nf = solve_patch(hs, st, "second", gamma=lambda p: p[:, 2])
    inner = nf.r < 0.7
    assert np.abs(nf.values[inner] - 1).max() < 0.01


@pytest.mark.parametrize("kind", ["second", "first"])
def test_constant_solution_annihilated(sphere_setup, kind):
    nf = solve_patch(point_charge_sphere(), sphere_setup, kind, gamma=lambda p: np.full(len(p), 0.7),
                     s_data=lambda p: np.full(len(p), 0.7))
    assert np.abs(nf.values).max() <= 1e-6


def test_zero_data_zero_field():
    hs = half_space(constant_data(0.0))
    st = setup_flat_patch(hs, (0, 0, 0), 1.0, n_rings=3)
    nf = solve_patch(hs, st, "second", gamma=lambda p: np.zeros(len(p)))
    assert np.all(nf.values == 0)


def _asymmetry(n_rings):
    hs = half_space(constant_data(0.0))
    st = setup_flat_patch(hs, (0, 0, 0), 1.0, n_rings=n_rings)
    A = assemble(hs, st, SystemKind.FIRST_KIND, lambda p: p[:, 2]).A
    areas = st.mesh.areas
    i, j = np.triu_indices(len(A), 1)
    same = np.abs(areas[i] / areas[j] - 1) < 1e-3
    return np.median(np.abs(A[i[same], j[same]] / A[j[same], i[same]] - 1))


def test_first_kind_symmetry_improves_with_refinement():
    coarse, fine = _asymmetry(3), _asymmetry(6)
    assert fine < 0.5 * coarse and fine < 0.01


def test_permutation_equivariance(sphere_setup):
    perm = np.random.default_rng(4).permutation(sphere_setup.mesh.n_panels)
    st2 = dataclasses.replace(sphere_setup, mesh=sphere_setup.mesh.permuted(perm))
    a = solve_patch(point_charge_sphere(), sphere_setup, "second", gamma=coulomb)
    b = solve_patch(point_charge_sphere(), st2, "second", gamma=coulomb)
    assert np.allclose(b.values, a.values[perm], rtol=1e-10, atol=1e-14)


def test_noise_propagation():
    sc = point_charge_sphere()
    st = setup_sphere_patch(sc, (0, 0, 3), 1.0, n_rings=3, n_theta=6, n_phi=8)
    nf = solve_patch(sc, st, "second", WosConfig(n_paths=500, seed=2))
    assert np.all(nf.std_error > 0) and nf.n_paths == 6 * 8 * 500
    assert np.all(np.abs(nf.values / TARGET - 1)[nf.r < 0.7] < 0.3)
