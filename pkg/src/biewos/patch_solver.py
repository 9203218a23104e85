"""Neumann data over a boundary patch by collocation BEM inside a superimposed sphere.

A sphere of radius a centred at a boundary point o cuts out Omega_S, bounded
by the boundary patch S and the spherical surface Gamma. With G the Green's
function of that sphere (zero on Gamma) and n the outward normal of Omega_S:

* first kind:  int_S G q = int_{S+Gamma} (u - u(x)) dG/dn_y
* second kind: q/2 - int_S dG/dn_x q = -int_{S+Gamma} (u - u(x)) d2G/dn_x dn_y

with q = du/dn. Subtracting u(x) is the constant-solution identity; it turns
the hyper-singular S integral into a principal value. On S the outward normal
of Omega_S points out of the solution domain, so the reported Neumann value
du/dnu = -q uses the normal nu that points into the solution domain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import ExtrapolationError, GeometryError, QuadratureError
from .geometry import DomainSide, Scene, SceneKind, projected_values
from .greens import FOUR_PI, SphereFrame, sphere_kernels, sphere_kernels_unchecked
from .mesh import FlatDiskSurface, PatchMesh, SphereCapSurface, latitude_mesh
from .quadrature import cap_rule, polar_rule, tri_rule
from .wos import WosConfig, batch_arrays, estimate_u_batch

DataFn = Callable[[np.ndarray], np.ndarray]


class SystemKind(enum.Enum):
    FIRST_KIND = "first"
    SECOND_KIND = "second"


@dataclass(frozen=True, eq=False)
class PatchSetup:
    frame: SphereFrame   # superimposed sphere; axis = nu at the patch centre
    mesh: PatchMesh      # panel normals = nu (into the solution domain)
    theta_rim: float     # Gamma is theta <= theta_rim about frame.axis
    surface: object      # exact boundary: lift(points, plane_normals) -> (points, nu, jacobian)
    n_theta: int = 64
    n_phi: int = 128
    gamma_order: int = 30
    self_order: int = 20

    @property
    def center(self) -> np.ndarray:
        return self.frame.center


def setup_sphere_patch(scene: Scene, o, a: float, n_rings: int = 8, **grid) -> PatchSetup:
    """Patch of a sphere scene around the boundary point ``o`` cut by a sphere of radius a."""
    if scene.kind is not SceneKind.SPHERE:
        raise GeometryError("scene is not a sphere")
    c = scene.params[:3].copy()
    R = float(scene.params[3])
    o = np.asarray(o, dtype=float)
    if abs(np.linalg.norm(o - c) - R) > 1e-9 * R:
        raise GeometryError("patch centre is not on the sphere")
    if not 0 < a < 2 * R:
        raise GeometryError("patch radius must be in (0, 2R)")
    sign = 1.0 if scene.domain_side is DomainSide.EXTERIOR else -1.0
    nu = sign * (o - c) / R
    beta_max = 2.0 * math.asin(a / (2.0 * R))
    surface = SphereCapSurface(c, R, o, beta_max, sign)
    mesh = latitude_mesh(surface, n_rings)
    theta_rim = math.acos(-sign * a / (2.0 * R))
    return PatchSetup(SphereFrame(o, a, nu), mesh, theta_rim, surface, **grid)


def setup_flat_patch(scene: Scene, o, a: float, n_rings: int = 8, **grid) -> PatchSetup:
    """Patch of a planar scene (half-space or plates): the disk |y - o| <= a, Gamma a hemisphere."""
    if scene.kind not in (SceneKind.HALF_SPACE, SceneKind.PLATE_SET, SceneKind.THIN_DISK):
        raise GeometryError("scene is not planar")
    o = np.asarray(o, dtype=float)
    nu = np.array([0.0, 0.0, 1.0])
    surface = FlatDiskSurface(o, a, nu)
    mesh = latitude_mesh(surface, n_rings)
    return PatchSetup(SphereFrame(o, a, nu), mesh, 0.5 * math.pi, surface, **grid)


# ---------------------------------------------------------------------------
# Gamma grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GammaGrid:
    """Potential samples on Gamma at (theta_k, phi_j); the last row is the rim."""

    frame: SphereFrame
    theta: np.ndarray      # (n_theta + 1,)
    phi: np.ndarray        # (n_phi,)
    values: np.ndarray     # (n_theta + 1, n_phi)
    variances: np.ndarray
    counts: np.ndarray

    @property
    def theta_rim(self) -> float:
        return float(self.theta[-1])

    @property
    def n_paths(self) -> int:
        return int(self.counts.sum())

    def weights(self, y) -> tuple[np.ndarray, np.ndarray]:
        """Flat node indices (m, 4) and bilinear weights (m, 4) for points y on Gamma."""
        r, th, ph = self.frame.to_spherical(np.atleast_2d(y))
        a = self.frame.radius
        if np.any(np.abs(r - a) > 1e-9 * a):
            raise ExtrapolationError("point is not on the sphere carrying the grid")
        if np.any(th > self.theta_rim * (1 + 1e-12)):
            raise ExtrapolationError("point lies beyond the sampled polar range")
        th = np.minimum(th, self.theta_rim)
        nt, nph = len(self.theta), len(self.phi)
        k = np.clip(np.searchsorted(self.theta, th, side="right") - 1, 0, nt - 2)
        t = (th - self.theta[k]) / (self.theta[k + 1] - self.theta[k])
        dphi = 2.0 * math.pi / nph
        s = ph / dphi
        j = np.floor(s).astype(np.int64) % nph
        u = s - np.floor(s)
        j1 = (j + 1) % nph
        idx = np.stack([k * nph + j, k * nph + j1, (k + 1) * nph + j, (k + 1) * nph + j1], axis=1)
        w = np.stack([(1 - t) * (1 - u), (1 - t) * u, t * (1 - u), t * u], axis=1)
        return idx, w


def interp_gamma(grid: GammaGrid, y) -> np.ndarray:
    """Bilinear interpolation in (theta, phi), periodic in phi."""
    idx, w = grid.weights(y)
    out = np.sum(grid.values.ravel()[idx] * w, axis=1)
    return float(out[0]) if np.ndim(y) == 1 else out


def gamma_nodes(setup: PatchSetup) -> tuple[np.ndarray, np.ndarray]:
    """Polar angles (WOS rows, then the rim) and azimuths of the grid."""
    dth = setup.theta_rim / setup.n_theta
    theta = np.append(dth * np.arange(setup.n_theta), setup.theta_rim)
    phi = 2.0 * math.pi * np.arange(setup.n_phi) / setup.n_phi
    return theta, phi


def sample_gamma_grid(scene: Scene, setup: PatchSetup, wos_cfg: WosConfig,
                      sampler: Callable | None = None) -> GammaGrid:
    """WOS estimates at the grid nodes; the rim row lies on the boundary and takes the data."""
    theta, phi = gamma_nodes(setup)
    T, P = np.meshgrid(theta[:-1], phi, indexing="ij")
    pts = setup.frame.from_spherical(T.ravel(), P.ravel())
    if sampler is None:
        means, var, cnt = batch_arrays(estimate_u_batch(scene, pts, wos_cfg))
    else:
        means, var, cnt = sampler(pts)
    rim = projected_values(scene, setup.frame.from_spherical(np.full(len(phi), theta[-1]), phi))
    shape = (len(theta), len(phi))
    values = np.concatenate([np.asarray(means, dtype=float), rim]).reshape(shape)
    variances = np.concatenate([np.asarray(var, dtype=float), np.zeros(len(phi))]).reshape(shape)
    counts = np.concatenate([np.asarray(cnt), np.zeros(len(phi))]).astype(np.int64).reshape(shape)
    return GammaGrid(setup.frame, theta, phi, values, variances, counts)


def exact_gamma_grid(setup: PatchSetup, fn: DataFn) -> GammaGrid:
    """Grid filled from a known potential (for tests and oracles)."""
    theta, phi = gamma_nodes(setup)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    vals = np.asarray(fn(setup.frame.from_spherical(T.ravel(), P.ravel())), dtype=float)
    z = np.zeros(T.shape)
    return GammaGrid(setup.frame, theta, phi, vals.reshape(T.shape), z, z.astype(np.int64))


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DenseSystem:
    A: np.ndarray
    b: np.ndarray
    kind: SystemKind
    # d b / d (grid node values), for propagating WOS variance
    b_sensitivity: np.ndarray | None = None


GammaData = Union[GammaGrid, DataFn]


def _far_order(ratio: np.ndarray) -> np.ndarray:
    return np.where(ratio < 1.5, 16, np.where(ratio < 4.0, 8, 4))


def _tangent_gradient(s_data: DataFn, x, tri, h) -> np.ndarray:
    """Tangential gradient of the data at x by central differences in the panel plane."""
    e1 = tri[1] - tri[0]
    e1 = e1 / np.linalg.norm(e1)
    nrm = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    nrm = nrm / np.linalg.norm(nrm)
    e2 = np.cross(nrm, e1)
    pts = np.array([x + h * e1, x - h * e1, x + h * e2, x - h * e2])
    f = s_data(pts)
    return (f[0] - f[1]) / (2 * h) * e1 + (f[2] - f[3]) / (2 * h) * e2


class _Panels:
    """Flat panels with quadrature nodes lifted onto the exact boundary."""

    def __init__(self, setup: PatchSetup, s_data: DataFn):
        mesh = setup.mesh
        self.surface = setup.surface
        self.s_data = s_data
        self.tris = mesh.vertices[mesh.triangles]
        self.plane_normals = mesh.normals
        self.area2 = 2.0 * mesh.areas
        x, nu, _ = self.surface.lift(mesh.centroids, mesh.normals)
        self.X = x
        self.NX = -nu  # outward of Omega_S
        self.UX = s_data(x)

    def rule(self, cols, order: int):
        """Lifted nodes, outward normals, weights and data of ``tri_rule(order)`` on panels ``cols``."""
        rule = tri_rule(order)
        flat = np.einsum("qk,pkd->pqd", rule.bary, self.tris[cols])
        y, nu, jac = self.surface.lift(flat, self.plane_normals[cols][:, None, :])
        w = rule.weights[None, :] * self.area2[cols, None] * jac
        u = self.s_data(y.reshape(-1, 3)).reshape(y.shape[:2])
        return y, -nu, w, u


def _pair_terms(frame, first, x, nx, ux, y, ny, w, u):
    """Matrix and right-hand-side contributions; pairs on axis 0, nodes on axis 1."""
    g, dgx, dgy, d2 = sphere_kernels_unchecked(frame, x[:, None], y, nx[:, None], ny)
    du = u - ux[:, None]
    if first:
        return np.sum(g * w, axis=1), np.sum(dgy * du * w, axis=1)
    return -np.sum(dgx * w, axis=1), -np.sum(d2 * du * w, axis=1)


def assemble(scene: Scene, setup: PatchSetup, kind: SystemKind | str, gamma: GammaData,
             s_data: DataFn | None = None) -> DenseSystem:
    """Collocation system at (lifted) panel centroids with piecewise-constant q = du/dn.

    ``gamma`` is a sampled grid or a callable potential on Gamma; ``s_data``
    overrides the scene's Dirichlet data on S (evaluated at boundary projections).
    """
    kind = SystemKind(kind) if isinstance(kind, str) else kind
    first = kind is SystemKind.FIRST_KIND
    frame = setup.frame
    if s_data is None:
        def s_data(p):
            return projected_values(scene, p)
    pan = _Panels(setup, s_data)
    X, NX, UX = pan.X, pan.NX, pan.UX
    n = len(X)

    # Gamma: Gauss cap rule; grid data enter through bilinear interpolation
    cap = cap_rule(frame, setup.gamma_order, setup.theta_rim)
    interp = None
    if isinstance(gamma, GammaGrid):
        gidx, gw = gamma.weights(cap.points)
        ug = np.sum(gamma.values.ravel()[gidx] * gw, axis=1)
        rows = np.repeat(np.arange(len(ug)), 4)
        interp = scipy.sparse.csr_matrix((gw.ravel(), (rows, gidx.ravel())),
                                         shape=(len(ug), gamma.values.size))
    else:
        ug = np.asarray(gamma(cap.points), dtype=float)

    A = np.zeros((n, n))
    b = np.zeros(n)
    sens = np.zeros((n, interp.shape[1])) if interp is not None else None
    for lo in range(0, n, 64):
        hi = min(lo + 64, n)
        _, _, dgy, d2 = sphere_kernels(frame, X[lo:hi, None, :], cap.points[None],
                                       NX[lo:hi, None, :], cap.normals[None])
        kw = (dgy if first else -d2) * cap.weights
        b[lo:hi] += np.sum(kw * (ug[None, :] - UX[lo:hi, None]), axis=1)
        if sens is not None:
            sens[lo:hi] = (interp.T @ kw.T).T

    # S: low-order rule everywhere, then near and self corrections
    all_cols = np.arange(n)
    Yf, NYf, Wf, Uf = pan.rule(all_cols, 4)
    for lo in range(0, n, 64):
        hi = min(lo + 64, n)
        g, dgx, dgy, d2 = sphere_kernels_unchecked(frame, X[lo:hi, None, None, :], Yf[None],
                                                   NX[lo:hi, None, None, :], NYf[None])
        du = Uf[None] - UX[lo:hi, None, None]
        if first:
            A[lo:hi] = np.sum(g * Wf[None], axis=2)
            b[lo:hi] += np.sum(dgy * du * Wf[None], axis=(1, 2))
        else:
            A[lo:hi] = -np.sum(dgx * Wf[None], axis=2)
            b[lo:hi] -= np.sum(d2 * du * Wf[None], axis=(1, 2))

    dist = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    order = _far_order(dist / setup.mesh.diameters[None, :])
    np.fill_diagonal(order, 0)
    for o in (8, 16):
        rows, cols = np.nonzero(order == o)
        for lo in range(0, len(rows), 2048):
            r, c = rows[lo:lo + 2048], cols[lo:lo + 2048]
            a_old, b_old = _pair_terms(frame, first, X[r], NX[r], UX[r], Yf[c], NYf[c], Wf[c], Uf[c])
            y, ny, w, u = pan.rule(c, o)
            a_new, b_new = _pair_terms(frame, first, X[r], NX[r], UX[r], y, ny, w, u)
            np.add.at(A, (r, c), a_new - a_old)
            np.add.at(b, r, b_new - b_old)

    for i in range(n):
        a_old, b_old = _pair_terms(frame, first, X[i:i + 1], NX[i:i + 1], UX[i:i + 1],
                                   Yf[i:i + 1], NYf[i:i + 1], Wf[i:i + 1], Uf[i:i + 1])
        a_new, b_new = _self_terms(frame, first, pan, i, setup.self_order, setup.mesh.diameters[i])
        A[i, i] += a_new - a_old[0]
        b[i] += b_new - b_old[0]
    if not first:
        A += 0.5 * np.eye(n)
    return DenseSystem(A, b, kind, sens)


def _self_terms(frame, first, pan: _Panels, i: int, order: int, diam: float):
    """Self-panel entries by the polar rule about the flat centroid."""
    tri = pan.tris[i]
    xf = tri.mean(axis=0)
    pr = polar_rule(tri, xf, order)
    y, nu, jac = pan.surface.lift(pr.points, pan.plane_normals[i][None, :])
    w = pr.weights * jac
    ny = -nu
    x, nx, ux = pan.X[i], pan.NX[i], pan.UX[i]
    du = pan.s_data(y) - ux
    g, dgx, dgy, d2 = sphere_kernels_unchecked(frame, x[None], y, nx[None], ny)
    if first:
        return np.sum(g * w), np.sum(dgy * du * w)
    # d2G ~ 1/(4 pi r^3): subtract the linear part of the data and add its principal value
    grad = _tangent_gradient(pan.s_data, xf, tri, 1e-3 * diam)
    lin = pr.r * (pr.dirs @ grad)
    regular = np.sum(d2 * du * w - lin / (FOUR_PI * pr.r ** 3) * pr.weights)
    ang_dirs = pr.dirs[:: len(pr.radial_nodes)]
    pv = np.sum(pr.w_angle * (ang_dirs @ grad) * np.log(pr.reach)) / FOUR_PI
    return -np.sum(dgx * w), -(regular + pv)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NeumannField:
    values: np.ndarray      # du/dnu per panel, nu into the solution domain
    r: np.ndarray           # centroid distance to the patch centre
    std_error: np.ndarray   # WOS noise propagated through the linear solve
    residual: float
    kind: SystemKind
    n_paths: int = 0
    centroids: np.ndarray = field(default=None, repr=False)


def solve_system(system: DenseSystem) -> tuple[np.ndarray, float, np.ndarray]:
    try:
        lu = scipy.linalg.lu_factor(system.A, check_finite=True)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise QuadratureError(f"patch system could not be factorized: {exc}") from exc
    q = scipy.linalg.lu_solve(lu, system.b)
    nb = np.linalg.norm(system.b)
    res = np.linalg.norm(system.A @ q - system.b)
    res = float(res / nb) if nb > 0 else float(res)
    if not np.all(np.isfinite(q)) or res > 1e-10:
        hint = " (try the second-kind form)" if system.kind is SystemKind.FIRST_KIND else ""
        raise QuadratureError(f"dense solve residual {res:.2e} too large{hint}")
    return q, res, lu


def solve_patch(scene: Scene, setup: PatchSetup, kind: SystemKind | str = SystemKind.SECOND_KIND,
                wos_cfg: WosConfig | None = None, gamma: GammaData | None = None,
                s_data: DataFn | None = None) -> NeumannField:
    """Sample Gamma by WOS (unless ``gamma`` is given), assemble, solve."""
    if gamma is None:
        gamma = sample_gamma_grid(scene, setup, wos_cfg or WosConfig(n_paths=10_000))
    system = assemble(scene, setup, kind, gamma, s_data)
    q, res, lu = solve_system(system)
    se = np.zeros_like(q)
    n_paths = 0
    if isinstance(gamma, GammaGrid) and system.b_sensitivity is not None:
        cnt = gamma.counts.ravel()
        var_mean = np.where(cnt > 0, gamma.variances.ravel() / np.maximum(cnt, 1), 0.0)
        M = scipy.linalg.lu_solve(lu, system.b_sensitivity)
        se = np.sqrt(M ** 2 @ var_mean)
        n_paths = gamma.n_paths
    mesh = setup.mesh
    r = np.linalg.norm(mesh.centroids - setup.center, axis=1)
    return NeumannField(-q, r, se, res, system.kind, n_paths, mesh.centroids)
