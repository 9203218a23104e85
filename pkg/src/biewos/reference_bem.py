"""Dense single-layer collocation BEM for flat conductors (the test oracle).

Solves  int sigma(y) / (4 pi |x - y|) ds_y = phi(x)  at panel centroids with
piecewise-constant sigma. ``sigma`` is the total (two-face) density of the
zero-thickness conductor; the charge on one face is sigma / 2.

Plates use rectangular panels with the closed-form rectangle integral of 1/r.
The disk uses axisymmetric ring panels graded toward the rim, whose azimuthal
integral is a complete elliptic integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.interpolate import RegularGridInterpolator

from .errors import GeometryError, QuadratureError
from .geometry import Scene, SceneKind
from .quadrature import gauss_legendre

_ROW_BLOCK = 512
_P_MIN = 1e-300


def _asinh_term(u, v):
    # u * asinh(v / |u|), continuous with value 0 at u = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = u * np.arcsinh(v / np.abs(u))
    return np.where(u == 0.0, 0.0, t)


def _corner(u, v):
    return _asinh_term(u, v) + _asinh_term(v, u)


def rectangle_integral(px, py, x0, x1, y0, y1):
    """Integral of 1/|p - y| over the rectangle [x0,x1]x[y0,y1] in the plane of p.

    Uses the antiderivative u asinh(v/|u|) + v asinh(u/|v|); broadcasts.
    """
    return (_corner(x1 - px, y1 - py) - _corner(x0 - px, y1 - py)
            - _corner(x1 - px, y0 - py) + _corner(x0 - px, y0 - py))


@dataclass(frozen=True)
class PlatePanelization:
    rects: np.ndarray      # (m, 4) x0, x1, y0, y1
    plate_index: np.ndarray
    n: int                 # panels per plate side
    breaks: tuple          # per plate (xs, ys)

    @property
    def centroids(self) -> np.ndarray:
        r = self.rects
        return np.stack([0.5 * (r[:, 0] + r[:, 1]), 0.5 * (r[:, 2] + r[:, 3])], axis=1)

    @property
    def areas(self) -> np.ndarray:
        r = self.rects
        return (r[:, 1] - r[:, 0]) * (r[:, 3] - r[:, 2])


def _breaks(n: int, grading: str) -> np.ndarray:
    s = np.linspace(0.0, 1.0, n + 1)
    if grading == "cosine":
        s = 0.5 - 0.5 * np.cos(math.pi * s)
    elif grading != "uniform":
        raise ValueError(f"unknown grading {grading!r}")
    return s


def panelize_plates(scene: Scene, n: int, grading: str = "uniform") -> PlatePanelization:
    s = _breaks(n, grading)
    rects, owner, breaks = [], [], []
    for k, p in enumerate(scene.plates):
        xs = p.x0 + (p.x1 - p.x0) * s
        ys = p.y0 + (p.y1 - p.y0) * s
        breaks.append((xs, ys))
        for i in range(n):
            for j in range(n):
                rects.append((xs[i], xs[i + 1], ys[j], ys[j + 1]))
                owner.append(k)
    return PlatePanelization(np.array(rects), np.array(owner), n, tuple(breaks))


def plate_matrix(pan: PlatePanelization) -> np.ndarray:
    c = pan.centroids
    r = pan.rects
    m = len(r)
    A = np.empty((m, m))
    for lo in range(0, m, _ROW_BLOCK):
        hi = min(lo + _ROW_BLOCK, m)
        A[lo:hi] = rectangle_integral(c[lo:hi, 0, None], c[lo:hi, 1, None],
                                      r[None, :, 0], r[None, :, 1], r[None, :, 2], r[None, :, 3])
    return A / (4.0 * math.pi)


# ---------------------------------------------------------------------------
# disk
# ---------------------------------------------------------------------------


def _ring_kernel(rho, rp):
    """Azimuthal integral of 1/(4 pi |x - y|) times the radial Jacobian r'."""
    # complementary parameter 1 - m, formed without cancellation near rp = rho
    p = ((rho - rp) / (rho + rp)) ** 2
    return rp * special.ellipkm1(np.maximum(p, _P_MIN)) / (math.pi * (rho + rp))


def disk_breaks(b: float, n: int) -> np.ndarray:
    """Ring radii b sin(pi k / 2n): fine near the rim where sigma ~ 1/sqrt(b - r)."""
    return b * np.sin(0.5 * math.pi * np.arange(n + 1) / n)


def disk_matrix(edges: np.ndarray, collocation: np.ndarray, near: int = 2) -> np.ndarray:
    n = len(edges) - 1
    g = gauss_legendre(16)
    A = np.empty((len(collocation), n))
    for i, rho in enumerate(collocation):
        for j in range(n):
            r1, r2 = edges[j], edges[j + 1]
            if abs(i - j) <= near:
                # split at the log singularity so each piece has it at an endpoint
                cuts = [r1, rho, r2] if r1 < rho < r2 else [r1, r2]
                val = sum(integrate.quad(lambda t: _ring_kernel(rho, t), lo, hi, limit=200,
                                         epsabs=1e-15, epsrel=1e-10)[0]
                          for lo, hi in zip(cuts[:-1], cuts[1:]))
            else:
                t, w = g.on(r1, r2)
                val = float(np.dot(w, _ring_kernel(rho, t)))
            A[i, j] = val
    return A


# ---------------------------------------------------------------------------
# solution object
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BemSolution:
    scene: Scene
    sigma: np.ndarray          # total (two-face) density per panel
    areas: np.ndarray
    residual: float
    plates: PlatePanelization | None = None
    ring_edges: np.ndarray | None = None

    @property
    def total_charge(self) -> float:
        return float(np.dot(self.sigma, self.areas))

    def face_density(self, points) -> np.ndarray:
        """One-face charge density at in-plane query points (x, y[, z])."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.ring_edges is not None:
            mids = 0.5 * (self.ring_edges[:-1] + self.ring_edges[1:])
            rho = np.hypot(pts[:, 0], pts[:, 1])
            if np.any(rho > self.ring_edges[-1]):
                raise GeometryError("query point off the disk")
            return 0.5 * np.interp(rho, mids, self.sigma)
        return 0.5 * self._plate_interp(pts)

    def _plate_interp(self, pts: np.ndarray) -> np.ndarray:
        pan = self.plates
        out = np.empty(len(pts))
        n = pan.n
        for i, (x, y) in enumerate(pts[:, :2]):
            k = next((k for k, p in enumerate(self.scene.plates) if p.contains(x, y)), None)
            if k is None:
                raise GeometryError(f"query point {(x, y)} is on no plate")
            xs, ys = pan.breaks[k]
            cx = 0.5 * (xs[:-1] + xs[1:])
            cy = 0.5 * (ys[:-1] + ys[1:])
            vals = self.sigma[k * n * n:(k + 1) * n * n].reshape(n, n)
            f = RegularGridInterpolator((cx, cy), vals, bounds_error=False, fill_value=None)
            out[i] = f([[x, y]])[0]
        return out


def solve_charge_density(scene: Scene, n_panels_per_side: int, grading: str = "uniform") -> BemSolution:
    """Dense collocation solve for the plate set or thin disk of ``scene``."""
    n = int(n_panels_per_side)
    if n < 1:
        raise ValueError("need at least one panel per side")
    if scene.kind is SceneKind.PLATE_SET:
        pan = panelize_plates(scene, n, grading)
        A = plate_matrix(pan)
        c = pan.centroids
        z = float(scene.params[0])
        pts = np.column_stack([c, np.full(len(c), z)])
        rhs = np.asarray(scene.dirichlet(pts, pan.plate_index), dtype=float)
        areas = pan.areas
        extra = dict(plates=pan)
    elif scene.kind is SceneKind.THIN_DISK:
        b, z = float(scene.params[0]), float(scene.params[1])
        edges = disk_breaks(b, n)
        mids = 0.5 * (edges[:-1] + edges[1:])
        A = disk_matrix(edges, mids)
        pts = np.column_stack([mids, np.zeros(n), np.full(n, z)])
        rhs = np.asarray(scene.dirichlet(pts, np.zeros(n, dtype=np.int64)), dtype=float)
        areas = math.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
        extra = dict(ring_edges=edges)
    else:
        raise GeometryError("reference BEM handles flat plate sets and thin disks only")
    try:
        sigma = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise QuadratureError(f"singular BEM matrix: {exc}") from exc
    nb = np.linalg.norm(rhs)
    res = float(np.linalg.norm(A @ sigma - rhs) / nb) if nb > 0 else float(np.linalg.norm(A @ sigma))
    return BemSolution(scene, sigma, areas, res, **extra)
