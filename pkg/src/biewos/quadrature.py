"""Quadrature rules: Gauss-Legendre, hemispherical cap, annulus and triangles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError


@dataclass(frozen=True)
class GaussRule1D:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.nodes)

    def on(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * (hi - lo)
        return lo + half * (self.nodes + 1.0), half * self.weights


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(1, n + 1)
    x = np.cos(math.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        if n == 1:
            p0, p1 = np.zeros_like(x), x.copy()
            dp = np.ones_like(x)
        else:
            dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = np.ones_like(x) if n == 1 else n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    nodes, weights = x[order], w[order]
    if n % 2 == 1:
        nodes[n // 2] = 0.0
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(n: int) -> GaussRule1D:
    """n-point Gauss-Legendre rule on [-1, 1], 1 <= n <= 64."""
    if not 1 <= int(n) <= 64:
        raise QuadratureError(f"Gauss-Legendre order {n} outside 1..64")
    return GaussRule1D(*_gauss_legendre(int(n)))


# ---------------------------------------------------------------------------
# spherical cap
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapRule:
    points: np.ndarray   # (m, 3)
    weights: np.ndarray  # (m,) include the surface element
    theta: np.ndarray
    phi: np.ndarray
    normals: np.ndarray  # outward radial unit vectors


def cap_rule(frame, n: int, theta_max: float = math.pi / 2) -> CapRule:
    """n x n tensor Gauss rule on the cap theta <= theta_max of a sphere frame.

    theta_i = (theta_max/2)(xi_i + 1), phi_j = pi (xi_j + 1); for the
    hemisphere the weights are w_i w_j (pi^2/4) a^2 sin(theta_i).
    """
    if n < 2:
        raise QuadratureError("cap rule needs n >= 2")
    g = gauss_legendre(n)
    th = 0.5 * theta_max * (g.nodes + 1.0)
    ph = math.pi * (g.nodes + 1.0)
    T, P = np.meshgrid(th, ph, indexing="ij")
    a = frame.radius
    W = np.outer(g.weights, g.weights) * (0.5 * theta_max * math.pi) * a * a * np.sin(T)
    pts = frame.from_spherical(T.ravel(), P.ravel())
    normals = (pts - frame.center) / a
    return CapRule(pts, W.ravel(), T.ravel(), P.ravel(), normals)


# ---------------------------------------------------------------------------
# annulus delta <= rho <= a
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RingRule:
    rho: np.ndarray
    alpha: np.ndarray
    weights: np.ndarray  # include the Jacobian rho
    delta: float
    a: float

    def points(self, frame) -> np.ndarray:
        """Global points on the flat base of a hemisphere frame."""
        e1, e2, _ = frame.basis
        return frame.center + self.rho[:, None] * (np.cos(self.alpha)[:, None] * e1
                                                   + np.sin(self.alpha)[:, None] * e2)


def ring_rule(a: float, delta: float, n: int, radial_scale: str = "interval") -> RingRule:
    """n x n Gauss rule in (rho, alpha) over [delta, a] x [0, 2 pi) with Jacobian rho.

    ``radial_scale="interval"`` is the exact mapping. ``"radius"`` keeps the
    nodes on [delta, a] but scales the radial weights by a/2 instead of
    (a - delta)/2; this over-weights the ring by a/(a - delta) and is only
    kept to regenerate the published de-singularisation table.
    """
    if not 0 < delta < a:
        raise QuadratureError("ring rule needs 0 < delta < a")
    g = gauss_legendre(n)
    rho, wr = g.on(delta, a)
    if radial_scale == "radius":
        wr = wr * (a / (a - delta))
    elif radial_scale != "interval":
        raise QuadratureError(f"unknown radial_scale {radial_scale!r}")
    alpha, wa = g.on(0.0, 2.0 * math.pi)
    R, A = np.meshgrid(rho, alpha, indexing="ij")
    W = np.outer(wr, wa) * R
    return RingRule(R.ravel(), A.ravel(), W.ravel(), float(delta), float(a))


# ---------------------------------------------------------------------------
# triangles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriRule:
    """Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2."""

    bary: np.ndarray     # (m, 3) barycentric coordinates
    weights: np.ndarray  # (m,)

    def on(self, verts) -> tuple[np.ndarray, np.ndarray]:
        """Physical points and weights (summing to the triangle area)."""
        v = np.asarray(verts, dtype=float)
        area = 0.5 * np.linalg.norm(np.cross(v[1] - v[0], v[2] - v[0]))
        return self.bary @ v, self.weights * (2.0 * area)


@lru_cache(maxsize=None)
def tri_rule(n: int) -> TriRule:
    """Collapsed (Duffy) n x n Gauss rule, exact for degree <= 2n - 2."""
    g = gauss_legendre(n)
    s, ws = g.on(0.0, 1.0)
    S, T = np.meshgrid(s, s, indexing="ij")
    W = np.outer(ws, ws) * (1.0 - S)
    u = S.ravel()
    v = (T * (1.0 - S)).ravel()
    bary = np.stack([1.0 - u - v, u, v], axis=1)
    return TriRule(bary, W.ravel())


@dataclass(frozen=True)
class PolarRule:
    """Polar rule about a point on a flat triangle.

    Per angular node ``k`` (direction ``dirs[k]``, weight ``w_angle[k]``) the
    ray reaches the opposite edge at distance ``reach[k]``; the 2D points are
    ``x + r * dirs`` with weights including the Jacobian r.
    """

    points: np.ndarray
    weights: np.ndarray
    r: np.ndarray
    dirs: np.ndarray
    angle_index: np.ndarray
    w_angle: np.ndarray
    reach: np.ndarray
    radial_nodes: np.ndarray
    radial_weights: np.ndarray


def polar_rule(verts, x, n: int = 20) -> PolarRule:
    """Split the triangle into sub-triangles about ``x`` and integrate in polar coordinates.

    Sub-triangles of zero area (``x`` on an edge or at a vertex) are skipped.
    """
    v = np.asarray(verts, dtype=float)
    x = np.asarray(x, dtype=float)
    g = gauss_legendre(n)
    s, ws = g.on(0.0, 1.0)
    normal = np.cross(v[1] - v[0], v[2] - v[0])
    scale = np.linalg.norm(normal)
    normal = normal / scale
    dirs_all, wang_all, reach_all = [], [], []
    for k in range(3):
        p, q = v[k], v[(k + 1) % 3]
        edge = q - p
        foot_t = np.dot(x - p, edge) / np.dot(edge, edge)
        foot = p + foot_t * edge
        hvec = foot - x
        h = np.linalg.norm(hvec)
        if h <= 1e-14 * math.sqrt(scale):
            continue
        e_h = hvec / h
        e_t = np.cross(normal, e_h)
        tp = np.dot(p - x, e_t)
        tq = np.dot(q - x, e_t)
        a0, a1 = math.atan2(tp, h), math.atan2(tq, h)
        ang = a0 + (a1 - a0) * s
        wang = np.abs(a1 - a0) * ws
        dirs = np.cos(ang)[:, None] * e_h + np.sin(ang)[:, None] * e_t
        dirs_all.append(dirs)
        wang_all.append(wang)
        reach_all.append(h / np.cos(ang))
    dirs = np.concatenate(dirs_all)
    wang = np.concatenate(wang_all)
    reach = np.concatenate(reach_all)
    r = reach[:, None] * s[None, :]
    w = wang[:, None] * reach[:, None] * ws[None, :] * r
    pts = x + r[..., None] * dirs[:, None, :]
    idx = np.repeat(np.arange(len(wang)), n)
    return PolarRule(pts.reshape(-1, 3), w.ravel(), r.ravel(), np.repeat(dirs, n, axis=0), idx,
                     wang, reach, s, ws)
