"""Potential off the boundary from Dirichlet and Neumann data (representation formula).

    u(x) = sum_panels [G(x, y) du/dn(y) - dG/dn_y(x, y) u(y)] * area

with G = 1/(4 pi |x - y|) and n the outward normal of the solution domain
(pointing into the conductor). Midpoint rule per panel; targets closer to a
panel than its diameter are refused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, NearFieldError
from .mesh import PatchMesh

_BLOCK = 256


@dataclass(frozen=True, eq=False)
class BoundaryData:
    centroids: np.ndarray
    areas: np.ndarray
    normals: np.ndarray    # outward of the solution domain
    u: np.ndarray
    dudn: np.ndarray       # derivative along ``normals``
    diameters: np.ndarray

    def __post_init__(self):
        n = len(self.centroids)
        for name in ("areas", "normals", "u", "dudn", "diameters"):
            if len(getattr(self, name)) != n:
                raise GeometryError(f"{name} has the wrong length")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.dudn))):
            raise ValueError("boundary data must be finite")

    @classmethod
    def from_mesh(cls, mesh: PatchMesh, u, dudn, outward_sign: float = 1.0) -> "BoundaryData":
        """Panel data on a mesh; ``outward_sign`` flips mesh normals that point into the domain."""
        return cls(mesh.centroids, mesh.areas, outward_sign * mesh.normals,
                   np.broadcast_to(np.asarray(u, dtype=float), (mesh.n_panels,)).copy(),
                   np.broadcast_to(np.asarray(dudn, dtype=float), (mesh.n_panels,)).copy(),
                   mesh.diameters)

    def scaled(self, alpha: float) -> "BoundaryData":
        return BoundaryData(self.centroids, self.areas, self.normals, alpha * self.u,
                            alpha * self.dudn, self.diameters)

    def __add__(self, other: "BoundaryData") -> "BoundaryData":
        return BoundaryData(self.centroids, self.areas, self.normals, self.u + other.u,
                            self.dudn + other.dudn, self.diameters)


def evaluate(data: BoundaryData, x) -> np.ndarray | float:
    """Potential at one target (3,) or many (m, 3)."""
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.empty(len(xs))
    for lo in range(0, len(xs), _BLOCK):
        t = xs[lo:lo + _BLOCK]
        d = t[:, None, :] - data.centroids[None, :, :]
        r = np.linalg.norm(d, axis=2)
        if np.any(r < data.diameters[None, :]):
            raise NearFieldError("target is within one panel diameter of the boundary")
        g = 1.0 / (4.0 * math.pi * r)
        dg = np.einsum("mpk,pk->mp", d, data.normals) / (4.0 * math.pi * r ** 3)
        out[lo:lo + _BLOCK] = (g * data.dudn - dg * data.u) @ data.areas
    return float(out[0]) if np.ndim(x) == 1 else out


def icosphere(subdivisions: int, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> PatchMesh:
    """Closed triangulated sphere with 20 * 4^k panels and outward normals."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t), (0, -1, -t),
             (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    V = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = V[i] + V[j]
                V.append(m / np.linalg.norm(m))
                cache[key] = len(V) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    verts_arr = np.asarray(center, dtype=float) + radius * np.array(V)
    tris = np.array(faces, dtype=np.int64)
    v = verts_arr[tris]
    nrm = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    flip = np.sum(nrm * (v.mean(axis=1) - np.asarray(center, dtype=float)), axis=1) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return PatchMesh(verts_arr, tris)
