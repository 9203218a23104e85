"""Triangulated boundary patches: latitude bands on a sphere cap or a flat disk."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GeometryError
from .greens import orthonormal_basis


@dataclass(frozen=True, eq=False)
class PatchMesh:
    vertices: np.ndarray   # (nv, 3)
    triangles: np.ndarray  # (nt, 3) vertex indices, counter-clockwise about the normal

    def __post_init__(self):
        v = self.vertices[self.triangles]
        cross = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        area2 = np.linalg.norm(cross, axis=1)
        if np.any(area2 <= 0):
            raise GeometryError("degenerate triangle in patch mesh")
        edges = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1)
        object.__setattr__(self, "centroids", v.mean(axis=1))
        object.__setattr__(self, "areas", 0.5 * area2)
        object.__setattr__(self, "normals", cross / area2[:, None])
        object.__setattr__(self, "diameters", np.linalg.norm(edges, axis=2).max(axis=1))

    @property
    def n_panels(self) -> int:
        return len(self.triangles)

    def panel(self, i: int) -> np.ndarray:
        return self.vertices[self.triangles[i]]

    def permuted(self, perm) -> "PatchMesh":
        """Same mesh with panels reordered so that new panel k is old panel perm[k]."""
        return PatchMesh(self.vertices, self.triangles[np.asarray(perm)])

    def dump(self, path) -> None:
        """Plain-text dump: vertex count, vertices, triangle count, triangles."""
        path = Path(path)
        with path.open("w") as fh:
            fh.write(f"{len(self.vertices)}\n")
            np.savetxt(fh, self.vertices, fmt="%.17g")
            fh.write(f"{len(self.triangles)}\n")
            np.savetxt(fh, self.triangles, fmt="%d")

    @classmethod
    def load(cls, path) -> "PatchMesh":
        lines = Path(path).read_text().splitlines()
        nv = int(lines[0])
        verts = np.loadtxt(lines[1:1 + nv], ndmin=2)
        nt = int(lines[1 + nv])
        tris = np.loadtxt(lines[2 + nv:2 + nv + nt], dtype=np.int64, ndmin=2)
        return cls(verts, tris)


def _zipper(inner: list[int], outer: list[int]) -> list[tuple[int, int, int]]:
    """Triangulate the band between two closed vertex rings ordered by angle from 0."""
    n1, n2 = len(inner), len(outer)
    if n1 == 1:
        return [(inner[0], outer[j], outer[(j + 1) % n2]) for j in range(n2)]
    tris = []
    i = j = 0
    while i < n1 or j < n2:
        next_in = (i + 1) / n1
        next_out = (j + 1) / n2
        if j < n2 and (i >= n1 or next_out <= next_in):
            tris.append((inner[i % n1], outer[j], outer[(j + 1) % n2]))
            j += 1
        else:
            tris.append((inner[i], outer[j % n2], inner[(i + 1) % n1]))
            i += 1
    return tris


def latitude_mesh(surface, n_rings: int) -> PatchMesh:
    """Ring k (k = 0..n_rings) carries 6k vertices at parameter t = k / n_rings.

    ``surface(t, psi)`` maps the radial parameter and azimuth to 3D points and
    ``surface.normal(points)`` gives the desired normal orientation.
    """
    if n_rings < 1:
        raise GeometryError("need at least one ring")
    verts = [surface(np.array([0.0]), np.array([0.0]))[0]]
    rings = [[0]]
    for k in range(1, n_rings + 1):
        m = 6 * k
        psi = 2.0 * math.pi * np.arange(m) / m
        pts = surface(np.full(m, k / n_rings), psi)
        start = len(verts)
        verts.extend(pts)
        rings.append(list(range(start, start + m)))
    tris = []
    for k in range(1, n_rings + 1):
        tris.extend(_zipper(rings[k - 1], rings[k]))
    V = np.array(verts)
    T = np.array(tris, dtype=np.int64)
    # orient every triangle along the requested normal
    c = V[T].mean(axis=1)
    nrm = np.cross(V[T[:, 1]] - V[T[:, 0]], V[T[:, 2]] - V[T[:, 0]])
    flip = np.sum(nrm * surface.normal(c), axis=1) < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    return PatchMesh(V, T)


class SphereCapSurface:
    """Cap of the sphere (centre c, radius R) of angular radius beta_max about the point o."""

    def __init__(self, center, radius: float, o, beta_max: float, normal_sign: float):
        self.c = np.asarray(center, dtype=float)
        self.R = float(radius)
        self.w = (np.asarray(o, dtype=float) - self.c) / self.R
        self.e1, self.e2 = orthonormal_basis(self.w)
        self.beta_max = beta_max
        self.sign = normal_sign

    def __call__(self, t, psi):
        b = np.asarray(t)[:, None] * self.beta_max
        psi = np.asarray(psi)[:, None]
        return self.c + self.R * (np.cos(b) * self.w
                                  + np.sin(b) * (np.cos(psi) * self.e1 + np.sin(psi) * self.e2))

    def normal(self, pts):
        d = pts - self.c
        return self.sign * d / np.linalg.norm(d, axis=-1, keepdims=True)

    def lift(self, pts, plane_normals):
        """Radial projection of points on flat panels onto the sphere.

        Returns the projected points, the normals and the area Jacobian of the map.
        """
        d = pts - self.c
        rr = np.linalg.norm(d, axis=-1, keepdims=True)
        unit = d / rr
        cos_t = np.abs(np.sum(unit * plane_normals, axis=-1))
        jac = (self.R / rr[..., 0]) ** 2 * cos_t
        return self.c + self.R * unit, self.sign * unit, jac


class FlatDiskSurface:
    def __init__(self, o, radius: float, normal):
        self.o = np.asarray(o, dtype=float)
        self.a = float(radius)
        self.n = np.asarray(normal, dtype=float)
        self.e1, self.e2 = orthonormal_basis(self.n)

    def __call__(self, t, psi):
        r = np.asarray(t)[:, None] * self.a
        psi = np.asarray(psi)[:, None]
        return self.o + r * (np.cos(psi) * self.e1 + np.sin(psi) * self.e2)

    def normal(self, pts):
        return np.broadcast_to(self.n, pts.shape)

    def lift(self, pts, plane_normals):
        return pts, np.broadcast_to(self.n, pts.shape), np.ones(pts.shape[:-1])
