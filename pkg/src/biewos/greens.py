"""Free-space, whole-sphere and hemisphere Green's functions of -Laplace.

The sphere function uses one Kelvin image; the hemisphere (sphere cut by the
plane through its centre normal to ``axis``) adds the mirror images of the
source and of its Kelvin image. The Kelvin term is written in the symmetric
form ``1 / sqrt(|x|^2 |y|^2 / a^2 - 2 x.y + a^2)`` (positions relative to the
sphere centre), which is smooth in both arguments and differentiates without
spherical-coordinate singularities.

All functions broadcast over leading dimensions of ``(..., 3)`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, SingularityError

FOUR_PI = 4.0 * math.pi
_COINCIDENT = 1e-12


def orthonormal_basis(axis) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing ``axis`` to a right-handed frame (branch-free)."""
    n = np.asarray(axis, dtype=float)
    s = math.copysign(1.0, n[2])
    a = -1.0 / (s + n[2])
    b = n[0] * n[1] * a
    e1 = np.array([1.0 + s * n[0] * n[0] * a, s * b, -s * n[0]])
    e2 = np.array([b, s + n[1] * n[1] * a, -n[1]])
    return e1, e2


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if not nrm > 0:
        raise GeometryError("zero-length axis")
    return v / nrm


@dataclass(frozen=True, eq=False)
class SphereFrame:
    center: np.ndarray
    radius: float
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "axis", _unit(self.axis))

    @property
    def basis(self) -> np.ndarray:
        e1, e2 = orthonormal_basis(self.axis)
        return np.stack([e1, e2, self.axis])

    def from_spherical(self, theta, phi) -> np.ndarray:
        """Points on the sphere at polar angle ``theta`` from ``axis`` and azimuth ``phi``."""
        e1, e2, e3 = self.basis
        theta = np.asarray(theta, dtype=float)[..., None]
        phi = np.asarray(phi, dtype=float)[..., None]
        return self.center + self.radius * (np.sin(theta) * (np.cos(phi) * e1 + np.sin(phi) * e2)
                                            + np.cos(theta) * e3)

    def to_spherical(self, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(r, theta, phi) of points relative to the frame; phi in [0, 2 pi)."""
        e1, e2, e3 = self.basis
        d = np.asarray(y, dtype=float) - self.center
        r = np.linalg.norm(d, axis=-1)
        c = np.clip((d @ e3) / np.where(r > 0, r, 1.0), -1.0, 1.0)
        phi = np.mod(np.arctan2(d @ e2, d @ e1), 2.0 * math.pi)
        return r, np.arccos(c), phi


@dataclass(frozen=True, eq=False)
class HemisphereFrame(SphereFrame):
    """Half ball of radius ``radius`` over the plane through ``center`` normal to ``axis``.

    ``axis`` points from the boundary into the solution domain.
    """

    def mirror(self, y) -> np.ndarray:
        d = np.asarray(y, dtype=float) - self.center
        return y - 2.0 * (d @ self.axis)[..., None] * self.axis

    def mirror_vec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v - 2.0 * (v @ self.axis)[..., None] * self.axis


@dataclass(frozen=True)
class ImageSet:
    locations: np.ndarray
    charges: np.ndarray


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _guard(x, y, scale):
    d = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), axis=-1)
    if np.any(d < _COINCIDENT * scale):
        raise SingularityError("kernel evaluated at coincident points")


# ---------------------------------------------------------------------------
# free space
# ---------------------------------------------------------------------------


def fundamental(x, y):
    """1 / (4 pi |x - y|)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _guard(x, y, 1.0)
    out = 1.0 / (FOUR_PI * np.linalg.norm(x - y, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def _free_terms(x, y, n_x=None, n_y=None):
    d = x - y
    r2 = _dot(d, d)
    r = np.sqrt(r2)
    inv_r3 = 1.0 / (r2 * r)
    g = 1.0 / r
    dgy = _dot(n_y, d) * inv_r3 if n_y is not None else None
    dgx = -_dot(n_x, d) * inv_r3 if n_x is not None else None
    d2 = None
    if n_x is not None and n_y is not None:
        d2 = _dot(n_x, n_y) * inv_r3 - 3.0 * _dot(n_x, d) * _dot(n_y, d) * inv_r3 / r2
    return g, dgx, dgy, d2


def _kelvin_terms(x, y, a, n_x=None, n_y=None):
    """Q^{-1/2} and its derivatives, Q = |x|^2|y|^2/a^2 - 2 x.y + a^2 (centre at origin)."""
    xx = _dot(x, x)
    yy = _dot(y, y)
    a2 = a * a
    q = xx * yy / a2 - 2.0 * _dot(x, y) + a2
    q12 = np.sqrt(q)
    q32 = q * q12
    g = 1.0 / q12
    dqx = dqy = None
    dgx = dgy = d2 = None
    if n_x is not None:
        dqx = 2.0 * yy * _dot(n_x, x) / a2 - 2.0 * _dot(n_x, y)
        dgx = -0.5 * dqx / q32
    if n_y is not None:
        dqy = 2.0 * xx * _dot(n_y, y) / a2 - 2.0 * _dot(n_y, x)
        dgy = -0.5 * dqy / q32
    if n_x is not None and n_y is not None:
        mixed = 4.0 * _dot(n_x, x) * _dot(n_y, y) / a2 - 2.0 * _dot(n_x, n_y)
        d2 = 0.75 * dqx * dqy / (q32 * q) - 0.5 * mixed / q32
    return g, dgx, dgy, d2


def _sphere_parts(frame: SphereFrame, x, y, n_x=None, n_y=None):
    x = np.asarray(x, dtype=float) - frame.center
    y = np.asarray(y, dtype=float) - frame.center
    _guard(x, y, frame.radius)
    n_x = None if n_x is None else np.asarray(n_x, dtype=float)
    n_y = None if n_y is None else np.asarray(n_y, dtype=float)
    f = _free_terms(x, y, n_x, n_y)
    k = _kelvin_terms(x, y, frame.radius, n_x, n_y)
    return tuple(None if fa is None else (fa - ka) / FOUR_PI for fa, ka in zip(f, k))


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def sphere_g(frame: SphereFrame, x, y):
    return _scalar(_sphere_parts(frame, x, y)[0])


def sphere_dg_dny(frame: SphereFrame, x, y, n_y):
    return _scalar(_sphere_parts(frame, x, y, None, n_y)[2])


def sphere_dg_dnx(frame: SphereFrame, x, y, n_x):
    return _scalar(_sphere_parts(frame, x, y, n_x, None)[1])


def sphere_d2g(frame: SphereFrame, x, n_x, y, n_y):
    return _scalar(_sphere_parts(frame, x, y, n_x, n_y)[3])


def sphere_kernels(frame: SphereFrame, x, y, n_x=None, n_y=None):
    """(G, dG/dn_x, dG/dn_y, d2G/dn_x dn_y) in one pass; absent normals give None."""
    return _sphere_parts(frame, x, y, n_x, n_y)


def sphere_kelvin_kernels(frame: SphereFrame, x, y, n_x=None, n_y=None):
    """Only the (smooth) Kelvin-image part of ``sphere_kernels``."""
    x = np.asarray(x, dtype=float) - frame.center
    y = np.asarray(y, dtype=float) - frame.center
    k = _kelvin_terms(x, y, frame.radius, n_x, n_y)
    return tuple(None if ka is None else -ka / FOUR_PI for ka in k)


def sphere_kernels_unchecked(frame: SphereFrame, x, y, n_x=None, n_y=None):
    """``sphere_kernels`` without the coincidence guard, for bulk quadrature."""
    x = np.asarray(x, dtype=float) - frame.center
    y = np.asarray(y, dtype=float) - frame.center
    f = _free_terms(x, y, n_x, n_y)
    k = _kelvin_terms(x, y, frame.radius, n_x, n_y)
    return tuple(None if fa is None else (fa - ka) / FOUR_PI for fa, ka in zip(f, k))


def free_kernels(x, y, n_x=None, n_y=None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f = _free_terms(x, y, n_x, n_y)
    return tuple(None if fa is None else fa / FOUR_PI for fa in f)


# ---------------------------------------------------------------------------
# hemisphere
# ---------------------------------------------------------------------------


def hemisphere_images(frame: HemisphereFrame, source) -> ImageSet:
    """Source, Kelvin image, mirrored source and mirrored Kelvin image with their charges."""
    s = np.asarray(source, dtype=float)
    d = s - frame.center
    rho = float(np.linalg.norm(d))
    if rho == 0.0:
        raise SingularityError("Kelvin image of the centre is at infinity")
    a = frame.radius
    k = frame.center + d * (a * a / (rho * rho))
    locs = np.stack([s, k, frame.mirror(s), frame.mirror(k)])
    return ImageSet(locs, np.array([1.0, -a / rho, -1.0, a / rho]))


def hemisphere_g(frame: HemisphereFrame, x, y):
    y = np.asarray(y, dtype=float)
    direct = _sphere_parts(frame, x, y)[0]
    mirrored = _sphere_parts(frame, x, frame.mirror(y))[0]
    return _scalar(direct - mirrored)


def hemisphere_d2g(frame: HemisphereFrame, xprime, y, n_x, n_y):
    """Mixed second normal derivative of the hemisphere Green's function."""
    y = np.asarray(y, dtype=float)
    n_y = np.asarray(n_y, dtype=float)
    direct = _sphere_parts(frame, xprime, y, n_x, n_y)[3]
    mirrored = _sphere_parts(frame, xprime, frame.mirror(y), n_x, frame.mirror_vec(n_y))[3]
    return _scalar(direct - mirrored)


def h_kernel(frame: HemisphereFrame, y_on_gamma):
    """3 cos(theta) / (2 pi a^3): the centre-to-cap kernel of the hemisphere."""
    d = np.asarray(y_on_gamma, dtype=float) - frame.center
    a = frame.radius
    r = np.linalg.norm(d, axis=-1)
    if np.any(np.abs(r - a) > 1e-9 * a):
        raise GeometryError("point is not on the hemispherical cap")
    cos_t = (d @ frame.axis) / a
    return _scalar(3.0 * cos_t / (2.0 * math.pi * a ** 3))


def disk_d2g_limit(rho, a):
    """Centre-limit kernel on the flat base: (1/2pi)(1/rho^3 - 1/a^3)."""
    rho = np.asarray(rho, dtype=float)
    return _scalar((1.0 / rho ** 3 - 1.0 / a ** 3) / (2.0 * math.pi))
