"""Scenes: boundary geometry, Dirichlet data and nearest-feature queries.

Supported boundaries are a horizontal plane (half-space above it), a set of
zero-thickness coplanar rectangles, a zero-thickness disk, and a sphere
(interior or exterior). The nearest-feature kernel is compiled with numba so
the random-walk sampler can call it per step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba as nb
import numpy as np

from .errors import ClassificationError, DomainViolationError, GeometryError

INFINITY = -1
FAILED = -2

# Dirichlet data is evaluated on batches: (points (n, 3), feature ids (n,)) -> (n,)
DirichletFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class SceneKind(enum.IntEnum):
    HALF_SPACE = 0
    PLATE_SET = 1
    THIN_DISK = 2
    SPHERE = 3


class DomainSide(enum.Enum):
    EXTERIOR = "exterior"
    INTERIOR = "interior"


@dataclass(frozen=True)
class Plate:
    x0: float
    x1: float
    y0: float
    y1: float
    potential: float = 0.0
    name: str = ""

    def contains(self, x: float, y: float, tol: float = 0.0) -> bool:
        return (self.x0 - tol <= x <= self.x1 + tol) and (self.y0 - tol <= y <= self.y1 + tol)


@dataclass(frozen=True)
class DistanceQuery:
    distance: float
    feature_id: int


@dataclass(frozen=True)
class ExitRecord:
    exit_point: np.ndarray
    feature_id: int  # INFINITY or FAILED for walks that did not hit the boundary
    steps: int

    @property
    def is_infinity(self) -> bool:
        return self.feature_id == INFINITY


@dataclass(frozen=True, eq=False)
class Scene:
    """Immutable boundary description plus Dirichlet data.

    ``levels`` is set when the data is constant per feature; the
    last-passage estimator and the exact disk-integral path rely on it.
    """

    kind: SceneKind
    params: np.ndarray
    dirichlet: DirichletFn
    domain_side: DomainSide = DomainSide.EXTERIOR
    plates: tuple[Plate, ...] = ()
    levels: tuple[float, ...] | None = None
    name: str = ""
    rects: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        params = np.ascontiguousarray(self.params, dtype=np.float64)
        params.setflags(write=False)
        object.__setattr__(self, "params", params)
        if self.kind is SceneKind.PLATE_SET:
            if not self.plates:
                raise GeometryError("plate set needs at least one plate")
            rects = np.array([[p.x0, p.x1, p.y0, p.y1] for p in self.plates], dtype=np.float64)
            if np.any(rects[:, 1] <= rects[:, 0]) or np.any(rects[:, 3] <= rects[:, 2]):
                raise GeometryError("degenerate plate")
            _check_no_overlap(rects)
        else:
            rects = np.zeros((1, 4))
        rects.setflags(write=False)
        object.__setattr__(self, "rects", rects)

    @property
    def n_features(self) -> int:
        return len(self.plates) if self.kind is SceneKind.PLATE_SET else 1

    @property
    def piecewise_constant(self) -> bool:
        return self.levels is not None

    @property
    def is_bounded_domain(self) -> bool:
        return self.kind is SceneKind.SPHERE and self.domain_side is DomainSide.INTERIOR

    def boundary_normal(self, p) -> np.ndarray:
        """Unit normal at a boundary point, pointing into the solution domain."""
        p = np.asarray(p, dtype=float)
        if self.kind is SceneKind.SPHERE:
            c = self.params[:3]
            n = (p - c) / np.linalg.norm(p - c)
            return n if self.domain_side is DomainSide.EXTERIOR else -n
        # planar features: the walk domain lies on the +z side for the patch setups
        return np.array([0.0, 0.0, 1.0])


def _check_no_overlap(rects: np.ndarray) -> None:
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            a, b = rects[i], rects[j]
            ox = min(a[1], b[1]) - max(a[0], b[0])
            oy = min(a[3], b[3]) - max(a[2], b[2])
            if ox > 1e-12 and oy > 1e-12:
                raise GeometryError(f"plates {i} and {j} overlap")


# ---------------------------------------------------------------------------
# compiled nearest-feature kernel
# ---------------------------------------------------------------------------


@nb.njit(cache=True)
def nearest_feature(kind, params, rects, x, y, z):
    """Signed distance to the boundary, feature id and projection.

    The distance is negative for points outside the solution domain.
    """
    if kind == 0:
        h = params[0]
        return z - h, 0, x, y, h
    elif kind == 1:
        zp = params[0]
        best = np.inf
        fid = 0
        bx = x
        by = y
        for i in range(rects.shape[0]):
            px = min(max(x, rects[i, 0]), rects[i, 1])
            py = min(max(y, rects[i, 2]), rects[i, 3])
            d = math.sqrt((x - px) ** 2 + (y - py) ** 2 + (z - zp) ** 2)
            if d < best:
                best = d
                fid = i
                bx = px
                by = py
        return best, fid, bx, by, zp
    elif kind == 2:
        b = params[0]
        zp = params[1]
        rho = math.sqrt(x * x + y * y)
        if rho <= b:
            return abs(z - zp), 0, x, y, zp
        s = b / rho
        return math.sqrt((rho - b) ** 2 + (z - zp) ** 2), 0, x * s, y * s, zp
    else:
        cx = params[0]
        cy = params[1]
        cz = params[2]
        r = params[3]
        side = params[4]
        dx = x - cx
        dy = y - cy
        dz = z - cz
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist == 0.0:
            return side * (dist - r), 0, cx, cy, cz + r
        s = r / dist
        return side * (dist - r), 0, cx + dx * s, cy + dy * s, cz + dz * s


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------


def _raw_nearest(scene: Scene, p) -> tuple[float, int, np.ndarray]:
    p = np.asarray(p, dtype=float)
    d, fid, px, py, pz = nearest_feature(int(scene.kind), scene.params, scene.rects,
                                         float(p[0]), float(p[1]), float(p[2]))
    return d, int(fid), np.array([px, py, pz])


def distance_to_boundary(scene: Scene, p) -> DistanceQuery:
    d, fid, _ = _raw_nearest(scene, p)
    if not d > 0.0:
        raise DomainViolationError(f"point {np.asarray(p).tolist()} is not inside the solution domain")
    return DistanceQuery(d, fid)


def project_to_boundary(scene: Scene, p) -> tuple[np.ndarray, int, float]:
    """Nearest boundary point, its feature id and the unsigned distance."""
    d, fid, q = _raw_nearest(scene, p)
    return q, fid, abs(d)


def classify_exit(scene: Scene, p, eps: float, trunc_radius: float = math.inf) -> int:
    p = np.asarray(p, dtype=float)
    if np.linalg.norm(p) > trunc_radius:
        return INFINITY
    _, fid, dist = project_to_boundary(scene, p)
    if dist > eps:
        raise ClassificationError(f"point {p.tolist()} is {dist:.3g} from the boundary (eps={eps:g})")
    return fid


def boundary_values(scene: Scene, points, tol: float = 1e-9) -> np.ndarray:
    """Dirichlet data at points lying on the boundary (within ``tol``)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    proj = np.empty_like(pts)
    fids = np.empty(len(pts), dtype=np.int64)
    for i, p in enumerate(pts):
        q, fid, dist = project_to_boundary(scene, p)
        if dist > tol:
            raise ClassificationError(f"point {p.tolist()} is {dist:.3g} off the boundary")
        proj[i] = q
        fids[i] = fid
    return np.asarray(scene.dirichlet(proj, fids), dtype=float)


@nb.njit(cache=True)
def _project_many(kind, params, rects, pts, out, fids, dist):
    for i in range(pts.shape[0]):
        d, f, px, py, pz = nearest_feature(kind, params, rects, pts[i, 0], pts[i, 1], pts[i, 2])
        out[i, 0] = px
        out[i, 1] = py
        out[i, 2] = pz
        fids[i] = f
        dist[i] = abs(d)


def project_many(scene: Scene, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised ``project_to_boundary``: (projections, feature ids, distances)."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
    out = np.empty_like(pts)
    fids = np.empty(len(pts), dtype=np.int64)
    dist = np.empty(len(pts))
    _project_many(int(scene.kind), scene.params, scene.rects, pts, out, fids, dist)
    return out, fids, dist


def projected_values(scene: Scene, points) -> np.ndarray:
    """Dirichlet data at the boundary projections of arbitrary points."""
    proj, fids, _ = project_many(scene, points)
    return np.asarray(scene.dirichlet(proj, fids), dtype=float)


def eval_dirichlet(scene: Scene, p, eps: float = 1e-5) -> float:
    """Dirichlet value at the projection of a point within ``eps`` of the boundary."""
    q, fid, dist = project_to_boundary(scene, p)
    if dist > eps:
        raise ClassificationError(f"point {np.asarray(p).tolist()} is {dist:.3g} from the boundary")
    return float(scene.dirichlet(q[None, :], np.array([fid]))[0])


# ---------------------------------------------------------------------------
# scene constructors
# ---------------------------------------------------------------------------


def _feature_levels(levels: Sequence[float]) -> DirichletFn:
    table = np.asarray(levels, dtype=float)

    def phi(points, fids):
        return table[np.asarray(fids, dtype=np.int64)]

    return phi


def half_space(dirichlet: DirichletFn, height: float = 0.0, name: str = "half_space") -> Scene:
    """Domain ``z > height`` bounded by the plane ``z = height``."""
    return Scene(SceneKind.HALF_SPACE, np.array([height]), dirichlet, name=name)


def point_charge_half_space(strength: float = 1.0, depth: float = 1.0) -> Scene:
    """Upper half-space whose data is the potential of a charge below the plane.

    ``strength`` is the prefactor ``q'/(4 pi eps0)``: u = strength / |r - (0, 0, -depth)|.
    """

    def phi(points, fids):
        p = np.atleast_2d(points)
        return strength / np.sqrt(p[:, 0] ** 2 + p[:, 1] ** 2 + (p[:, 2] + depth) ** 2)

    return half_space(phi, name="point_charge_half_space")


def plate_set(plates: Sequence[Plate], dirichlet: DirichletFn | None = None, z: float = 0.0,
              name: str = "plate_set") -> Scene:
    """Coplanar zero-thickness rectangles; per-plate potentials unless ``dirichlet`` is given."""
    plates = tuple(plates)
    if dirichlet is None:
        levels = tuple(float(p.potential) for p in plates)
        return Scene(SceneKind.PLATE_SET, np.array([z]), _feature_levels(levels),
                     plates=plates, levels=levels, name=name)
    return Scene(SceneKind.PLATE_SET, np.array([z]), dirichlet, plates=plates, name=name)


FOUR_PLATE_NAMES = ("I", "II", "III", "IV")


def four_plates(potentials: Sequence[float] = (0.0, 1.0, 0.0, 0.0),
                dirichlet: DirichletFn | None = None) -> Scene:
    """Four unit squares tiling [-1, 1]^2 by quadrant (I: x>0,y>0, II: x<0,y>0, ...)."""
    boxes = [(0.0, 1.0, 0.0, 1.0), (-1.0, 0.0, 0.0, 1.0), (-1.0, 0.0, -1.0, 0.0), (0.0, 1.0, -1.0, 0.0)]
    plates = [Plate(*box, potential=float(v), name=nm)
              for box, v, nm in zip(boxes, potentials, FOUR_PLATE_NAMES)]
    return plate_set(plates, dirichlet, name="four_plates")


def sine_data(m: float, n: float) -> DirichletFn:
    def phi(points, fids):
        p = np.atleast_2d(points)
        return np.sin(m * p[:, 0]) * np.sin(n * p[:, 1])

    return phi


def thin_disk(radius: float = 1.0, potential: float = 1.0, z: float = 0.0) -> Scene:
    """Zero-thickness disk of the given radius centred on the z axis."""
    if radius <= 0:
        raise GeometryError("disk radius must be positive")
    levels = (float(potential),)
    return Scene(SceneKind.THIN_DISK, np.array([radius, z]), _feature_levels(levels),
                 levels=levels, name="thin_disk")


def sphere(radius: float, dirichlet: DirichletFn, center=(0.0, 0.0, 0.0),
           side: DomainSide = DomainSide.EXTERIOR, levels: tuple[float, ...] | None = None,
           name: str = "sphere") -> Scene:
    if radius <= 0:
        raise GeometryError("sphere radius must be positive")
    sgn = 1.0 if side is DomainSide.EXTERIOR else -1.0
    params = np.array([*np.asarray(center, dtype=float), radius, sgn])
    return Scene(SceneKind.SPHERE, params, dirichlet, domain_side=side, levels=levels, name=name)


def point_charge_sphere(radius: float = 3.0, charge: float = 1.0) -> Scene:
    """Exterior of a sphere carrying the potential of a centred charge, u = q/(4 pi r)."""
    value = charge / (4.0 * math.pi * radius)

    def phi(points, fids):
        return np.full(len(np.atleast_2d(points)), value)

    return sphere(radius, phi, levels=(value,), name="point_charge_sphere")


def constant_data(value: float) -> DirichletFn:
    def phi(points, fids):
        return np.full(len(np.atleast_2d(points)), float(value))

    return phi
