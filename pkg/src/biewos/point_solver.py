"""Neumann data at a single point of a flat boundary.

The normal derivative at the hemisphere centre x splits into

* ``sigma1``: the cap integral  -sum w h(y) (u(y) - phi(x))  with u from WOS,
* ``sigma2``: the regularized base-disk integral
  -(1/2pi) int_{S_a \\ B_delta} (1/rho^3 - 1/a^3)(phi(y) - phi(x)) dy.

The normal points into the hemisphere, away from the boundary (outward from
the conductor), so a positive value is a positive surface charge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GeometryError, SingularityError
from .geometry import SceneKind, Scene, boundary_values
from .greens import HemisphereFrame, h_kernel
from .quadrature import cap_rule, gauss_legendre, ring_rule
from .wos import WosConfig, batch_arrays, estimate_u_batch

# sampler(points) -> (means, variances, path counts)
Sampler = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class PointNeumannResult:
    sigma1: float
    sigma2: float
    total: float
    std_error: float
    n_paths: int
    config: dict = field(default_factory=dict)


def wos_sampler(scene: Scene, cfg: WosConfig) -> Sampler:
    def sample(points):
        return batch_arrays(estimate_u_batch(scene, points, cfg))

    return sample


def _center_value(scene: Scene, frame: HemisphereFrame) -> float:
    return float(boundary_values(scene, frame.center[None, :])[0])


def _check_flat(scene: Scene, frame: HemisphereFrame) -> None:
    if scene.kind is SceneKind.SPHERE:
        raise GeometryError("the point solver needs a flat boundary; use the patch solver")
    if abs(abs(frame.axis[2]) - 1.0) > 1e-12:
        raise GeometryError("hemisphere axis must be normal to the boundary plane")


# ---------------------------------------------------------------------------
# sigma2
# ---------------------------------------------------------------------------


def sigma2_prime(scene: Scene, frame: HemisphereFrame, delta: float, n_g2: int,
                 radial_scale: str = "interval", method: str = "auto") -> float:
    """Regularized disk integral.

    ``method="ring"`` applies the ring rule outside the exclusion radius delta.
    ``"exact"`` (plate scenes with per-plate constants) integrates the
    piecewise-constant integrand without exclusion radius; ``"auto"`` picks
    ``exact`` whenever it applies.
    """
    _check_flat(scene, frame)
    phi_x = _center_value(scene, frame)
    if method == "auto":
        method = "exact" if (scene.kind is SceneKind.PLATE_SET and scene.piecewise_constant) else "ring"
    if method == "exact":
        return _sigma2_plates_exact(scene, frame, phi_x) + 0.0  # no negative zero
    if method != "ring":
        raise ValueError(f"unknown sigma2 method {method!r}")
    a = frame.radius
    rule = ring_rule(a, delta, n_g2, radial_scale)
    vals = boundary_values(scene, rule.points(frame))
    kern = (1.0 / rule.rho ** 3 - 1.0 / a ** 3) / (2.0 * math.pi)
    return float(-np.sum(rule.weights * kern * (vals - phi_x))) + 0.0


def _ray_box(x, y, dx, dy, box):
    """Parameter interval of the ray (x, y) + t (dx, dy), t >= 0, inside an axis-aligned box."""
    x0, x1, y0, y1 = box
    lo, hi = 0.0, math.inf
    for p, d, a, b in ((x, dx, x0, x1), (y, dy, y0, y1)):
        if abs(d) < 1e-300:
            if p < a or p > b:
                return None
            continue
        t1, t2 = (a - p) / d, (b - p) / d
        if t1 > t2:
            t1, t2 = t2, t1
        lo, hi = max(lo, t1), min(hi, t2)
    return (lo, hi) if hi > lo else None


def _critical_angles(x, y, a, box):
    """Angles about (x, y) where the clipped ray-box interval changes form."""
    x0, x1, y0, y1 = box
    out = [math.atan2(cy - y, cx - x) for cx in (x0, x1) for cy in (y0, y1)]
    # intersections of the circle of radius a with the box edges
    for c in (x0, x1):
        s = a * a - (c - x) ** 2
        if s >= 0:
            for yy in (y + math.sqrt(s), y - math.sqrt(s)):
                out.append(math.atan2(yy - y, c - x))
    for c in (y0, y1):
        s = a * a - (c - y) ** 2
        if s >= 0:
            for xx in (x + math.sqrt(s), x - math.sqrt(s)):
                out.append(math.atan2(c - y, xx - x))
    return out


def _disk_box_integrals(x, y, a, box, n=24):
    """(area, int (1/rho^3 - 1/a^3) dA) over disk(x, a) intersected with a box.

    Polar about (x, y): the radial integrals are analytic, the angular one is
    Gauss on each smooth piece between critical angles.
    """
    angs = sorted({(t + 2 * math.pi) % (2 * math.pi) for t in _critical_angles(x, y, a, box)}
                  | {0.0, 2 * math.pi})
    g = gauss_legendre(n)
    area = 0.0
    hyp = 0.0

    def prim(r):
        return -1.0 / r - r * r / (2.0 * a ** 3)

    for lo, hi in zip(angs[:-1], angs[1:]):
        if hi - lo < 1e-15:
            continue
        ts, ws = g.on(lo, hi)
        for t, w in zip(ts, ws):
            iv = _ray_box(x, y, math.cos(t), math.sin(t), box)
            if iv is None:
                continue
            r0, r1 = iv[0], min(iv[1], a)
            if r1 <= r0:
                continue
            area += w * 0.5 * (r1 * r1 - r0 * r0)
            if r0 <= 1e-14 * a:
                hyp = math.inf
            else:
                hyp += w * (prim(r1) - prim(r0))
    return area, hyp


def _sigma2_plates_exact(scene: Scene, frame: HemisphereFrame, phi_x: float) -> float:
    a = frame.radius
    x, y = float(frame.center[0]), float(frame.center[1])
    total_area = 0.0
    acc = 0.0
    for plate, level in zip(scene.plates, scene.levels):
        box = (plate.x0, plate.x1, plate.y0, plate.y1)
        area, hyp = _disk_box_integrals(x, y, a, box)
        total_area += area
        if area == 0.0 or level == phi_x:
            continue
        if not math.isfinite(hyp):
            raise SingularityError("hemisphere centre lies on a data discontinuity")
        acc += (level - phi_x) * hyp
    if abs(total_area - math.pi * a * a) > 1e-9 * math.pi * a * a:
        raise GeometryError("hemisphere base disk is not covered by the plates")
    return -acc / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# sigma1
# ---------------------------------------------------------------------------


def sigma1_prime(scene: Scene, frame: HemisphereFrame, n_g1: int, wos_cfg: WosConfig | None = None,
                 sampler: Sampler | None = None) -> tuple[float, float]:
    """Cap integral with sampled potentials; returns (value, propagated standard error)."""
    _check_flat(scene, frame)
    if sampler is None:
        if wos_cfg is None:
            raise ValueError("need a WosConfig or a sampler")
        sampler = wos_sampler(scene, wos_cfg)
    phi_x = _center_value(scene, frame)
    rule = cap_rule(frame, n_g1)
    means, variances, counts = sampler(rule.points)
    wh = rule.weights * h_kernel(frame, rule.points)
    value = -float(np.sum(wh * (np.asarray(means) - phi_x)))
    counts = np.asarray(counts, dtype=float)
    var_terms = np.where(counts > 0, wh * wh * np.asarray(variances) / np.maximum(counts, 1.0), 0.0)
    return value, math.sqrt(float(np.sum(var_terms)))


def solve_point(scene: Scene, frame: HemisphereFrame, n_g1: int = 20, n_g2: int = 20,
                delta: float | None = None, wos_cfg: WosConfig | None = None,
                sampler: Sampler | None = None, radial_scale: str = "interval",
                sigma2_method: str = "auto") -> PointNeumannResult:
    """Sigma1 + Sigma2 at ``frame.center``; ``delta`` defaults to 1e-4 a."""
    if delta is None:
        delta = 1e-4 * frame.radius
    wos_cfg = wos_cfg or WosConfig()
    s1, se = sigma1_prime(scene, frame, n_g1, wos_cfg, sampler)
    s2 = sigma2_prime(scene, frame, delta, n_g2, radial_scale, sigma2_method)
    n_paths = 0 if sampler is not None else n_g1 * n_g1 * wos_cfg.n_paths
    cfg = dict(a=frame.radius, delta=delta, n_g1=n_g1, n_g2=n_g2, n_path=wos_cfg.n_paths,
               eps=wos_cfg.eps_shell, trunc_radius=wos_cfg.trunc_radius, seed=wos_cfg.seed)
    return PointNeumannResult(s1, s2, s1 + s2, se, n_paths, cfg)


def point_frame(center, radius: float, axis=(0.0, 0.0, 1.0)) -> HemisphereFrame:
    return HemisphereFrame(np.asarray(center, dtype=float), float(radius), np.asarray(axis, dtype=float))
