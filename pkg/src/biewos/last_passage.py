"""Last-passage Monte Carlo estimate of the charge density at a flat conductor point.

Walks start on the hemisphere cap with density proportional to cos(theta) and
the estimator is (3/2a) * mean(phi(x) - phi(exit)), phi = 0 at infinity. For
0/1 potentials this is (3/2a) * (paths not returning to the 1-level) / N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ApplicabilityError
from .geometry import FAILED, INFINITY, Scene, boundary_values
from .greens import HemisphereFrame
from .rng import TAG_START, uniform_pairs
from .wos import WosConfig, _reduce, exit_values, walk_many

# walker(starts) -> (exit points, feature ids)
Walker = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

_CHUNK = 1 << 20


@dataclass(frozen=True)
class LastPassageResult:
    sigma_lp: float
    std_error: float
    n_paths: int
    n_infinity: int
    n_failed: int
    feature_counts: tuple[int, ...]


def sample_start_point(frame: HemisphereFrame, u) -> np.ndarray:
    """Cap points with density ~ cos(theta) from uniforms ``u`` of shape (..., 2)."""
    u = np.asarray(u, dtype=float)
    theta = np.arcsin(np.sqrt(u[..., 0]))
    phi = 2.0 * math.pi * u[..., 1]
    return frame.from_spherical(theta, phi)


def sample_start_points(frame: HemisphereFrame, n: int, seed: int) -> np.ndarray:
    return sample_start_point(frame, uniform_pairs(seed, n, tag=TAG_START))


def _check_applicable(scene: Scene, phi_x: float) -> None:
    if not scene.piecewise_constant:
        raise ApplicabilityError("last-passage needs piecewise-constant boundary data")
    if phi_x == 0.0 or any(v not in (0.0, phi_x) for v in scene.levels):
        raise ApplicabilityError("last-passage supports two levels: 0 and the potential at x")


def estimate_lp(scene: Scene, frame: HemisphereFrame, n_paths: int, wos_cfg: WosConfig | None = None,
                permissive: bool = False, walker: Walker | None = None) -> LastPassageResult:
    """Last-passage estimate; ``permissive`` allows general data (biased unless it is 0/1)."""
    cfg = wos_cfg or WosConfig()
    phi_x = float(boundary_values(scene, frame.center[None, :])[0])
    if not permissive:
        _check_applicable(scene, phi_x)
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    starts = sample_start_points(frame, n_paths, cfg.seed)
    a = frame.radius
    vals_all = np.empty(n_paths)
    fid_all = np.empty(n_paths, dtype=np.int64)
    for lo in range(0, n_paths, _CHUNK):
        hi = min(lo + _CHUNK, n_paths)
        s = starts[lo:hi]
        if walker is None:
            ids = np.arange(lo, hi, dtype=np.int64)
            pts, fid, _ = walk_many(scene, s, cfg, point_ids=ids, n_paths=1, check=False)
        else:
            pts, fid = walker(s)
            fid = np.asarray(fid, dtype=np.int64)
        vals_all[lo:hi] = exit_values(scene, pts, fid)
        fid_all[lo:hi] = fid
    est = _reduce(phi_x - vals_all, fid_all, n_paths, cfg)
    scale = 1.5 / a
    counts = tuple(int(np.sum(fid_all == k)) for k in range(scene.n_features))
    return LastPassageResult(scale * est.mean, scale * est.std_error, n_paths,
                             int(np.sum(fid_all == INFINITY)), int(np.sum(fid_all == FAILED)), counts)
