"""Walk-on-spheres sampling of Brownian exit points.

Each path draws its jumps from the Philox stream keyed by
``(seed, point id, path id)``; per-path results land in fixed slots and are
reduced in index order, so estimates are bit-identical for any thread count.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numba as nb
import numpy as np

from .errors import DomainViolationError, ReliabilityError
from .geometry import FAILED, INFINITY, ExitRecord, Scene, nearest_feature
from .rng import TAG_WALK, split_seed, uniform_pair

# the default layer probes for TBB first and warns when it is too old
if "NUMBA_THREADING_LAYER" not in os.environ:
    nb.config.THREADING_LAYER = "workqueue"

# paths per compiled call; bounds the exit-point buffers
_CHUNK_PATHS = 1 << 20


@dataclass(frozen=True)
class WosConfig:
    eps_shell: float = 1e-5
    trunc_radius: float = 1e5
    n_paths: int = 1000
    max_steps: int = 10_000
    seed: int = 0
    max_failed_fraction: float = 1e-3

    def __post_init__(self):
        if not self.eps_shell > 0:
            raise ValueError("eps_shell must be positive")
        if not self.trunc_radius > self.eps_shell:
            raise ValueError("trunc_radius must exceed eps_shell")
        if self.n_paths < 1 or self.max_steps < 1:
            raise ValueError("n_paths and max_steps must be >= 1")


@dataclass(frozen=True)
class Estimate:
    mean: float
    variance: float
    n: int
    n_infinity: int
    n_failed: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n > 0 else math.inf


@nb.njit(cache=True, parallel=True)
def _walk_kernel(kind, params, rects, starts, point_ids, n_paths, eps, trunc, max_steps,
                 k0, k1, out_pts, out_fid, out_steps):
    total = starts.shape[0] * n_paths
    trunc2 = trunc * trunc
    for idx in nb.prange(total):
        ip = idx // n_paths
        path = idx - ip * n_paths
        pid = point_ids[ip]
        x = starts[ip, 0]
        y = starts[ip, 1]
        z = starts[ip, 2]
        steps = 0
        fid = FAILED
        while True:
            d, f, px, py, pz = nearest_feature(kind, params, rects, x, y, z)
            if d < eps:
                fid = f
                x = px
                y = py
                z = pz
                break
            if x * x + y * y + z * z > trunc2:
                fid = INFINITY
                break
            if steps >= max_steps:
                break
            u, v = uniform_pair(steps, path, pid, TAG_WALK, k0, k1)
            cz = 2.0 * u - 1.0
            sz = math.sqrt(max(0.0, 1.0 - cz * cz))
            az = 2.0 * math.pi * v
            x += d * sz * math.cos(az)
            y += d * sz * math.sin(az)
            z += d * cz
            steps += 1
        out_pts[idx, 0] = x
        out_pts[idx, 1] = y
        out_pts[idx, 2] = z
        out_fid[idx] = fid
        out_steps[idx] = steps


def set_workers(n: int | None) -> int:
    """Use ``n`` threads for path simulation (capped by NUMBA_NUM_THREADS)."""
    cap = nb.config.NUMBA_NUM_THREADS
    n = cap if n is None else max(1, min(int(n), cap))
    nb.set_num_threads(n)
    return n


def _check_starts(scene: Scene, starts: np.ndarray) -> None:
    for p in starts:
        d = nearest_feature(int(scene.kind), scene.params, scene.rects, p[0], p[1], p[2])[0]
        if not d > 0.0:
            raise DomainViolationError(f"walk start {p.tolist()} is not inside the solution domain")


def walk_many(scene: Scene, starts, cfg: WosConfig, point_ids=None, n_paths: int | None = None,
              check: bool = True):
    """Run ``n_paths`` walks from every start; returns (exit points, feature ids, steps).

    Output rows are ordered point-major: row ``i * n_paths + k`` is path ``k`` of start ``i``.
    """
    starts = np.ascontiguousarray(np.atleast_2d(starts), dtype=np.float64)
    n_paths = cfg.n_paths if n_paths is None else int(n_paths)
    if point_ids is None:
        point_ids = np.arange(len(starts), dtype=np.int64)
    point_ids = np.ascontiguousarray(point_ids, dtype=np.int64)
    if check:
        _check_starts(scene, starts)
    total = len(starts) * n_paths
    pts = np.empty((total, 3))
    fid = np.empty(total, dtype=np.int64)
    steps = np.empty(total, dtype=np.int64)
    k0, k1 = split_seed(cfg.seed)
    if total:
        _walk_kernel(int(scene.kind), scene.params, scene.rects, starts, point_ids, n_paths,
                     cfg.eps_shell, cfg.trunc_radius, cfg.max_steps, k0, k1, pts, fid, steps)
    return pts, fid, steps


def walk(scene: Scene, start, cfg: WosConfig, stream_key: int | tuple[int, int] = 0) -> ExitRecord:
    """A single walk; ``stream_key`` is a path id or a ``(point id, path id)`` pair."""
    if isinstance(stream_key, tuple):
        point_id, path_id = stream_key
    else:
        point_id, path_id = 0, int(stream_key)
    start = np.asarray(start, dtype=float)
    _check_starts(scene, start[None, :])
    pts = np.empty((1, 3))
    fid = np.empty(1, dtype=np.int64)
    steps = np.empty(1, dtype=np.int64)
    k0, k1 = split_seed(cfg.seed)
    # a single path with the requested path id: shift the in-kernel path index
    _single_walk(int(scene.kind), scene.params, scene.rects, start, point_id, path_id,
                 cfg.eps_shell, cfg.trunc_radius, cfg.max_steps, k0, k1, pts, fid, steps)
    return ExitRecord(pts[0].copy(), int(fid[0]), int(steps[0]))


@nb.njit(cache=True)
def _single_walk(kind, params, rects, start, point_id, path_id, eps, trunc, max_steps, k0, k1,
                 out_pts, out_fid, out_steps):
    x, y, z = start[0], start[1], start[2]
    trunc2 = trunc * trunc
    steps = 0
    fid = FAILED
    while True:
        d, f, px, py, pz = nearest_feature(kind, params, rects, x, y, z)
        if d < eps:
            fid = f
            x, y, z = px, py, pz
            break
        if x * x + y * y + z * z > trunc2:
            fid = INFINITY
            break
        if steps >= max_steps:
            break
        u, v = uniform_pair(steps, path_id, point_id, TAG_WALK, k0, k1)
        cz = 2.0 * u - 1.0
        sz = math.sqrt(max(0.0, 1.0 - cz * cz))
        az = 2.0 * math.pi * v
        x += d * sz * math.cos(az)
        y += d * sz * math.sin(az)
        z += d * cz
        steps += 1
    out_pts[0, 0] = x
    out_pts[0, 1] = y
    out_pts[0, 2] = z
    out_fid[0] = fid
    out_steps[0] = steps


def exit_values(scene: Scene, pts: np.ndarray, fid: np.ndarray) -> np.ndarray:
    """Boundary data at exit points: 0 at infinity, NaN for failed paths."""
    vals = np.zeros(len(fid))
    hit = fid >= 0
    if hit.any():
        vals[hit] = scene.dirichlet(pts[hit], fid[hit])
    vals[fid == FAILED] = np.nan
    return vals


def _reduce(vals: np.ndarray, fid: np.ndarray, n_paths: int, cfg: WosConfig) -> Estimate:
    ok = fid != FAILED
    n_failed = int(n_paths - ok.sum())
    if n_failed > cfg.max_failed_fraction * n_paths:
        raise ReliabilityError(f"{n_failed} of {n_paths} walks exceeded {cfg.max_steps} steps")
    good = vals[ok]
    n = len(good)
    mean = float(np.mean(good)) if n else math.nan
    var = float(np.var(good, ddof=1)) if n > 1 else 0.0
    return Estimate(mean, var, n, int((fid == INFINITY).sum()), n_failed)


def estimate_u_batch(scene: Scene, points: Sequence, cfg: WosConfig, point_ids=None) -> list[Estimate]:
    """Feynman-Kac estimates of u at each point, ``cfg.n_paths`` walks per point."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) == 0:
        return []
    if point_ids is None:
        point_ids = np.arange(len(points), dtype=np.int64)
    point_ids = np.asarray(point_ids, dtype=np.int64)
    _check_starts(scene, points)
    per_chunk = max(1, _CHUNK_PATHS // cfg.n_paths)
    out: list[Estimate] = []
    for lo in range(0, len(points), per_chunk):
        hi = min(lo + per_chunk, len(points))
        pts, fid, _ = walk_many(scene, points[lo:hi], cfg, point_ids[lo:hi], check=False)
        vals = exit_values(scene, pts, fid)
        for i in range(hi - lo):
            sl = slice(i * cfg.n_paths, (i + 1) * cfg.n_paths)
            out.append(_reduce(vals[sl], fid[sl], cfg.n_paths, cfg))
    return out


def estimate_u(scene: Scene, p, cfg: WosConfig, point_id: int = 0) -> Estimate:
    return estimate_u_batch(scene, np.asarray(p, dtype=float)[None, :], cfg, [point_id])[0]


def batch_arrays(estimates: Sequence[Estimate]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Means, variances and path counts as arrays."""
    return (np.array([e.mean for e in estimates]), np.array([e.variance for e in estimates]),
            np.array([e.n for e in estimates]))
