"""Counter-based random numbers (Philox4x32-10).

Every random draw is a pure function of ``(key, counter)``, so a walk's
randomness depends only on ``(seed, point id, path id, draw index)`` and
never on thread scheduling.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S5 = np.uint64(5)
_S6 = np.uint64(6)
_TWO26 = np.uint64(67108864)
_INV53 = 1.0 / 9007199254740992.0

# stream tags keep independent uses of one seed apart
TAG_WALK = 0
TAG_START = 1


@nb.njit(cache=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32 with 10 rounds; all arguments are uint64 holding 32-bit words."""
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK
        c0 = (hi1 ^ c1 ^ k0) & _MASK
        c1 = lo1
        c2 = (hi0 ^ c3 ^ k1) & _MASK
        c3 = lo0
    return c0, c1, c2, c3


@nb.njit(cache=True, inline="always")
def uniform_pair(draw, path, point, tag, k0, k1):
    """Two doubles in [0, 1) with 53 random bits each."""
    r0, r1, r2, r3 = philox4x32(np.uint64(draw), np.uint64(path), np.uint64(point),
                                np.uint64(tag), k0, k1)
    u = np.float64((r0 >> _S5) * _TWO26 + (r1 >> _S6)) * _INV53
    v = np.float64((r2 >> _S5) * _TWO26 + (r3 >> _S6)) * _INV53
    return u, v


def split_seed(seed: int) -> tuple[np.uint64, np.uint64]:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


@nb.njit(cache=True)
def _uniform_pairs(n, point, tag, k0, k1, out):
    for i in range(n):
        u, v = uniform_pair(0, i, point, tag, k0, k1)
        out[i, 0] = u
        out[i, 1] = v


def uniform_pairs(seed: int, n: int, *, point: int = 0, tag: int = TAG_START) -> np.ndarray:
    """``(n, 2)`` uniforms for stream ``(seed, point, path=i, tag)``, draw 0."""
    k0, k1 = split_seed(seed)
    out = np.empty((n, 2))
    _uniform_pairs(n, point, tag, k0, k1, out)
    return out


def philox_block(counter: tuple[int, int, int, int], key: tuple[int, int]) -> tuple[int, ...]:
    """Raw Philox4x32-10 output block, for known-answer checks."""
    c = [np.uint64(v & 0xFFFFFFFF) for v in counter]
    k = [np.uint64(v & 0xFFFFFFFF) for v in key]
    return tuple(int(x) for x in philox4x32(c[0], c[1], c[2], c[3], k[0], k[1]))
