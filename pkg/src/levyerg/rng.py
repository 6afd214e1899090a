"""Counter-based splittable random streams.

Word ``n`` of a stream is ``mix64(key + (n + 1) * gamma)`` (the SplitMix64
output function).  Path ``p`` of seed ``s`` gets its own ``(key, gamma)``
by the SplitMix split rule applied to ``(mix64(s), p)``, so every path
owns an independent substream and any word can be computed from its index.
"""

from __future__ import annotations

import numba
import numpy as np

__all__ = ["PathStream", "mix64", "path_key", "word_at", "words_to_uniform"]

_MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python integer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix_gamma(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 33)) * 0xFF51AFD7ED558CCD) & _MASK
    z = ((z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53) & _MASK
    z = (z ^ (z >> 33)) | 1
    if bin(z ^ (z >> 1)).count("1") < 24:
        z ^= 0xAAAAAAAAAAAAAAAA
    return z


def path_key(seed: int, path: int) -> tuple[int, int]:
    """``(key, gamma)`` of path ``path`` under ``seed``."""
    seed = int(seed)
    path = int(path)
    if not (0 <= seed <= _MASK) or path < 0:
        raise ValueError("seed must be a 64-bit unsigned integer and path nonnegative")
    s = mix64(seed)
    key = mix64((s + (2 * path + 1) * GOLDEN) & _MASK)
    gamma = _mix_gamma((s + (2 * path + 2) * GOLDEN) & _MASK)
    return key, gamma


def word_at(key: int, gamma: int, n: int) -> int:
    """Word ``n`` of the stream, in pure Python (reference implementation)."""
    return mix64((key + (n + 1) * gamma) & _MASK)


@numba.njit(cache=True, inline="always")
def _word(key, gamma, n):
    z = key + (np.uint64(n) + np.uint64(1)) * gamma
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, inline="always")
def _uniform(key, gamma, n):
    """Uniform in (0, 1) from the top 52 bits of word ``n``."""
    return (float(_word(key, gamma, n) >> np.uint64(12)) + 0.5) * 2.220446049250313e-16


@numba.njit(cache=True)
def _words(key, gamma, start, n):
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        out[i] = _word(key, gamma, start + i)
    return out


def words_to_uniform(w: np.ndarray) -> np.ndarray:
    """Map 64-bit words to uniforms in the open interval (0, 1).

    52 bits keep the half-step offset exact, so 1 is never reached.
    """
    return ((np.asarray(w, dtype=np.uint64) >> np.uint64(12)).astype(float) + 0.5) * 2.0 ** -52


class PathStream:
    """Sequential view of one path's substream."""

    def __init__(self, seed: int, path: int):
        k, g = path_key(seed, path)
        self.key = np.uint64(k)
        self.gamma = np.uint64(g)
        self.counter = 0

    def words(self, n: int) -> np.ndarray:
        out = _words(self.key, self.gamma, self.counter, int(n))
        self.counter += int(n)
        return out

    def uniforms(self, n: int) -> np.ndarray:
        return words_to_uniform(self.words(n))
