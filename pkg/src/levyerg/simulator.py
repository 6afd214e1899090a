"""Euler scheme with compound-Poisson jumps, skeleton ensembles and
empirical total-variation decay.

Jumps smaller than ``eps`` are dropped; the compensator over the annulus
``eps <= |u| < 1`` keeps the drift of the generator exact.  The kernel is
frozen at the state at the start of every step.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numba
import numpy as np
from scipy.stats import ks_2samp

from .model import (
    BoundedSymmetric1D,
    Cone,
    Kernel,
    LinearDrift,
    ModelSpec,
    NoJumps,
    PowerLawStable,
    PowerRadialDrift,
    ScaledKernel,
    StateIndependentStable,
    ZeroDrift,
    sphere_area,
)
from .quadrature import AbsU2, Annulus, Ball, Complement, Coordinate, One, gk_adaptive, integrate_region
from .rng import PathStream, _uniform, path_key

__all__ = [
    "SimulationError",
    "SimConfig",
    "PathEnsemble",
    "jump_intensity",
    "sample_jump",
    "sample_jumps",
    "step",
    "simulate_ensemble",
    "estimate_tv",
    "ks_distance",
    "RateReport",
    "empirical_rate_report",
]

EXPLOSION_RADIUS = 1e12
THINNING_FLOOR = 1e-4


class SimulationError(RuntimeError):
    """Sampler failure with a diagnostic message."""


# ---------------------------------------------------------------------------
# Configuration and ensembles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``stride`` is the number of Euler steps between recorded skeleton
    states.  ``max_step_jumps`` bounds ``h * Lambda(x0, eps)``.
    """

    x0: tuple
    horizon: float
    step: float = 0.01
    eps: float = 0.01
    paths: int = 1000
    seed: int = 0
    stride: int = 1
    max_step_jumps: float = 1e5

    def __post_init__(self) -> None:
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))
        if not all(math.isfinite(v) for v in self.x0):
            raise ValueError("x0 must be finite")
        if not (self.step > 0.0 and self.horizon > 0.0):
            raise ValueError("step and horizon must be positive")
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if int(self.paths) < 1 or int(self.stride) < 1:
            raise ValueError("paths and stride must be positive")
        if int(self.seed) < 0 or int(self.seed) >= 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "paths", int(self.paths))
        object.__setattr__(self, "stride", int(self.stride))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))

    @property
    def n_records(self) -> int:
        return self.n_steps // self.stride + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_records) * self.stride * self.step

    def digest(self, model: ModelSpec) -> str:
        payload = json.dumps(dataclasses.asdict(self), sort_keys=True) + "|" + repr(model)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PathEnsemble:
    """Skeleton states of the non-aborted paths.

    ``states`` has shape ``(n_times, n_kept, d)``; ``paths`` lists the kept
    path indices in increasing order.
    """

    times: np.ndarray
    states: np.ndarray
    paths: np.ndarray
    aborted: int
    seed: int
    config_hash: str
    discarded_variance: float = math.nan
    engine: str = "fast"

    @property
    def n_paths(self) -> int:
        return int(self.paths.size)

    def index_of(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} is not an observation time")
        return k

    def at(self, t: float) -> np.ndarray:
        return self.states[self.index_of(t)]

    def to_csv(self, path) -> None:
        d = self.states.shape[-1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path", "time", *[f"x_{i + 1}" for i in range(d)]])
            for j, pid in enumerate(self.paths):
                for k, t in enumerate(self.times):
                    w.writerow([int(pid), repr(float(t)), *[repr(float(v)) for v in self.states[k, j]]])


# ---------------------------------------------------------------------------
# Kernel and drift packing for the compiled engine
# ---------------------------------------------------------------------------

K_NONE, K_POWER, K_TABLE = 0, 1, 2
D_ZERO, D_POWER, D_LINEAR = 0, 1, 2
_NPAR = 16


def _unwrap(kernel: Kernel) -> tuple[Kernel, float]:
    factor = 1.0
    while isinstance(kernel, ScaledKernel):
        factor *= kernel.factor
        kernel = kernel.base
    return kernel, factor


def _bounded_table(kernel: BoundedSymmetric1D, eps: float, n: int = 4097):
    """Inverse CDF table of ``|J|`` on ``[eps, support]`` and the mass outside ``eps``."""
    b = kernel.support
    if eps >= b:
        return 0.0, np.array([0.0, 1.0]), np.array([b, b])
    r = np.linspace(eps, b, n)
    cells = np.array([gk_adaptive(kernel.radial_density, lo, hi, rtol=1e-13, pieces=1) for lo, hi in zip(r[:-1], r[1:])])
    cdf = np.concatenate([[0.0], np.cumsum(cells)])
    mass = float(cdf[-1])
    if mass <= 0.0:
        return 0.0, np.array([0.0, 1.0]), np.array([b, b])
    return 2.0 * mass, cdf / mass, r


@dataclass(frozen=True)
class _Packed:
    dcode: int
    dpar: np.ndarray
    A: np.ndarray
    kcode: int
    kpar: np.ndarray
    tab_u: np.ndarray
    tab_r: np.ndarray


def _pack_kernel(kernel: Kernel, d: int, eps: float):
    base, factor = _unwrap(kernel)
    kpar = np.zeros(_NPAR)
    tab_u = np.zeros(2)
    tab_r = np.zeros(2)
    S = sphere_area(d)
    if isinstance(base, NoJumps):
        return K_NONE, kpar, tab_u, tab_r
    if isinstance(base, (PowerLawStable, StateIndependentStable, Cone)):
        kpar[0] = factor * (base.scale if isinstance(base, StateIndependentStable) else 1.0)
        kpar[1] = 0.0 if isinstance(base, StateIndependentStable) else base.beta
        kpar[2] = base.alpha
        kpar[3] = math.inf
        kpar[4], kpar[5] = 1.0, 0.0
        kpar[10], kpar[11] = S, 0.0
        if isinstance(base, Cone):
            kpar[3] = base.radius
            if not base.isotropic:
                kpar[4], kpar[5] = base.inside_weight, base.outside_weight
                kpar[6] = math.cos(base.half_angle)
                kpar[7] = base.half_angle
                kpar[8] = base.axis_sign
                kpar[9] = 1.0
                kpar[10], kpar[11] = base.cap_measure(d)
                kpar[12] = base.first_moment_factor(d)
            else:
                kpar[4] = base.inside_weight
        # angular mass times int_eps^rho r^{-1-alpha} dr
        alpha, rho = kpar[2], kpar[3]
        tail = 0.0 if rho <= eps else (eps ** -alpha - (0.0 if math.isinf(rho) else rho ** -alpha)) / alpha
        kpar[13] = (kpar[4] * kpar[10] + kpar[5] * kpar[11]) * tail
        kpar[14] = 1.0 if math.isinf(rho) or rho <= eps else 1.0 - (eps / rho) ** alpha
        kpar[15] = -1.0 / alpha
        return K_POWER, kpar, tab_u, tab_r
    if isinstance(base, BoundedSymmetric1D):
        mass, tab_u, tab_r = _bounded_table(base, eps)
        kpar[0] = factor * mass
        return K_TABLE, kpar, tab_u, tab_r
    return None


def _pack_drift(drift, d: int):
    dpar = np.zeros(3)
    A = np.zeros((d, d))
    if isinstance(drift, ZeroDrift):
        return D_ZERO, dpar, A
    if isinstance(drift, PowerRadialDrift):
        dpar[:] = (drift.sign * drift.coefficient, drift.exponent, 0.0)
        return D_POWER, dpar, A
    if isinstance(drift, LinearDrift):
        return D_LINEAR, dpar, drift.A.copy()
    return None


def _pack(model: ModelSpec, eps: float):
    d = model.dimension
    k = _pack_kernel(model.kernel, d, eps)
    dr = _pack_drift(model.drift, d)
    kpack = k if k is not None else (-1, np.zeros(_NPAR), np.zeros(2), np.zeros(2))
    dpack = dr if dr is not None else (-1, np.zeros(3), np.zeros((d, d)))
    return _Packed(dpack[0], dpack[1], dpack[2], kpack[0], kpack[1], kpack[2], kpack[3])


# ---------------------------------------------------------------------------
# Compiled pieces
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _poisson(lam, key, gamma, pos, elam=-1.0):
    """Poisson draw from the words at ``pos, pos + 1, ...``; returns ``(k, next pos)``.

    ``elam`` may carry a precomputed ``exp(-lam)``.
    """
    if lam <= 0.0:
        return 0, pos
    if lam < 30.0:
        u = _uniform(key, gamma, pos)
        pos += 1
        k = 0
        p = math.exp(-lam) if elam < 0.0 else elam
        s = p
        while u > s:
            k += 1
            p *= lam / k
            s += p
            if p < 1e-20 * s:
                break
        return k, pos
    # transformed rejection with squeeze
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        U = _uniform(key, gamma, pos) - 0.5
        V = _uniform(key, gamma, pos + 1)
        pos += 2
        us = 0.5 - abs(U)
        k = int(math.floor((2.0 * a / us + b) * U + lam + 0.43))
        if us >= 0.07 and V <= vr:
            return k, pos
        if k < 0 or (us < 0.013 and V > us):
            continue
        if math.log(V) + math.log(invalpha) - math.log(a / (us * us) + b) <= -lam + k * loglam - math.lgamma(k + 1.0):
            return k, pos


@numba.njit(cache=True)
def _norm(X):
    s = 0.0
    for i in range(X.size):
        s += X[i] * X[i]
    return math.sqrt(s)


@numba.njit(cache=True)
def _coef(X, kpar):
    """State factor of the power-law kernels (``inf`` marks a singular state)."""
    beta = kpar[1]
    if beta == 0.0:
        return kpar[0]
    r = _norm(X)
    if r == 0.0:
        return 0.0 if beta > 0.0 else math.inf
    return kpar[0] * r ** beta


@numba.njit(cache=True)
def _intensity(X, kcode, kpar, eps):
    """``(Lambda(X, eps), state factor)``."""
    if kcode == 0:
        return 0.0, 0.0
    if kcode == 2:
        return kpar[0], 1.0
    c = _coef(X, kpar)
    if c == 0.0:
        return 0.0, c
    return c * kpar[13], c


@numba.njit(cache=True)
def _compensator(X, kcode, kpar, eps, c, out):
    """``int_{eps <= |u| < 1} u nu(X, du)``; nonzero only for asymmetric cones."""
    for i in range(out.size):
        out[i] = 0.0
    if kcode != 1 or kpar[9] == 0.0 or kpar[12] == 0.0 or c == 0.0:
        return
    alpha = kpar[2]
    top = min(1.0, kpar[3])
    if top <= eps:
        return
    if alpha == 1.0:
        I = math.log(top / eps)
    else:
        I = (top ** (1.0 - alpha) - eps ** (1.0 - alpha)) / (1.0 - alpha)
    r = _norm(X)
    scale = c * kpar[12] * kpar[8] * I
    if r == 0.0:
        out[0] = scale
        return
    for i in range(out.size):
        out[i] = scale * X[i] / r


@numba.njit(cache=True)
def _words_per_jump(d, kcode, kpar):
    cone = 1 if (kcode == 1 and kpar[9] != 0.0) else 0
    if d == 1:
        return 1
    if d == 2:
        return 1 + cone
    return 2 + cone


@numba.njit(cache=True)
def _basis(X, a, b1, b2):
    """Orthonormal ``a = e_X`` (``e_1`` at the origin) and complements."""
    d = X.size
    r = _norm(X)
    for i in range(d):
        a[i] = X[i] / r if r > 0.0 else 0.0
    if r == 0.0:
        a[0] = 1.0
    if d == 2:
        b1[0] = -a[1]
        b1[1] = a[0]
    elif d == 3:
        k = 0
        for i in range(1, 3):
            if abs(a[i]) < abs(a[k]):
                k = i
        h0 = 1.0 if k == 0 else 0.0
        h1 = 1.0 if k == 1 else 0.0
        h2 = 1.0 if k == 2 else 0.0
        c0 = a[1] * h2 - a[2] * h1
        c1 = a[2] * h0 - a[0] * h2
        c2 = a[0] * h1 - a[1] * h0
        nc = math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
        b1[0], b1[1], b1[2] = c0 / nc, c1 / nc, c2 / nc
        b2[0] = a[1] * b1[2] - a[2] * b1[1]
        b2[1] = a[2] * b1[0] - a[0] * b1[2]
        b2[2] = a[0] * b1[1] - a[1] * b1[0]


@numba.njit(cache=True)
def _direction(d, kpar, cone, uw, a, b1, b2, out):
    """Jump direction from the angle uniforms ``uw``."""
    if not cone:
        if d == 1:
            out[0] = 1.0 if uw[0] < 0.5 else -1.0
        elif d == 2:
            phi = 2.0 * math.pi * uw[0]
            out[0] = math.cos(phi)
            out[1] = math.sin(phi)
        else:
            t = 2.0 * uw[0] - 1.0
            phi = 2.0 * math.pi * uw[1]
            s = math.sqrt(max(0.0, 1.0 - t * t))
            out[0] = t
            out[1] = s * math.cos(phi)
            out[2] = s * math.sin(phi)
        return
    w_in = kpar[4] * kpar[10]
    w_out = kpar[5] * kpar[11]
    inside = uw[0] * (w_in + w_out) < w_in
    sgn = kpar[8]
    if d == 1:
        out[0] = sgn * a[0] if inside else -sgn * a[0]
        return
    th = kpar[7]
    if d == 2:
        if inside:
            phi = th * (2.0 * uw[1] - 1.0)
        else:
            phi = th + (2.0 * math.pi - 2.0 * th) * uw[1]
        c = math.cos(phi)
        s = math.sin(phi)
        for i in range(2):
            out[i] = sgn * (c * a[i] + s * b1[i])
        return
    ct = kpar[6]
    if inside:
        t = ct + (1.0 - ct) * uw[1]
    else:
        t = -1.0 + (1.0 + ct) * uw[1]
    phi = 2.0 * math.pi * uw[2]
    s = math.sqrt(max(0.0, 1.0 - t * t))
    cp = math.cos(phi)
    sp = math.sin(phi)
    for i in range(3):
        out[i] = sgn * (t * a[i] + s * (cp * b1[i] + sp * b2[i]))


@numba.njit(cache=True)
def _radius(u, kcode, kpar, tab_u, tab_r, eps):
    if kcode == 2:
        j = np.searchsorted(tab_u, u)
        if j <= 0:
            return tab_r[0]
        if j >= tab_u.size:
            return tab_r[-1]
        du = tab_u[j] - tab_u[j - 1]
        if du <= 0.0:
            return tab_r[j]
        return tab_r[j - 1] + (u - tab_u[j - 1]) / du * (tab_r[j] - tab_r[j - 1])
    return eps * (1.0 - u * kpar[14]) ** kpar[15]


@numba.njit(cache=True)
def _add_jumps_1d(Xs, M, key, gamma, pos, kcode, kpar, tab_u, tab_r, eps, out, jumps):
    cone = kcode == 1 and kpar[9] != 0.0
    base = pos + M
    keep = jumps.shape[0] >= M
    ax, w_in, w_all = 1.0, 0.0, 1.0
    if cone:
        ax = kpar[8] * (1.0 if Xs[0] >= 0.0 else -1.0)
        w_in = kpar[4] * kpar[10]
        w_all = w_in + kpar[5] * kpar[11]
    acc = 0.0
    for j in range(M):
        r = _radius(_uniform(key, gamma, pos + j), kcode, kpar, tab_u, tab_r, eps)
        v = _uniform(key, gamma, base + j)
        if cone:
            sj = ax if v * w_all < w_in else -ax
        else:
            sj = 1.0 if v < 0.5 else -1.0
        acc += r * sj
        if keep:
            jumps[j, 0] = r * sj
    out[0] += acc
    return pos + 2 * M


@numba.njit(cache=True)
def _add_jumps_nd(Xs, M, key, gamma, pos, kcode, kpar, tab_u, tab_r, eps, out, jumps, work):
    d = Xs.size
    cone = kcode == 1 and kpar[9] != 0.0
    base = pos + M
    keep = jumps.shape[0] >= M
    wpj = _words_per_jump(d, kcode, kpar)
    a = work[0, :d]
    b1 = work[1, :d]
    b2 = work[2, :d]
    e = work[3, :d]
    uw = work[4]
    if cone:
        _basis(Xs, a, b1, b2)
    for j in range(M):
        r = _radius(_uniform(key, gamma, pos + j), kcode, kpar, tab_u, tab_r, eps)
        for q in range(wpj):
            uw[q] = _uniform(key, gamma, base + j * wpj + q)
        if kcode == 2:
            e[0] = 1.0 if uw[0] < 0.5 else -1.0
        else:
            _direction(d, kpar, cone, uw, a, b1, b2, e)
        for i in range(d):
            out[i] += r * e[i]
            if keep:
                jumps[j, i] = r * e[i]
    return pos + M * (1 + wpj)


@numba.njit(cache=True)
def _add_jumps(Xs, M, key, gamma, pos, kcode, kpar, tab_u, tab_r, eps, out, jumps, work):
    """Add ``M`` jumps drawn at the frozen state ``Xs`` to ``out``.

    Words: ``M`` radii, then the angle words of every jump.  ``jumps`` (if it
    has ``M`` rows) receives the individual jump vectors.  ``work`` is a
    scratch array of shape ``(5, 3)``.  The scalar case has its own
    function since the view setup of the general one dominates short steps.
    """
    if Xs.size == 1:
        return _add_jumps_1d(Xs, M, key, gamma, pos, kcode, kpar, tab_u, tab_r, eps, out, jumps)
    return _add_jumps_nd(Xs, M, key, gamma, pos, kcode, kpar, tab_u, tab_r, eps, out, jumps, work)


@numba.njit(cache=True)
def _drift(X, dcode, dpar, A, out):
    d = X.size
    if dcode == 0:
        for i in range(d):
            out[i] = 0.0
    elif dcode == 1:
        r = _norm(X)
        f = 0.0 if r == 0.0 else dpar[0] * r ** (dpar[1] - 1.0)
        for i in range(d):
            out[i] = f * X[i]
    else:
        for i in range(d):
            s = 0.0
            for k in range(d):
                s += A[i, k] * X[k]
            out[i] = s


@numba.njit(cache=True)
def _advance(X, step, n_steps, stride, rec, col, key, gamma, pos, dcode, dpar, A, kcode, kpar, tab_u, tab_r, eps, h, guard):
    """Run Euler steps until done (status 0) or the path aborts (status 2).

    Returns ``(status, steps done, next word position)``.
    """
    d = X.size
    Xs = np.empty(d)
    dr = np.empty(d)
    comp = np.empty(d)
    jsum = np.empty(d)
    nojumps = np.empty((0, d))
    work = np.empty((5, 3))
    last = -1.0
    elast = -1.0
    while step < n_steps:
        lam, c = _intensity(X, kcode, kpar, eps)
        if not math.isfinite(lam):
            return 2, step, pos
        hl = h * lam
        if hl != last:
            last = hl
            elast = math.exp(-hl)
        M, p1 = _poisson(hl, key, gamma, pos, elast)
        for i in range(d):
            Xs[i] = X[i]
            jsum[i] = 0.0
        _drift(Xs, dcode, dpar, A, dr)
        _compensator(Xs, kcode, kpar, eps, c, comp)
        if d == 1:
            pos = _add_jumps_1d(Xs, M, key, gamma, p1, kcode, kpar, tab_u, tab_r, eps, jsum, nojumps)
        else:
            pos = _add_jumps_nd(Xs, M, key, gamma, p1, kcode, kpar, tab_u, tab_r, eps, jsum, nojumps, work)
        for i in range(d):
            X[i] = Xs[i] + h * (dr[i] - comp[i]) + jsum[i]
        step += 1
        r = _norm(X)
        if not (r <= guard):
            return 2, step, pos
        if step % stride == 0:
            for i in range(d):
                rec[step // stride, col, i] = X[i]
    return 0, step, pos


@numba.njit(cache=True)
def _advance_1d(X, n_steps, stride, rec, col, key, gamma, dcode, dpar, A, kcode, kpar, tab_u, tab_r, eps, h, guard):
    """Scalar version of ``_advance`` for ``d = 1``; same words, same arithmetic.

    Array arguments are unpacked once so the step loop touches scalars only.
    """
    x = X[0]
    a00 = A[0, 0]
    dc, de = dpar[0], dpar[1]
    k0, beta, k13, cut, mexp = kpar[0], kpar[1], kpar[13], kpar[14], kpar[15]
    cone = kcode == 1 and kpar[9] != 0.0
    w_in = kpar[4] * kpar[10]
    w_all = w_in + kpar[5] * kpar[11]
    # compensator is c * k12 * k8 * I * sign(x) for asymmetric cones
    cscale = 0.0
    k12, k8, I = kpar[12], kpar[8], 0.0
    if cone and kpar[12] != 0.0:
        alpha = kpar[2]
        top = min(1.0, kpar[3])
        if top > eps:
            if alpha == 1.0:
                I = math.log(top / eps)
            else:
                I = (top ** (1.0 - alpha) - eps ** (1.0 - alpha)) / (1.0 - alpha)
            cscale = 1.0
    pos = 0
    last = -1.0
    elast = -1.0
    step = 0
    while step < n_steps:
        if kcode == 0:
            lam, c = 0.0, 0.0
        elif kcode == 2:
            lam, c = k0, 1.0
        else:
            if beta == 0.0:
                c = k0
            elif x == 0.0:
                c = 0.0 if beta > 0.0 else math.inf
            else:
                c = k0 * abs(x) ** beta
            lam = c * k13
        if not math.isfinite(lam):
            X[0] = x
            return 2, step, pos
        hl = h * lam
        if hl != last:
            last = hl
            elast = math.exp(-hl)
        M, p1 = _poisson(hl, key, gamma, pos, elast)
        if dcode == 0:
            dr = 0.0
        elif dcode == 1:
            r = abs(x)
            dr = 0.0 if r == 0.0 else dc * r ** (de - 1.0) * x
        else:
            dr = a00 * x
        comp = 0.0
        if cscale != 0.0 and c != 0.0:
            sc = c * k12 * k8 * I
            comp = sc if x == 0.0 else sc * x / abs(x)
        base = p1 + M
        sgn = kpar[8] * (1.0 if x >= 0.0 else -1.0)
        acc = 0.0
        for j in range(M):
            u = _uniform(key, gamma, p1 + j)
            if kcode == 2:
                r = _radius(u, kcode, kpar, tab_u, tab_r, eps)
            else:
                r = eps * (1.0 - u * cut) ** mexp
            v = _uniform(key, gamma, base + j)
            if cone:
                sj = sgn if v * w_all < w_in else -sgn
            else:
                sj = 1.0 if v < 0.5 else -1.0
            acc += r * sj
        pos = p1 + 2 * M
        x = x + h * (dr - comp) + (0.0 + acc)
        step += 1
        if not (abs(x) <= guard):
            X[0] = x
            return 2, step, pos
        if step % stride == 0:
            rec[step // stride, col, 0] = x
    X[0] = x
    return 0, step, pos


@numba.njit(cache=True, nogil=True)
def _advance_block(x0, n_steps, stride, rec, cols, keys, gammas, dcode, dpar, A, kcode, kpar, tab_u, tab_r, eps, h, guard, status):
    """Run the paths stored in columns ``cols`` of ``rec`` from ``x0``."""
    for j in range(cols.size):
        X = x0.copy()
        if X.size == 1:
            st, _, _ = _advance_1d(X, n_steps, stride, rec, cols[j], keys[j], gammas[j],
                                   dcode, dpar, A, kcode, kpar, tab_u, tab_r, eps, h, guard)
        else:
            st, _, _ = _advance(X, 0, n_steps, stride, rec, cols[j], keys[j], gammas[j], 0,
                                dcode, dpar, A, kcode, kpar, tab_u, tab_r, eps, h, guard)
        status[j] = st


# ---------------------------------------------------------------------------
# Public sampling API
# ---------------------------------------------------------------------------


def jump_intensity(model: ModelSpec, x, eps: float) -> float:
    """Total mass ``nu(x, {|u| >= eps})``."""
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = _pack_kernel(model.kernel, model.dimension, eps)
    if k is not None:
        lam, _ = _intensity(x, k[0], k[1], eps)
        return float(lam)
    return float(integrate_region(model.kernel, x, Complement(eps), One()))


def discarded_variance(model: ModelSpec, x, eps: float) -> float:
    """``int_{|u| < eps} |u|^2 nu(x, du)``, the variance dropped by truncation."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if model.kernel.support_radius(x) <= 0.0:
        return 0.0
    return float(integrate_region(model.kernel, x, Ball(eps), AbsU2()))


class _EnvelopeKernel(Kernel):
    """Isotropic kernel with density ``envelope(x, |u|)``."""

    symmetric = True
    isotropic = True

    def __init__(self, base: Kernel):
        self.base = base

    def density(self, x, u):
        return self.base.envelope(x, np.linalg.norm(np.asarray(u, dtype=float), axis=-1))

    def envelope(self, x, r):
        return self.base.envelope(x, r)

    def support_radius(self, x) -> float:
        return self.base.support_radius(x)

    def radial_breaks(self, x) -> tuple:
        return self.base.radial_breaks(x)


@dataclass
class _Thinning:
    """Piecewise-constant dominating measure in ``ln r`` for envelope thinning."""

    edges: np.ndarray
    height: np.ndarray
    cum: np.ndarray
    total: float


def _thinning_table(kernel: Kernel, x: np.ndarray, eps: float, cells_per_efold: int = 50) -> _Thinning:
    d = x.size
    b = kernel.support_radius(x)
    if math.isinf(b):
        env = _EnvelopeKernel(kernel)
        mass = integrate_region(env, x, Complement(eps), One())
        b = max(2.0 * eps, 1.0)
        while b < 1e12 and integrate_region(env, x, Complement(b), One()) > 1e-12 * max(mass, 1e-300):
            b *= 4.0
    if b <= eps:
        return _Thinning(np.array([0.0, 0.0]), np.zeros(1), np.array([0.0, 1.0]), 0.0)
    lo, hi = math.log(eps), math.log(b)
    n = max(1, int(math.ceil((hi - lo) * cells_per_efold)))
    edges = np.linspace(lo, hi, n + 1)
    r0 = np.exp(edges[:-1])
    r1 = np.exp(edges[1:])
    height = sphere_area(d) * np.asarray(kernel.envelope(x, r0), dtype=float) * r1 ** d
    mass = height * np.diff(edges)
    total = float(np.sum(mass))
    cum = np.concatenate([[0.0], np.cumsum(mass)]) / total if total > 0 else np.linspace(0.0, 1.0, n + 1)
    return _Thinning(edges, height, cum, total)


def _uniform_dirs(d: int, uw: np.ndarray) -> np.ndarray:
    if d == 1:
        return np.where(uw[:, 0] < 0.5, 1.0, -1.0)[:, None]
    if d == 2:
        phi = 2.0 * math.pi * uw[:, 0]
        return np.column_stack([np.cos(phi), np.sin(phi)])
    t = 2.0 * uw[:, 0] - 1.0
    phi = 2.0 * math.pi * uw[:, 1]
    s = np.sqrt(np.maximum(0.0, 1.0 - t * t))
    return np.column_stack([t, s * np.cos(phi), s * np.sin(phi)])


class _Sampler:
    """Per-model jump machinery shared by ``step`` and the generic engine."""

    def __init__(self, model: ModelSpec, eps: float):
        self.model = model
        self.eps = float(eps)
        self.d = model.dimension
        self.packed = _pack(model, eps)
        self.custom = self.packed.kcode < 0
        self._table_cache = None
        self._comp_cache = None
        self.proposed = 0
        self.accepted = 0

    def _poisson(self, lam: float, stream: PathStream) -> int:
        k, pos = _poisson(lam, stream.key, stream.gamma, stream.counter)
        stream.counter = int(pos)
        return int(k)

    def compensator(self, x: np.ndarray, c: float) -> np.ndarray:
        p = self.packed
        out = np.zeros(self.d)
        if not self.custom:
            _compensator(x, p.kcode, p.kpar, self.eps, c, out)
            return out
        k = self.model.kernel
        if k.symmetric or self.eps >= 1.0:
            return out
        if k.state_independent and self._comp_cache is not None:
            return self._comp_cache.copy()
        for i in range(self.d):
            out[i] = integrate_region(k, x, Annulus(self.eps, 1.0), Coordinate(i))
        if k.state_independent:
            self._comp_cache = out.copy()
        return out

    def table(self, x: np.ndarray) -> _Thinning:
        k = self.model.kernel
        if k.state_independent and self._table_cache is not None:
            return self._table_cache
        t = _thinning_table(k, x, self.eps)
        if k.state_independent:
            self._table_cache = t
        return t

    def jumps(self, x: np.ndarray, h: float, stream: PathStream) -> tuple[np.ndarray, np.ndarray]:
        """Drift correction ``-m(x, eps)`` and the jump vectors of one step."""
        p = self.packed
        d = self.d
        if not self.custom:
            lam, c = _intensity(x, p.kcode, p.kpar, self.eps)
            if not math.isfinite(lam):
                raise SimulationError("jump intensity is infinite at this state")
            M = self._poisson(h * lam, stream)
            jumps = np.zeros((M, d))
            acc = np.zeros(d)
            stream.counter = _add_jumps(x, M, stream.key, stream.gamma, stream.counter, p.kcode, p.kpar, p.tab_u, p.tab_r, self.eps, acc, jumps, np.empty((5, 3)))
            return -self.compensator(x, c), jumps
        tab = self.table(x)
        M = self._poisson(h * tab.total, stream) if tab.total > 0.0 else 0
        if M == 0:
            return -self.compensator(x, 1.0), np.zeros((0, d))
        ndir = 1 if d < 3 else 2
        cell_u = stream.uniforms(M)
        pos_u = stream.uniforms(M)
        ang_u = stream.uniforms(M * ndir).reshape(M, ndir)
        acc_u = stream.uniforms(M)
        cell = np.clip(np.searchsorted(tab.cum, cell_u, side="right") - 1, 0, tab.height.size - 1)
        lr = tab.edges[cell] + pos_u * (tab.edges[cell + 1] - tab.edges[cell])
        r = np.exp(lr)
        e = _uniform_dirs(d, ang_u)
        U = r[:, None] * e
        dens = np.asarray(self.model.kernel.density(x, U), dtype=float)
        target = sphere_area(d) * dens * r ** d
        if np.any(target > tab.height[cell] * (1.0 + 1e-9)):
            raise SimulationError("kernel density exceeds its envelope; thinning is invalid")
        ok = acc_u * tab.height[cell] < target
        self.proposed += M
        self.accepted += int(np.count_nonzero(ok))
        if self.proposed >= 1000 and self.accepted < THINNING_FLOOR * self.proposed:
            raise SimulationError(
                f"thinning acceptance {self.accepted / self.proposed:.2e} is below {THINNING_FLOOR:g}; "
                "the envelope is too loose for this kernel"
            )
        return -self.compensator(x, 1.0), U[ok]


def sample_jumps(model: ModelSpec, x, eps: float, stream: PathStream, n: int) -> np.ndarray:
    """``n`` independent draws from ``nu(x, .)`` restricted to ``|u| >= eps``, normalized."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = _Sampler(model, eps)
    d = model.dimension
    if jump_intensity(model, x, eps) <= 0.0:
        raise ValueError("the truncated kernel has no mass at this state")
    if not s.custom:
        p = s.packed
        out = np.zeros((n, d))
        stream.counter = _add_jumps(x, n, stream.key, stream.gamma, stream.counter, p.kcode, p.kpar, p.tab_u, p.tab_r, eps, np.zeros(d), out, np.empty((5, 3)))
        return out
    got = []
    count = 0
    while count < n:
        tab = s.table(x)
        m = max(64, 2 * (n - count))
        ndir = 1 if d < 3 else 2
        cell_u = stream.uniforms(m)
        pos_u = stream.uniforms(m)
        ang_u = stream.uniforms(m * ndir).reshape(m, ndir)
        acc_u = stream.uniforms(m)
        cell = np.clip(np.searchsorted(tab.cum, cell_u, side="right") - 1, 0, tab.height.size - 1)
        r = np.exp(tab.edges[cell] + pos_u * (tab.edges[cell + 1] - tab.edges[cell]))
        U = r[:, None] * _uniform_dirs(d, ang_u)
        target = sphere_area(d) * np.asarray(model.kernel.density(x, U), dtype=float) * r ** d
        ok = acc_u * tab.height[cell] < target
        s.proposed += m
        s.accepted += int(np.count_nonzero(ok))
        if s.accepted < THINNING_FLOOR * s.proposed and s.proposed >= 1000:
            raise SimulationError("thinning acceptance below the floor")
        got.append(U[ok])
        count += int(np.count_nonzero(ok))
    return np.concatenate(got)[:n]


def sample_jump(model: ModelSpec, x, eps: float, stream: PathStream) -> np.ndarray:
    """One draw from the normalized truncated kernel at ``x``."""
    return sample_jumps(model, x, eps, stream, 1)[0]


def step(model: ModelSpec, x, h: float, eps: float, stream: PathStream, sampler: _Sampler | None = None) -> np.ndarray:
    """One Euler step ``x + h (l(x) - m(x, eps)) + sum of jumps``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    s = sampler or _Sampler(model, eps)
    corr, J = s.jumps(x, h, stream)
    drift = np.asarray(model.drift_at(x), dtype=float)
    return x + h * (drift + corr) + J.sum(axis=0)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------


def _check_budget(model: ModelSpec, cfg: SimConfig) -> None:
    lam = jump_intensity(model, np.asarray(cfg.x0), cfg.eps)
    if cfg.step * lam > cfg.max_step_jumps:
        raise ValueError(
            f"expected jumps per step h*Lambda(x0, eps) = {cfg.step * lam:.3g} exceeds the budget {cfg.max_step_jumps:g}"
        )


def simulate_ensemble(
    model: ModelSpec,
    config: SimConfig,
    paths: Sequence[int] | None = None,
    workers: int | None = 1,
) -> PathEnsemble:
    """Simulate paths ``0..N-1`` (or the given indices) from ``x0``.

    Paths hitting ``|X| > 1e12`` or a non-finite state are aborted and
    excluded at every time; their number is reported.  With ``workers > 1``
    blocks of paths run on threads; every path owns its random substream,
    so the result does not depend on the worker count.
    """
    d = model.dimension
    x0 = np.asarray(config.x0, dtype=float)
    if x0.size != d:
        raise ValueError("x0 does not match the model dimension")
    _check_budget(model, config)
    ids = np.arange(config.paths) if paths is None else np.asarray(sorted(set(int(p) for p in paths)))
    n_rec = config.n_records
    rec = np.empty((n_rec, ids.size, d))
    rec[0] = x0
    alive = np.ones(ids.size, dtype=bool)
    sampler = _Sampler(model, config.eps)
    p = sampler.packed
    fast = p.kcode >= 0 and p.dcode >= 0
    if fast:
        keys = np.empty(ids.size, dtype=np.uint64)
        gammas = np.empty(ids.size, dtype=np.uint64)
        for col, pid in enumerate(ids):
            k, g = path_key(config.seed, int(pid))
            keys[col], gammas[col] = k, g
        status = np.zeros(ids.size, dtype=np.int64)
        cols = np.arange(ids.size, dtype=np.int64)
        n_workers = max(1, int(workers or 1))

        def block(sl):
            _advance_block(x0, config.n_steps, config.stride, rec, cols[sl], keys[sl], gammas[sl],
                           p.dcode, p.dpar, p.A, p.kcode, p.kpar, p.tab_u, p.tab_r,
                           config.eps, config.step, EXPLOSION_RADIUS, status[sl])

        if n_workers == 1 or ids.size < 2:
            block(slice(None))
        else:
            size = max(1, -(-ids.size // (4 * n_workers)))
            slices = [slice(i, i + size) for i in range(0, ids.size, size)]
            with ThreadPoolExecutor(max_workers=n_workers) as ex:
                list(ex.map(block, slices))
        alive = status == 0
    else:
        for col, pid in enumerate(ids):
            stream = PathStream(config.seed, int(pid))
            X = x0.copy()
            for k in range(1, config.n_steps + 1):
                try:
                    X = step(model, X, config.step, config.eps, stream, sampler)
                except SimulationError as exc:
                    if "acceptance" in str(exc) or "envelope" in str(exc):
                        raise
                    alive[col] = False
                    break
                if not (np.linalg.norm(X) <= EXPLOSION_RADIUS):
                    alive[col] = False
                    break
                if k % config.stride == 0:
                    rec[k // config.stride, col] = X
    try:
        dv = discarded_variance(model, x0, config.eps)
    except (ArithmeticError, ValueError):
        dv = math.nan
    return PathEnsemble(
        times=config.times,
        states=rec[:, alive, :],
        paths=ids[alive],
        aborted=int(np.count_nonzero(~alive)),
        seed=config.seed,
        config_hash=config.digest(model),
        discarded_variance=dv,
        engine="fast" if fast else "generic",
    )


# ---------------------------------------------------------------------------
# Total variation
# ---------------------------------------------------------------------------


def _tv_1d(a: np.ndarray, b: np.ndarray, bins: int) -> float:
    pooled = np.concatenate([a, b])
    edges = np.quantile(pooled, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    ia = np.searchsorted(edges, a, side="right")
    ib = np.searchsorted(edges, b, side="right")
    pa = np.bincount(ia, minlength=bins) / a.size
    pb = np.bincount(ib, minlength=bins) / b.size
    return float(min(1.0, 0.5 * np.sum(np.abs(pa - pb))))


def _as_samples(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("samples must be a nonempty array of shape (n,) or (n, d)")
    return x


def default_bins(n: int) -> int:
    return int(min(200, max(2, round((2.0 * n) ** (1.0 / 3.0)))))


def estimate_tv(samples_a, samples_b, bins: int | None = None) -> float:
    """Histogram total variation on equiprobable bins of the pooled sample.

    For ``d >= 2`` the maximum over the coordinates and the norm is used.
    """
    a = _as_samples(samples_a)
    b = _as_samples(samples_b)
    if a.shape[1] != b.shape[1]:
        raise ValueError("samples have different dimensions")
    if bins is None:
        bins = default_bins(min(a.shape[0], b.shape[0]))
    if int(bins) < 1:
        raise ValueError("bins must be positive")
    bins = int(bins)
    if a.shape[1] == 1:
        return _tv_1d(a[:, 0], b[:, 0], bins)
    tvs = [_tv_1d(a[:, i], b[:, i], bins) for i in range(a.shape[1])]
    tvs.append(_tv_1d(np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1), bins))
    return max(tvs)


def ks_distance(samples_a, samples_b) -> float:
    """Two-sample Kolmogorov-Smirnov distance (first coordinate, or the norm for d >= 2)."""
    a = _as_samples(samples_a)
    b = _as_samples(samples_b)
    if a.shape[1] == 1:
        return float(ks_2samp(a[:, 0], b[:, 0]).statistic)
    return float(ks_2samp(np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)).statistic)


@dataclass(frozen=True)
class RateReport:
    times: tuple
    tv: tuple
    ks: tuple
    psi: tuple
    noise_floor: float
    window: tuple
    tv_slope: float
    psi_slope: float
    slack: float
    passed: bool
    flags: tuple = ()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "tv_hat", "psi", "ratio"])
            for t, tv, ps in zip(self.times, self.tv, self.psi):
                ratio = tv / ps if ps > 0 else math.inf
                w.writerow([repr(float(t)), repr(float(tv)), repr(float(ps)), repr(float(ratio))])

    def to_text(self) -> str:
        lines = [
            "empirical rate report",
            f"noise floor (reference halves): {self.noise_floor:.6g}",
            f"decaying window: t in [{self.window[0]:.6g}, {self.window[1]:.6g}]" if self.window else "decaying window: empty",
            f"log-log slope: tv {self.tv_slope:.6g}, psi {self.psi_slope:.6g}, slack {self.slack:g}",
            f"result: {'pass' if self.passed else 'fail'}",
        ]
        lines += [f"flag: {f}" for f in self.flags]
        lines.append("t  tv_hat  ks  psi")
        for t, tv, ks, ps in zip(self.times, self.tv, self.ks, self.psi):
            lines.append(f"{t:.6g}  {tv:.6g}  {ks:.6g}  {ps:.6g}")
        return "\n".join(lines) + "\n"


def empirical_rate_report(
    ensemble: PathEnsemble,
    reference,
    psi_fn: Callable[[float], float],
    times: Sequence[float] | None = None,
    bins: int | None = None,
    slack: float = 0.25,
) -> RateReport:
    """Compare the empirical TV decay with ``psi``.

    The decaying window is the initial run of times whose TV exceeds twice
    the noise floor; slopes are least-squares fits in log-log coordinates
    over that window.
    """
    ref = _as_samples(reference)
    if times is None:
        times = [t for t in ensemble.times[:-1] if t >= 1.0]
    times = [float(t) for t in times]
    if not times:
        raise ValueError("no observation times at or after t = 1")
    half = ref.shape[0] // 2
    nb = bins if bins is not None else default_bins(ref.shape[0])
    floor = estimate_tv(ref[0::2], ref[1::2], nb) if half > 0 else 0.0
    tv = [estimate_tv(ensemble.at(t), ref, nb) for t in times]
    ks = [ks_distance(ensemble.at(t), ref) for t in times]
    ps = [float(psi_fn(t)) for t in times]
    flags = []
    if np.unique(ref, axis=0).shape[0] < 2:
        flags.append("degenerate reference: point mass, histogram TV cannot decay")
    win = []
    for t, v in zip(times, tv):
        if v > 2.0 * floor:
            win.append((t, v))
        else:
            break
    tv_slope = psi_slope = math.nan
    window = ()
    if len(win) >= 2:
        wt = np.array([w[0] for w in win])
        wv = np.array([w[1] for w in win])
        wp = np.array([float(psi_fn(t)) for t in wt])
        tv_slope = float(np.polyfit(np.log(wt), np.log(wv), 1)[0])
        if np.all(wp > 0):
            psi_slope = float(np.polyfit(np.log(wt), np.log(wp), 1)[0])
        window = (float(wt[0]), float(wt[-1]))
    else:
        flags.append("decaying window has fewer than two points")
    if math.isfinite(tv_slope) and tv_slope >= 0.0:
        flags.append("non-decaying TV estimate")
    passed = (
        not flags
        and math.isfinite(tv_slope)
        and math.isfinite(psi_slope)
        and tv_slope <= psi_slope + slack
    )
    return RateReport(tuple(times), tuple(tv), tuple(ks), tuple(ps), float(floor), window, tv_slope, psi_slope,
                      float(slack), bool(passed), tuple(flags))
