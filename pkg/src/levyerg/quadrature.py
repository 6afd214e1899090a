"""Integrals of weighted kernel densities over balls, annuli and complements.

Integrals are split into a radial and an angular part.  The angular part is
an exact two-point sum in d = 1 and a composite Gauss-Legendre rule in
d = 2, 3 laid out in a frame aligned with ``e_x``.  The radial part uses a
closed-form antiderivative for power-law kernels with power weights and
adaptive Gauss-Kronrod quadrature in ``log r`` otherwise, with geometric
panels toward 0 and toward infinity.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import Kernel, LyapunovParams, ModelError, bridge, frame, sphere_area, unit

__all__ = [
    "QuadratureError",
    "DivergenceError",
    "ToleranceError",
    "Ball",
    "Annulus",
    "Complement",
    "One",
    "AbsU",
    "AbsU2",
    "AbsUp",
    "AbsU2Gamma2",
    "GammaAbsU",
    "Coordinate",
    "GeneratorRemainder",
    "LargeDiff",
    "FunctionWeight",
    "angular_rule",
    "integrate_region",
    "gk_adaptive",
]


class QuadratureError(ArithmeticError):
    """Base class for quadrature failures."""


class DivergenceError(QuadratureError):
    """The requested integral is infinite."""


class ToleranceError(QuadratureError):
    """The error budget was exhausted before reaching the tolerance."""

    def __init__(self, message: str, achieved: float = math.nan):
        super().__init__(message)
        self.achieved = achieved


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    r: float

    def __post_init__(self):
        if not self.r > 0.0:
            raise ValueError("ball radius must be positive")

    def bounds(self) -> tuple[float, float]:
        return 0.0, float(self.r)


@dataclass(frozen=True)
class Annulus:
    r: float
    R: float

    def __post_init__(self):
        if not (0.0 < self.r < self.R):
            raise ValueError("annulus needs 0 < r < R")

    def bounds(self) -> tuple[float, float]:
        return float(self.r), float(self.R)


@dataclass(frozen=True)
class Complement:
    r: float

    def __post_init__(self):
        if not self.r > 0.0:
            raise ValueError("complement radius must be positive")

    def bounds(self) -> tuple[float, float]:
        return float(self.r), math.inf


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


class Weight:
    """Integrand factor multiplying the kernel density.

    ``radial_power`` is set when the weight equals ``r**k * angular(e)``; the
    integral then separates.  ``values`` evaluates the weight on a grid of
    radii ``r`` (shape ``(n, 1)``) and world directions ``e`` (shape
    ``(1, m, d)``).
    """

    radial_power: float | None = None
    axisymmetric: bool = True

    def angular(self, e: np.ndarray) -> np.ndarray:
        return np.ones(e.shape[:-1])

    def values(self, r: np.ndarray, e: np.ndarray) -> np.ndarray:
        k = self.radial_power
        return r ** k * self.angular(e)

    def isotropic_moment(self, d: int) -> float | None:
        """Integral of ``angular`` over the unit sphere, when known in closed form."""
        return None

    def growth(self, r: np.ndarray) -> np.ndarray:
        """Upper bound of ``|weight|`` on the sphere of radius ``r``."""
        return np.asarray(r, dtype=float) ** self.radial_power

    def radial_breaks(self) -> tuple:
        return ()

    def angular_breaks(self, d: int) -> tuple:
        return ()


class One(Weight):
    radial_power = 0.0

    def isotropic_moment(self, d):
        return sphere_area(d)


class AbsU(Weight):
    radial_power = 1.0

    def isotropic_moment(self, d):
        return sphere_area(d)


class AbsU2(Weight):
    radial_power = 2.0

    def isotropic_moment(self, d):
        return sphere_area(d)


@dataclass(frozen=True)
class AbsUp(Weight):
    p: float

    @property
    def radial_power(self):  # type: ignore[override]
        return float(self.p)

    def isotropic_moment(self, d):
        return sphere_area(d)


class _AngleWeight(Weight):
    def _ex(self, d: int) -> np.ndarray:
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.size != d:
            raise ModelError("reference state dimension mismatch")
        return unit(x)


@dataclass(frozen=True, eq=False)
class AbsU2Gamma2(_AngleWeight):
    """``|u|^2 gamma_{x,u}^2``."""

    x: object
    radial_power = 2.0

    def angular(self, e):
        return (e @ self._ex(e.shape[-1])) ** 2

    def isotropic_moment(self, d):
        return sphere_area(d) / d


@dataclass(frozen=True, eq=False)
class GammaAbsU(_AngleWeight):
    """``gamma_{x,u} |u|``."""

    x: object
    radial_power = 1.0

    def angular(self, e):
        return e @ self._ex(e.shape[-1])

    def isotropic_moment(self, d):
        return 0.0


@dataclass(frozen=True)
class Coordinate(Weight):
    """The jump coordinate ``u_i``."""

    index: int
    radial_power = 1.0
    axisymmetric = False

    def angular(self, e):
        return e[..., self.index]

    def isotropic_moment(self, d):
        return 0.0


def _binom_series(a: float, n: int = 24) -> np.ndarray:
    c = np.empty(n + 1)
    c[0] = 1.0
    for k in range(1, n + 1):
        c[k] = c[k - 1] * (a - k + 1) / k
    return c


def _pow1p_minus_linear(s: np.ndarray, a: float) -> np.ndarray:
    """``(1+s)^a - 1 - a s`` without cancellation for small ``|s|``."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = np.abs(s) < 0.1
    if np.any(small):
        c = _binom_series(a)
        ss = s[small]
        acc = np.zeros_like(ss)
        for k in range(c.size - 1, 1, -1):
            acc = (acc + c[k]) * ss
        out[small] = acc * ss
    big = ~small
    if np.any(big):
        sb = s[big]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[big] = np.expm1(a * np.log1p(sb)) - a * sb
    return out


class _VWeight(Weight):
    radial_power = None

    def _setup(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        R = float(np.linalg.norm(x))
        if not R > 1.0:
            raise ModelError("V-based weights need |x| > 1")
        return x, R

    def radial_breaks(self) -> tuple:
        _, R = self._setup()
        return (R - 1.0, R, R + 1.0)

    def angular_breaks(self, d: int) -> tuple:
        _, R = self._setup()
        if R <= 8.0 or d == 1:
            return ()
        h = 4.0 / R
        if d == 2:
            return (-(math.pi - h), math.pi - h)
        return (-math.cos(h),)

    def _parts(self, r, e):
        x, R = self._setup()
        p = self.lyap.p
        g = e @ unit(x)
        rho = r / R
        s = rho * (2.0 * g + rho)
        # |x+u|^2 = R^2 (1 + s)
        nrm2 = R * R * (1.0 + s)
        return x, R, p, rho, s, nrm2

    def _bridge_term(self, nrm2, R, p):
        return bridge(np.sqrt(np.maximum(nrm2, 0.0))) ** p - R ** p


@dataclass(frozen=True, eq=False)
class GeneratorRemainder(_VWeight):
    """``V(x+u) - V(x) - grad V(x) . u`` for ``|x| > 1``."""

    x: object
    lyap: LyapunovParams

    def values(self, r, e):
        x, R, p, rho, s, nrm2 = self._parts(r, e)
        a = 0.5 * p
        outer = R ** p * (_pow1p_minus_linear(s, a) + a * rho * rho)
        inner_mask = nrm2 <= 1.0
        if np.any(inner_mask):
            lin = p * R ** p * rho * (e @ unit(x))
            inner = self._bridge_term(nrm2, R, p) - lin
            outer = np.where(inner_mask, inner, outer)
        return outer

    def growth(self, r):
        _, R = self._setup()
        r = np.asarray(r, dtype=float)
        return r ** self.lyap.p + self.lyap.p * R ** (self.lyap.p - 1.0) * r + 1.0


@dataclass(frozen=True, eq=False)
class LargeDiff(_VWeight):
    """``V(x+u) - V(x)`` for ``|x| > 1``."""

    x: object
    lyap: LyapunovParams

    def values(self, r, e):
        x, R, p, rho, s, nrm2 = self._parts(r, e)
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = R ** p * np.expm1(0.5 * p * np.log1p(s))
        inner_mask = nrm2 <= 1.0
        if np.any(inner_mask):
            outer = np.where(inner_mask, self._bridge_term(nrm2, R, p), outer)
        return outer

    def growth(self, r):
        return np.asarray(r, dtype=float) ** self.lyap.p + 1.0


@dataclass(frozen=True, eq=False)
class FunctionWeight(Weight):
    """Arbitrary weight ``fn(u)`` with ``u`` of shape ``(..., d)``; bounded by ``bound``."""

    fn: Callable[[np.ndarray], np.ndarray]
    bound: float = 1.0
    breaks: tuple = ()
    axisymmetric = False

    def values(self, r, e):
        return self.fn(r[..., None] * e)

    def growth(self, r):
        return np.full(np.shape(r), float(self.bound))

    def radial_breaks(self) -> tuple:
        return tuple(self.breaks)


# ---------------------------------------------------------------------------
# Angular rules
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


DEFAULT_ANGULAR = {1: 1, 2: 64, 3: 32}


@functools.lru_cache(maxsize=256)
def _angular_rule_cached(d: int, n: int, breaks: tuple, axisymmetric: bool = False):
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    t, wt = _gauss_legendre(n)
    if d == 2:
        edges = sorted({-math.pi, math.pi, *[b for b in breaks if -math.pi < b < math.pi]})
        phis, ws = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            phis.append(0.5 * (hi + lo) + half * t)
            ws.append(half * wt)
        phi = np.concatenate(phis)
        return np.column_stack([np.cos(phi), np.sin(phi)]), np.concatenate(ws)
    if d == 3:
        # Gauss-Legendre in the polar angle (weight sin), which stays smooth
        # where integrands behave like powers of the distance to -e_x
        edges = sorted({0.0, math.pi, *[math.acos(b) for b in breaks if -1.0 < b < 1.0]})
        th, ws = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            th.append(0.5 * (hi + lo) + half * t)
            ws.append(half * wt)
        theta = np.concatenate(th)
        c = np.cos(theta)
        wc = np.concatenate(ws) * np.sin(theta)
        # integrands symmetric about e_x need a single azimuth
        m = 1 if axisymmetric else 2 * n
        az = (np.arange(m) + 0.5) * (2.0 * math.pi / m) if m > 1 else np.zeros(1)
        s = np.sin(theta)
        dirs = np.stack(
            [np.repeat(c, m), np.repeat(s, m) * np.tile(np.cos(az), c.size), np.repeat(s, m) * np.tile(np.sin(az), c.size)],
            axis=1,
        )
        w = np.repeat(wc, m) * (2.0 * math.pi / m)
        return dirs, w
    raise ModelError("numeric angular rules are limited to d <= 3")


def angular_rule(d: int, n: int | None = None, breaks: tuple = (), axisymmetric: bool = False):
    """Nodes (in the frame of ``e_x``) and weights of the angular rule.

    The first frame coordinate is the cosine of the angle to ``e_x``.  In
    d = 2 the breakpoints are polar angles in ``(-pi, pi)``; in d = 3 they
    are values of that cosine.  ``axisymmetric`` collapses the azimuthal
    rule in d = 3 for integrands invariant under rotations about ``e_x``.
    """
    n = DEFAULT_ANGULAR.get(d, 32) if n is None else int(n)
    dirs, w = _angular_rule_cached(d, n, tuple(sorted(float(b) for b in breaks)), bool(axisymmetric and d == 3))
    return dirs, w


# ---------------------------------------------------------------------------
# Gauss-Kronrod machinery
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_GW = np.zeros(15)
_GW[1::2] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[:-1][::-1]])


def _gk_panels(fn, lo: np.ndarray, hi: np.ndarray):
    """Apply GK15 to panels; ``fn`` maps an array of nodes to (values, |values|)."""
    c = 0.5 * (lo + hi)
    h = 0.5 * (hi - lo)
    t = c[:, None] + h[:, None] * _NODES[None, :]
    f, fabs = fn(t.ravel())
    f = f.reshape(t.shape)
    fabs = fabs.reshape(t.shape)
    k = h * (f @ _KW)
    g = h * (f @ _GW)
    kabs = h * (fabs @ _KW)
    mean = k / np.where(h > 0, 2.0 * h, 1.0)
    resasc = h * (np.abs(f - mean[:, None]) @ _KW)
    diff = np.abs(k - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5), diff)
    err = np.maximum(err, 2.0 * np.finfo(float).eps * kabs)
    if not (np.all(np.isfinite(k)) and np.all(np.isfinite(err))):
        raise DivergenceError("non-finite integrand values")
    return k, err, kabs


@dataclass
class _Panels:
    lo: np.ndarray
    hi: np.ndarray
    val: np.ndarray
    err: np.ndarray
    absval: np.ndarray

    @classmethod
    def empty(cls):
        z = np.zeros(0)
        return cls(z, z.copy(), z.copy(), z.copy(), z.copy())

    def extend(self, lo, hi, val, err, absval):
        self.lo = np.concatenate([self.lo, lo])
        self.hi = np.concatenate([self.hi, hi])
        self.val = np.concatenate([self.val, val])
        self.err = np.concatenate([self.err, err])
        self.absval = np.concatenate([self.absval, absval])


_MAX_PANELS = 40000
_TAIL_CHUNK = 16
_TAIL_MAX = 960


def _tail(fn, start_log: float, direction: int, panels: _Panels, tol: float, scale_fn):
    """Geometric panels of width ``ln 2`` away from ``start_log``.

    Returns the geometric remainder estimate added past the last panel.
    Raises DivergenceError when panel contributions stop shrinking.
    """
    # Decay is judged on the absolute integrand so that cancelling signed
    # panels (odd weights on symmetric kernels) are not mistaken for noise.
    step = math.log(2.0) * direction
    vals: list[float] = []
    n = 0
    while True:
        idx = np.arange(n, n + _TAIL_CHUNK, dtype=float)
        a = start_log + step * idx
        b = start_log + step * (idx + 1)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        k, err, kabs = _gk_panels(fn, lo, hi)
        panels.extend(lo, hi, k, err, kabs)
        vals.extend(np.abs(kabs).tolist())
        n += _TAIL_CHUNK
        last = np.array(vals[-6:])
        if np.all(last <= 1e-300):
            return 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = last[1:] / last[:-1]
        ratios = ratios[np.isfinite(ratios)]
        q = float(np.max(ratios)) if ratios.size else 0.0
        total, l1 = scale_fn()
        target = max(tol * abs(total), 1e-13 * l1, 1e-300)
        if q < 1.0:
            if float(last[-1]) * q / (1.0 - q) <= 0.1 * target:
                return float(k[-1]) * q / (1.0 - q)
        if n >= 64 and q >= 0.999:
            raise DivergenceError("integrand does not decay along geometric panels")
        if n >= _TAIL_MAX:
            if q < 1.0:
                return float(k[-1]) * q / (1.0 - q)
            raise DivergenceError("integrand does not decay along geometric panels")


def _radial_integral(g, a: float, b: float, breaks, tol: float) -> tuple[float, float]:
    """Integrate ``g(r) dr`` over ``[a, b]`` in the variable ``t = ln r``.

    ``g`` maps radii to (values, |values|).  Returns (integral, L1 scale).
    """

    def fn(t):
        r = np.exp(t)
        v, va = g(r)
        return v * r, va * r

    pts = sorted({a, b, *[float(c) for c in breaks if a < c < b and c > 0.0]})
    finite = [(lo, hi) for lo, hi in zip(pts[:-1], pts[1:]) if lo > 0.0 and math.isfinite(hi)]
    panels = _Panels.empty()
    los, his = [], []
    for lo, hi in finite:
        tl, th = math.log(lo), math.log(hi)
        m = max(1, int(math.ceil((th - tl) / math.log(2.0) - 1e-12)))
        edges = np.linspace(tl, th, m + 1)
        edges[0], edges[-1] = tl, th
        los.append(edges[:-1])
        his.append(edges[1:])
    if los:
        k, err, kabs = _gk_panels(fn, np.concatenate(los), np.concatenate(his))
        panels.extend(np.concatenate(los), np.concatenate(his), k, err, kabs)

    def scale():
        return float(np.sum(panels.val)), float(np.sum(panels.absval))

    rem = 0.0
    if a == 0.0:
        top = pts[1]
        if math.isinf(top):
            raise ModelError("integration over all of R^d is not supported; split the region")
        rem += _tail(fn, math.log(top), -1, panels, tol, scale)
    if math.isinf(b):
        rem += _tail(fn, math.log(pts[-2]), +1, panels, tol, scale)
    rem_err = abs(rem)

    for _ in range(200):
        total = float(np.sum(panels.val)) + rem
        l1 = float(np.sum(panels.absval)) + abs(rem)
        target = max(tol * abs(total), 1e-13 * l1, 1e-300)
        errsum = float(np.sum(panels.err)) + rem_err
        if errsum <= target:
            return total, l1
        if panels.lo.size > _MAX_PANELS:
            raise ToleranceError(
                f"radial quadrature budget exhausted (estimated relative error {errsum / max(abs(total), 1e-300):.3g})",
                achieved=errsum / max(abs(total), 1e-300),
            )
        thresh = max(target / max(panels.lo.size, 1), 0.0)
        split = panels.err > 0.5 * thresh
        if not np.any(split):
            split = panels.err >= np.max(panels.err)
        keep = ~split
        lo_s, hi_s = panels.lo[split], panels.hi[split]
        mid = 0.5 * (lo_s + hi_s)
        nlo = np.concatenate([lo_s, mid])
        nhi = np.concatenate([mid, hi_s])
        k, err, kabs = _gk_panels(fn, nlo, nhi)
        panels = _Panels(panels.lo[keep], panels.hi[keep], panels.val[keep], panels.err[keep], panels.absval[keep])
        panels.extend(nlo, nhi, k, err, kabs)
    raise ToleranceError("radial quadrature did not converge", achieved=math.nan)


def gk_adaptive(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, rtol: float = 1e-12, pieces: int = 8) -> float:
    """Adaptive GK15 integral of a vectorized ``f`` over a finite ``[a, b]``."""
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0

    def fn(t):
        v = np.asarray(f(t), dtype=float)
        return v, np.abs(v)

    edges = np.linspace(a, b, pieces + 1)
    lo, hi = edges[:-1], edges[1:]
    val, err, absval = _gk_panels(fn, lo, hi)
    for _ in range(100):
        total = float(np.sum(val))
        target = max(rtol * abs(total), 1e-15 * float(np.sum(absval)), 1e-300)
        if float(np.sum(err)) <= target:
            return sign * total
        split = err > 0.5 * target / val.size
        if not np.any(split):
            split = err >= np.max(err)
        mid = 0.5 * (lo[split] + hi[split])
        nlo = np.concatenate([lo[split], mid])
        nhi = np.concatenate([mid, hi[split]])
        k, e, ka = _gk_panels(fn, nlo, nhi)
        keep = ~split
        lo = np.concatenate([lo[keep], nlo])
        hi = np.concatenate([hi[keep], nhi])
        val = np.concatenate([val[keep], k])
        err = np.concatenate([err[keep], e])
        absval = np.concatenate([absval[keep], ka])
        if lo.size > _MAX_PANELS:
            break
    raise ToleranceError("adaptive quadrature did not converge", achieved=float(np.sum(err)) / max(abs(float(np.sum(val))), 1e-300))


# ---------------------------------------------------------------------------
# Region integrals
# ---------------------------------------------------------------------------


def _power_radial(coef: float, e: float, a: float, b: float) -> float:
    """``coef * int_a^b r^{e-1} dr``."""
    if a >= b:
        return 0.0
    if e == 0.0:
        if a == 0.0 or math.isinf(b):
            raise DivergenceError("logarithmically divergent radial integral")
        return coef * math.log(b / a)
    if a == 0.0 and e < 0.0:
        raise DivergenceError("radial integral diverges at the origin")
    if math.isinf(b) and e > 0.0:
        raise DivergenceError("radial integral diverges at infinity")
    hi = 0.0 if math.isinf(b) else b ** e
    lo = 0.0 if a == 0.0 else a ** e
    return coef * (hi - lo) / e


def _envelope_check(kernel: Kernel, x: np.ndarray, a: float, weight: Weight) -> None:
    """Reject complements whose envelope-weighted tail does not decay."""
    d = x.size
    r = max(a, 1.0) * 2.0 ** np.arange(24, 40, dtype=float)
    h = sphere_area(d) * kernel.envelope(x, r) * weight.growth(r) * r ** d
    if np.all(h == 0.0):
        return
    with np.errstate(divide="ignore", invalid="ignore"):
        q = h[-4:] / h[-5:-1]
    if np.all(np.isfinite(q)) and np.min(q) >= 1.0 - 1e-9:
        raise DivergenceError("envelope tail test failed: weighted envelope is not integrable at infinity")


def _angular_constant(kernel: Kernel, x: np.ndarray, weight: Weight, tol: float, n: int | None) -> float:
    d = x.size
    if d > 3:
        mom = weight.isotropic_moment(d)
        if mom is None or not kernel.isotropic:
            raise ModelError("closed-form angular factor unavailable in d > 3")
        probe = np.zeros((1, d))
        probe[0, 0] = 1.0
        return float(kernel.angular(x, probe)[0]) * mom
    Q = frame(x)
    breaks = tuple(kernel.angular_breaks(d))
    n0 = DEFAULT_ANGULAR[d] if n is None else n
    prev = None
    axi = kernel.axisymmetric and weight.axisymmetric
    for _ in range(4):
        dirs, w = angular_rule(d, n0, breaks, axi)
        E = dirs @ Q.T
        val = float(np.sum(w * kernel.angular(x, E) * weight.angular(E)))
        scale = float(np.sum(w * np.abs(kernel.angular(x, E) * weight.angular(E))))
        if d == 1:
            return val
        if prev is not None and abs(val - prev) <= max(tol * abs(val), 1e-14 * scale):
            return val
        prev = val
        n0 *= 2
    raise ToleranceError("angular rule did not converge", achieved=abs(val - prev) / max(abs(val), 1e-300))


def _region_bounds(kernel: Kernel, x: np.ndarray, region) -> tuple[float, float]:
    a, b = region.bounds()
    b = min(b, kernel.support_radius(x))
    return a, b


def integrate_region(
    kernel: Kernel,
    x,
    region,
    weight: Weight,
    tol: float = 1e-9,
    *,
    numeric: bool = False,
    n_angular: int | None = None,
) -> float:
    """Integral of ``weight(u) * density(x, u)`` over ``region``.

    Parameters
    ----------
    kernel, x
        Jump kernel and the state at which it is frozen.
    region
        ``Ball``, ``Annulus`` or ``Complement``.
    weight
        Integrand factor.
    tol
        Target relative error.
    numeric
        Skip the closed-form radial path (used to cross-check it).
    n_angular
        Initial nodes per angular segment (doubled until converged).

    Raises
    ------
    DivergenceError
        When the integral is infinite.
    ToleranceError
        When the error budget is exhausted.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size
    a, b = _region_bounds(kernel, x, region)
    if a >= b:
        return 0.0
    if isinstance(region, Complement) and math.isinf(b):
        _envelope_check(kernel, x, a, weight)

    law = kernel.radial_law(x)
    k = weight.radial_power
    if law is not None and k is not None and (not numeric or d > 3):
        coef, alpha = law
        if coef == 0.0:
            return 0.0
        if math.isinf(coef):
            raise DivergenceError("kernel intensity is infinite at this state")
        radial = _power_radial(coef, k - alpha, a, b)
        ang = _angular_constant(kernel, x, weight, tol, n_angular)
        return radial * ang

    if d > 3:
        raise ModelError("numeric quadrature is limited to d <= 3")
    return _numeric_integral(kernel, x, a, b, weight, tol, n_angular)


def _numeric_integral(kernel, x, a, b, weight, tol, n_angular) -> float:
    d = x.size
    Q = frame(x)
    breaks = tuple(kernel.angular_breaks(d)) + tuple(weight.angular_breaks(d))
    rbreaks = tuple(kernel.radial_breaks(x)) + tuple(weight.radial_breaks())
    n0 = DEFAULT_ANGULAR[d] if n_angular is None else n_angular
    prev = None
    axi = kernel.axisymmetric and weight.axisymmetric
    for _ in range(4):
        dirs, w = angular_rule(d, n0, breaks, axi)
        E = dirs @ Q.T

        def g(r, E=E, w=w):
            out = np.empty(r.size)
            outa = np.empty(r.size)
            chunk = max(1, 200000 // max(E.shape[0], 1))
            for s in range(0, r.size, chunk):
                rr = r[s : s + chunk]
                U = rr[:, None, None] * E[None, :, :]
                with np.errstate(over="ignore", invalid="ignore"):
                    vals = kernel.density(x, U) * weight.values(rr[:, None], E[None, :, :])
                jac = rr ** (d - 1)
                out[s : s + chunk] = jac * (vals @ w)
                outa[s : s + chunk] = jac * (np.abs(vals) @ w)
            return out, outa

        val, l1 = _radial_integral(g, a, b, rbreaks, tol)
        if d == 1:
            return val
        if prev is not None and abs(val - prev) <= max(tol * abs(val), 1e-13 * l1):
            return val
        prev = val
        n0 *= 2
    raise ToleranceError("angular refinement did not converge", achieved=abs(val - prev) / max(abs(val), 1e-300))
