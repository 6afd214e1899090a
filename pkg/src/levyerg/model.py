"""Drift fields, jump kernels and the Lyapunov function family.

Every evaluator here is a pure function of its arguments, so models can be
shared freely between worker threads.  User supplied callables (the
``Custom*`` variants) must follow the same rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "ModelError",
    "sphere_area",
    "LyapunovParams",
    "bridge",
    "eval_V",
    "V_of_norm",
    "grad_V",
    "hessian_V",
    "gamma_cos",
    "ZeroDrift",
    "PowerRadialDrift",
    "LinearDrift",
    "CustomDrift",
    "eval_drift",
    "Kernel",
    "NoJumps",
    "PowerLawStable",
    "StateIndependentStable",
    "BoundedSymmetric1D",
    "Cone",
    "CustomKernel",
    "ScaledKernel",
    "ModelSpec",
    "eval_kernel_density",
    "frame",
]


class ModelError(ValueError):
    """Invalid model specification or evaluation request."""


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in ``R^d`` (2, 2*pi, 4*pi, ...)."""
    if d < 1:
        raise ModelError("dimension must be positive")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


# ---------------------------------------------------------------------------
# Lyapunov function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LyapunovParams:
    """Exponent ``p`` of ``V = 1 + phi^p`` and ball exponent ``lam``."""

    p: float = 0.5
    lam: float = 0.5

    def __post_init__(self) -> None:
        for name in ("p", "lam"):
            v = float(getattr(self, name))
            if not (0.0 < v < 1.0):
                raise ModelError(f"{name} must lie in (0, 1), got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def guard_radius(self) -> float:
        """Smallest radius at which the growth functionals are evaluated."""
        return 2.0 ** (1.0 / self.lam)


def _smoothstep(t):
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def bridge(r):
    """Radial profile of ``phi``: ``r*s(r)`` on ``[0, 1]`` and ``r`` beyond.

    ``s`` is the quintic smoothstep, which makes ``phi`` twice continuously
    differentiable across the unit sphere.
    """
    r = np.asarray(r, dtype=float)
    inner = r * _smoothstep(np.clip(r, 0.0, 1.0))
    return np.where(r > 1.0, r, inner)


def V_of_norm(r, p: float):
    """``V`` as a function of ``|x|``."""
    return 1.0 + bridge(r) ** p


def eval_V(x, lyap: LyapunovParams) -> float:
    """Lyapunov function ``V(x) = 1 + phi(x)^p``."""
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    return float(V_of_norm(r, lyap.p))


def _require_outer(x) -> tuple[np.ndarray, float]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = float(np.linalg.norm(x))
    if not r > 1.0:
        raise ModelError("derivatives of V are only provided for |x| > 1")
    return x, r


def grad_V(x, lyap: LyapunovParams) -> np.ndarray:
    """Gradient ``p |x|^{p-2} x`` of ``V`` for ``|x| > 1``."""
    x, r = _require_outer(x)
    return lyap.p * r ** (lyap.p - 2.0) * x


def hessian_V(x, lyap: LyapunovParams) -> np.ndarray:
    """Hessian of ``V`` for ``|x| > 1``.

    Entry ``(i, j)`` is ``p r^{p-2} (delta_ij + (p-2) x_i x_j / r^2)``.
    """
    x, r = _require_outer(x)
    p = lyap.p
    e = x / r
    return p * r ** (p - 2.0) * (np.eye(x.size) + (p - 2.0) * np.outer(e, e))


def gamma_cos(x, u) -> float:
    """Cosine of the angle between ``x`` and ``u``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    nx = float(np.linalg.norm(x))
    nu = float(np.linalg.norm(u))
    if nx == 0.0 or nu == 0.0:
        raise ModelError("gamma_cos needs nonzero vectors")
    c = float(np.dot(x, u) / (nx * nu))
    return min(1.0, max(-1.0, c))


def unit(x) -> np.ndarray:
    """``e_x``; the first basis vector when ``x = 0``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r = float(np.linalg.norm(x))
    if r == 0.0:
        e = np.zeros_like(x)
        e[0] = 1.0
        return e
    return x / r


def frame(x) -> np.ndarray:
    """Orthonormal matrix whose first column is ``e_x``.

    Angular rules are laid out in this frame so that kernel features tied
    to ``e_x`` (cone edges, the antipodal point) fall on rule breakpoints.
    """
    e = unit(x)
    d = e.size
    if d == 1:
        return np.array([[e[0]]])
    if d == 2:
        return np.array([[e[0], -e[1]], [e[1], e[0]]])
    # Householder reflection mapping e_1 to e, deterministic for every e
    e1 = np.zeros(d)
    e1[0] = 1.0
    v = e1 - e
    nv = float(np.dot(v, v))
    if nv < 1e-30:
        return np.eye(d)
    return np.eye(d) - 2.0 * np.outer(v, v) / nv


# ---------------------------------------------------------------------------
# Drift fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroDrift:
    """``l(x) = 0``."""

    def __call__(self, x) -> np.ndarray:
        return np.zeros_like(np.atleast_1d(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class PowerRadialDrift:
    """``l(x) = c |x|^eta (+/- e_x)``, zero at the origin."""

    coefficient: float
    exponent: float
    orientation: str = "outward"

    def __post_init__(self) -> None:
        if self.orientation not in ("outward", "inward"):
            raise ModelError("orientation must be 'outward' or 'inward'")
        object.__setattr__(self, "coefficient", float(self.coefficient))
        object.__setattr__(self, "exponent", float(self.exponent))

    @property
    def sign(self) -> float:
        return 1.0 if self.orientation == "outward" else -1.0

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r = float(np.linalg.norm(x))
        if r == 0.0:
            return np.zeros_like(x)
        return self.sign * self.coefficient * r ** (self.exponent - 1.0) * x


@dataclass(frozen=True)
class LinearDrift:
    """``l(x) = A x``; the matrix is stored as nested tuples."""

    matrix: tuple

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ModelError("linear drift needs a square matrix")
        object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in a))

    @property
    def A(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    def __call__(self, x) -> np.ndarray:
        return self.A @ np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class CustomDrift:
    """User drift; ``evaluator(x) -> vector`` must be pure."""

    evaluator: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.asarray(self.evaluator(x), dtype=float).reshape(x.shape)


def eval_drift(spec, x) -> np.ndarray:
    """Evaluate the drift vector ``l(x)``."""
    return spec(x)


# ---------------------------------------------------------------------------
# Jump kernels
# ---------------------------------------------------------------------------


class Kernel:
    """Interface shared by all jump kernels.

    ``density(x, u)`` accepts a single state ``x`` of shape ``(d,)`` and jumps
    ``u`` of shape ``(..., d)``.  ``envelope(x, r)`` bounds the density on the
    sphere of radius ``r``.  Kernels with a power radial law additionally
    expose ``radial_law`` and ``angular`` so integrals separate exactly.
    """

    symmetric: bool = False
    isotropic: bool = False
    state_independent: bool = False

    @property
    def axisymmetric(self) -> bool:
        """Invariant under rotations fixing ``e_x``."""
        return bool(self.isotropic)

    def density(self, x, u) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def envelope(self, x, r) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def support_radius(self, x) -> float:
        return math.inf

    def radial_breaks(self, x) -> tuple:
        return ()

    def radial_law(self, x):
        """``(coef, alpha)`` with density ``coef r^{-d-alpha} angular(e)``, or None."""
        return None

    def angular(self, x, e) -> np.ndarray:
        return np.ones(np.shape(e)[:-1])

    def angular_breaks(self, d: int) -> tuple:
        """Angular breakpoints in the frame of ``e_x`` (polar angle for d=2, cosine for d=3)."""
        return ()

    def check_dimension(self, d: int) -> None:
        pass

    @property
    def closed_form(self) -> bool:
        return False


def _state_norm(x) -> float:
    return float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))


def _radial_coef(x, beta: float) -> float:
    r = _state_norm(x)
    if beta == 0.0:
        return 1.0
    if r == 0.0:
        return 0.0 if beta > 0.0 else math.inf
    return r ** beta


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 2.0):
        raise ModelError(f"alpha must lie in (0, 2), got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class NoJumps(Kernel):
    """The zero kernel."""

    symmetric = True
    isotropic = True
    state_independent = True

    def density(self, x, u):
        return np.zeros(np.shape(u)[:-1])

    def envelope(self, x, r):
        return np.zeros(np.shape(r))

    def support_radius(self, x) -> float:
        return 0.0

    @property
    def closed_form(self) -> bool:
        return True


@dataclass(frozen=True)
class PowerLawStable(Kernel):
    """Density ``|x|^beta |u|^{-d-alpha}``."""

    beta: float
    alpha: float

    symmetric = True
    isotropic = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))

    @property
    def closed_form(self) -> bool:
        return True

    def radial_law(self, x):
        return _radial_coef(x, self.beta), self.alpha

    def density(self, x, u):
        u = np.asarray(u, dtype=float)
        d = u.shape[-1]
        r = np.linalg.norm(u, axis=-1)
        with np.errstate(divide="ignore"):
            return _radial_coef(x, self.beta) * r ** (-d - self.alpha)

    def envelope(self, x, r):
        d = np.atleast_1d(np.asarray(x)).size
        with np.errstate(divide="ignore"):
            return _radial_coef(x, self.beta) * np.asarray(r, dtype=float) ** (-d - self.alpha)


@dataclass(frozen=True)
class StateIndependentStable(Kernel):
    """Density ``scale |u|^{-d-alpha}``, the same at every state."""

    alpha: float
    scale: float = 1.0

    symmetric = True
    isotropic = True
    state_independent = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        if not float(self.scale) > 0.0:
            raise ModelError("scale must be positive")
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def closed_form(self) -> bool:
        return True

    def radial_law(self, x):
        return self.scale, self.alpha

    def density(self, x, u):
        u = np.asarray(u, dtype=float)
        d = u.shape[-1]
        with np.errstate(divide="ignore"):
            return self.scale * np.linalg.norm(u, axis=-1) ** (-d - self.alpha)

    def envelope(self, x, r):
        d = np.atleast_1d(np.asarray(x)).size
        with np.errstate(divide="ignore"):
            return self.scale * np.asarray(r, dtype=float) ** (-d - self.alpha)


_SHAPES: dict[str, Callable] = {
    "uniform": lambda t: np.ones_like(t),
    "triangular": lambda t: 1.0 - t,
    "epanechnikov": lambda t: 1.0 - t * t,
}

_SHAPE_INTEGRALS = {"uniform": 1.0, "triangular": 0.5, "epanechnikov": 2.0 / 3.0}


@dataclass(frozen=True)
class BoundedSymmetric1D(Kernel):
    """Even one-dimensional kernel supported on ``[-support, support]``.

    ``shape`` is a profile ``g(t)`` on ``t = |u|/support`` in ``[0, 1]``, either
    a registered name (``uniform``, ``triangular``, ``epanechnikov``) or a
    callable.  The density is ``g`` rescaled to total mass ``total_mass``.
    """

    shape: object = "uniform"
    support: float = 1.0
    total_mass: float = 2.0
    _norm: float = field(default=0.0, init=False, repr=False, compare=False)

    symmetric = True
    state_independent = True

    def __post_init__(self) -> None:
        if not float(self.support) > 0.0 or not float(self.total_mass) > 0.0:
            raise ModelError("support and total_mass must be positive")
        object.__setattr__(self, "support", float(self.support))
        object.__setattr__(self, "total_mass", float(self.total_mass))
        if isinstance(self.shape, str):
            if self.shape not in _SHAPES:
                raise ModelError(f"unknown shape {self.shape!r}")
            integral = _SHAPE_INTEGRALS[self.shape]
        else:
            from scipy.integrate import quad

            integral = quad(lambda t: float(self.shape(np.asarray(t))), 0.0, 1.0, epsabs=0.0, epsrel=1e-13)[0]
        if not integral > 0.0:
            raise ModelError("shape must have positive integral")
        object.__setattr__(self, "_norm", self.total_mass / (2.0 * self.support * integral))

    def _profile(self, t):
        g = _SHAPES[self.shape] if isinstance(self.shape, str) else self.shape
        t = np.asarray(t, dtype=float)
        inside = t <= 1.0
        vals = np.asarray(g(np.where(inside, t, 1.0)), dtype=float)
        return np.where(inside, np.maximum(vals, 0.0), 0.0)

    def check_dimension(self, d: int) -> None:
        if d != 1:
            raise ModelError("BoundedSymmetric1D requires d = 1")

    def radial_density(self, r):
        """Density as a function of ``|u|``."""
        return self._norm * self._profile(np.asarray(r, dtype=float) / self.support)

    def density(self, x, u):
        u = np.asarray(u, dtype=float)
        return self.radial_density(np.abs(u[..., 0]))

    def envelope(self, x, r):
        return self.radial_density(r)

    def support_radius(self, x) -> float:
        return self.support

    def radial_breaks(self, x) -> tuple:
        return (self.support,)


@dataclass(frozen=True)
class Cone(Kernel):
    """Power-law kernel with direction dependent weight.

    Density is ``|x|^beta |u|^{-d-alpha} (w_in 1{angle(u, axis) <= theta} +
    w_out 1{otherwise})`` for ``|u| <= radius``, where the axis is ``+e_x``
    (outward) or ``-e_x`` (inward).
    """

    beta: float
    alpha: float
    axis: str = "inward"
    half_angle: float = math.pi / 6
    inside_weight: float = 1.0
    outside_weight: float = 0.0
    radius: float = math.inf

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        if self.axis not in ("inward", "outward"):
            raise ModelError("axis must be 'inward' or 'outward'")
        th = float(self.half_angle)
        if not (0.0 < th <= math.pi):
            raise ModelError("half_angle must lie in (0, pi]")
        object.__setattr__(self, "half_angle", th)
        for name in ("inside_weight", "outside_weight"):
            w = float(getattr(self, name))
            if w < 0.0:
                raise ModelError(f"{name} must be nonnegative")
            object.__setattr__(self, name, w)
        if self.inside_weight == 0.0 and self.outside_weight == 0.0:
            raise ModelError("cone weights cannot both vanish")
        if not float(self.radius) > 0.0:
            raise ModelError("radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def closed_form(self) -> bool:
        return True

    @property
    def axis_sign(self) -> float:
        return 1.0 if self.axis == "outward" else -1.0

    @property
    def symmetric(self) -> bool:  # type: ignore[override]
        return self.half_angle >= math.pi or self.inside_weight == self.outside_weight

    @property
    def isotropic(self) -> bool:  # type: ignore[override]
        return self.symmetric

    @property
    def axisymmetric(self) -> bool:
        return True

    def _inside(self, x, e):
        c = self.axis_sign * (np.asarray(e, dtype=float) @ unit(x))
        if self.half_angle >= math.pi:
            return np.ones(c.shape, dtype=bool)
        # small slack keeps the rule's edge nodes on the intended side
        return c >= math.cos(self.half_angle) - 1e-14

    def angular(self, x, e) -> np.ndarray:
        inside = self._inside(x, e)
        return np.where(inside, self.inside_weight, self.outside_weight)

    def angular_breaks(self, d: int) -> tuple:
        th = self.half_angle
        if th >= math.pi or d == 1:
            return ()
        if d == 2:
            if self.axis == "outward":
                return (-th, th)
            return (-(math.pi - th), math.pi - th)
        c = math.cos(th)
        return (self.axis_sign * c,)

    def check_dimension(self, d: int) -> None:
        if d > 3 and not self.isotropic:
            raise ModelError("anisotropic cone kernels are limited to d <= 3")

    def radial_law(self, x):
        return _radial_coef(x, self.beta), self.alpha

    def support_radius(self, x) -> float:
        return self.radius

    def radial_breaks(self, x) -> tuple:
        return () if math.isinf(self.radius) else (self.radius,)

    def density(self, x, u):
        u = np.asarray(u, dtype=float)
        d = u.shape[-1]
        r = np.linalg.norm(u, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            e = u / r[..., None]
            base = _radial_coef(x, self.beta) * r ** (-d - self.alpha)
        w = self.angular(x, np.nan_to_num(e))
        return np.where(r <= self.radius, base * w, 0.0)

    def envelope(self, x, r):
        d = np.atleast_1d(np.asarray(x)).size
        r = np.asarray(r, dtype=float)
        wmax = max(self.inside_weight, self.outside_weight)
        with np.errstate(divide="ignore"):
            v = _radial_coef(x, self.beta) * wmax * r ** (-d - self.alpha)
        return np.where(r <= self.radius, v, 0.0)

    # angular bookkeeping used by the sampler and the compensator
    def cap_measure(self, d: int) -> tuple[float, float]:
        """Surface measure of the cone cap and of its complement."""
        th = self.half_angle
        total = sphere_area(d)
        if th >= math.pi:
            return total, 0.0
        if d == 1:
            cap = 1.0
        elif d == 2:
            cap = 2.0 * th
        elif d == 3:
            cap = 2.0 * math.pi * (1.0 - math.cos(th))
        else:
            raise ModelError("cone caps are limited to d <= 3")
        return cap, total - cap

    def first_moment_factor(self, d: int) -> float:
        """``int e A(e) dsigma`` along the axis, per unit radial mass."""
        th = self.half_angle
        if th >= math.pi:
            return 0.0
        if d == 1:
            m = 1.0
        elif d == 2:
            m = 2.0 * math.sin(th)
        elif d == 3:
            m = math.pi * math.sin(th) ** 2
        else:
            raise ModelError("cone caps are limited to d <= 3")
        return (self.inside_weight - self.outside_weight) * m


@dataclass(frozen=True, eq=False)
class CustomKernel(Kernel):
    """User kernel with a mandatory radial envelope.

    ``density_fn(x, u)`` must broadcast over leading axes of ``u``.
    ``envelope_fn(x, r)`` must dominate the density on the sphere of radius
    ``r`` and be nonincreasing in ``r`` (the sampler relies on this).
    ``envelope_radius`` is the support radius: the density is treated as
    zero for ``|u| > envelope_radius``.
    """

    density_fn: Callable
    envelope_fn: Callable
    envelope_radius: float = math.inf
    symmetric: bool = False
    state_independent: bool = False
    angular_breaks_: tuple = ()

    def density(self, x, u):
        u = np.asarray(u, dtype=float)
        r = np.linalg.norm(u, axis=-1)
        vals = np.asarray(self.density_fn(np.atleast_1d(np.asarray(x, dtype=float)), u), dtype=float)
        vals = np.broadcast_to(vals, r.shape)
        return np.where(r <= self.envelope_radius, vals, 0.0)

    def envelope(self, x, r):
        r = np.asarray(r, dtype=float)
        vals = np.asarray(self.envelope_fn(np.atleast_1d(np.asarray(x, dtype=float)), r), dtype=float)
        return np.where(r <= self.envelope_radius, np.broadcast_to(vals, r.shape), 0.0)

    def support_radius(self, x) -> float:
        return float(self.envelope_radius)

    def radial_breaks(self, x) -> tuple:
        return () if math.isinf(self.envelope_radius) else (float(self.envelope_radius),)

    def angular_breaks(self, d: int) -> tuple:
        return tuple(self.angular_breaks_)


@dataclass(frozen=True)
class ScaledKernel(Kernel):
    """``factor * base``."""

    base: Kernel
    factor: float

    def __post_init__(self) -> None:
        if not float(self.factor) > 0.0:
            raise ModelError("scale factor must be positive")
        object.__setattr__(self, "factor", float(self.factor))

    @property
    def symmetric(self) -> bool:  # type: ignore[override]
        return self.base.symmetric

    @property
    def isotropic(self) -> bool:  # type: ignore[override]
        return self.base.isotropic

    @property
    def state_independent(self) -> bool:  # type: ignore[override]
        return self.base.state_independent

    @property
    def axisymmetric(self) -> bool:
        return self.base.axisymmetric

    @property
    def closed_form(self) -> bool:
        return self.base.closed_form

    def density(self, x, u):
        return self.factor * self.base.density(x, u)

    def envelope(self, x, r):
        return self.factor * self.base.envelope(x, r)

    def support_radius(self, x) -> float:
        return self.base.support_radius(x)

    def radial_breaks(self, x) -> tuple:
        return self.base.radial_breaks(x)

    def radial_law(self, x):
        law = self.base.radial_law(x)
        if law is None:
            return None
        return self.factor * law[0], law[1]

    def angular(self, x, e):
        return self.base.angular(x, e)

    def angular_breaks(self, d: int) -> tuple:
        return self.base.angular_breaks(d)

    def check_dimension(self, d: int) -> None:
        self.base.check_dimension(d)


def eval_kernel_density(spec: Kernel, x, u) -> float:
    """Lebesgue density of ``nu(x, .)`` at the jump ``u``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not np.any(u != 0.0):
        raise ModelError("the kernel has no atom at u = 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(spec.density(x, u[None, :])[0])


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


def _probe_states(d: int) -> list[np.ndarray]:
    states = []
    for r in (0.0, 1.0, 10.0, 1000.0):
        e = np.zeros(d)
        e[0] = r
        states.append(e)
    return states


@dataclass(frozen=True)
class ModelSpec:
    """Dimension, drift and jump kernel of a Levy-type generator."""

    dimension: int
    drift: object = field(default_factory=ZeroDrift)
    kernel: Kernel = field(default_factory=NoJumps)

    def __post_init__(self) -> None:
        d = int(self.dimension)
        if d < 1:
            raise ModelError("dimension must be positive")
        object.__setattr__(self, "dimension", d)
        self.kernel.check_dimension(d)
        if d > 3 and not (self.kernel.closed_form and self.kernel.isotropic):
            raise ModelError("numerically integrated kernels are limited to d <= 3")
        if isinstance(self.drift, LinearDrift) and self.drift.A.shape != (d, d):
            raise ModelError("linear drift matrix does not match the dimension")
        if not self.kernel.closed_form:
            self._check_levy_integrability()

    def _check_levy_integrability(self) -> None:
        from .quadrature import Ball, Complement, AbsU2, One, integrate_region, QuadratureError

        for x in _probe_states(self.dimension):
            try:
                small = integrate_region(self.kernel, x, Ball(1.0), AbsU2(), tol=1e-6)
                big = integrate_region(self.kernel, x, Complement(1.0), One(), tol=1e-6)
            except QuadratureError as exc:
                raise ModelError(f"kernel fails the Levy integrability test at x={x.tolist()}: {exc}") from exc
            if not (np.isfinite(small) and np.isfinite(big)):
                raise ModelError(f"kernel fails the Levy integrability test at x={x.tolist()}")

    def drift_at(self, x) -> np.ndarray:
        return eval_drift(self.drift, x)

    def scaled(self, factor: float) -> "ModelSpec":
        """Same model with the kernel multiplied by ``factor``."""
        return ModelSpec(self.dimension, self.drift, ScaledKernel(self.kernel, factor))
