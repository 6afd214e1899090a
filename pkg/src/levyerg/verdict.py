"""Decision procedure for the comparison inequalities, rate functions and
symbol checks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .asymptotics import (
    DIVERGING,
    FINITE,
    INDETERMINATE,
    ConstantEstimate,
    ConstantsReport,
    PowerFit,
    RadialGrid,
    analyze,
)
from .growth import eval_generator_V
from .model import LyapunovParams, ModelSpec, eval_V, frame
from .quadrature import (
    DEFAULT_ANGULAR,
    Ball,
    FunctionWeight,
    _radial_integral,
    angular_rule,
    gk_adaptive,
    integrate_region,
)

__all__ = [
    "RateFunction",
    "F",
    "F_inv",
    "psi",
    "Verdict",
    "constants_from_values",
    "check_theorem2",
    "lyapunov_margin",
    "eval_symbol",
    "SymbolReport",
    "check_symbol_condition",
    "run_verdict",
]

DRIFT = "Drift"
BALL_A = "BallA"
BALL_B = "BallB"
INCONCLUSIVE = "Inconclusive"


# ---------------------------------------------------------------------------
# Rate functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFunction:
    """``f(u) = K u^q`` or ``K u^q ln(e - 1 + u)`` with rate parameters.

    The shifted logarithm keeps ``f`` positive at ``u = 1`` while matching
    ``K u^q ln u`` asymptotically.
    """

    K: float
    q: float
    log_power: int = 0
    gamma_t: float = 0.5
    delta: float = 0.5

    def __post_init__(self) -> None:
        if not (self.K > 0.0 and math.isfinite(self.K)):
            raise ValueError("K must be positive and finite")
        if not (0.0 < self.q <= 1.0):
            raise ValueError("q must lie in (0, 1]")
        if self.log_power not in (0, 1):
            raise ValueError("log_power must be 0 or 1")
        for name in ("gamma_t", "delta"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1)")

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = self.K * u ** self.q
        if self.log_power:
            out = out * np.log(math.e - 1.0 + u)
        return out if out.ndim else float(out)


def _F_numeric(t: float, f: RateFunction) -> float:
    """``int_1^t dw / f(w)`` in the variable ``y = ln w``."""
    if t == 1.0:
        return 0.0
    L = math.log(t)

    def g(y):
        w = np.exp(y)
        return w / f(w)

    total = 0.0
    edges = np.linspace(0.0, L, max(2, int(math.ceil(L)) + 1))
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += gk_adaptive(g, float(lo), float(hi), rtol=1e-14, pieces=2)
    return total


def F(t: float, f: RateFunction, numeric: bool = False) -> float:
    """``F(t) = int_1^t dw / f(w)`` for ``t >= 1``."""
    t = float(t)
    if not t >= 1.0:
        raise ValueError("F needs t >= 1")
    if math.isinf(t):
        if f.q == 1.0 or numeric:
            return math.inf
    if f.log_power or numeric:
        return _F_numeric(t, f)
    if f.q == 1.0:
        return math.log(t) / f.K
    return (t ** (1.0 - f.q) - 1.0) / (f.K * (1.0 - f.q))


_T_MAX = 1e300


def F_inv(s: float, f: RateFunction, numeric: bool = False) -> float:
    """Inverse of ``F``; ``inf`` when ``s`` exceeds ``F(1e300)``."""
    s = float(s)
    if not s >= 0.0:
        raise ValueError("F_inv needs s >= 0")
    if s == 0.0:
        return 1.0
    if not (f.log_power or numeric):
        if f.q == 1.0:
            y = f.K * s
            return math.exp(y) if y < 690.0 else math.inf
        base = 1.0 + f.K * (1.0 - f.q) * s
        y = math.log(base) / (1.0 - f.q)
        return math.exp(y) if y < 690.0 else math.inf

    def h(y):
        return _F_numeric(math.exp(y), f) - s

    hi = 1.0
    while h(hi) < 0.0:
        hi *= 2.0
        if hi > math.log(_T_MAX):
            return math.inf
    y = brentq(h, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(y)


def psi(t: float, f: RateFunction, numeric: bool = False) -> float:
    """``psi(t) = f(F_inv(gamma_t t))^{-delta}`` for ``t >= 1``."""
    t = float(t)
    if not t >= 1.0:
        raise ValueError("psi needs t >= 1")
    u = F_inv(f.gamma_t * t, f, numeric)
    if math.isinf(u):
        return 0.0
    return float(f(u)) ** (-f.delta)


# ---------------------------------------------------------------------------
# Case decision
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    case: str
    margin: float
    rate: RateFunction | None = None
    lyapunov_C: float = math.nan
    reasons: tuple = ()
    margins: dict = field(default_factory=dict)
    q_raw: float = math.nan
    q_clamped: bool = False
    notes: tuple = ()

    def __post_init__(self) -> None:
        if self.case != INCONCLUSIVE and not self.margin < 0.0:
            raise ValueError("a positive verdict needs a negative margin")

    def rows(self) -> list[tuple[str, str]]:
        f = self.rate
        out = [
            ("case", self.case),
            ("margin", repr(float(self.margin))),
            ("LI1", repr(float(self.margins.get("LI1", math.nan)))),
            ("LI2a", repr(float(self.margins.get("LI2a", math.nan)))),
            ("LI2b", repr(float(self.margins.get("LI2b", math.nan)))),
            ("q_raw", repr(float(self.q_raw))),
            ("q_clamped", str(int(self.q_clamped))),
            ("K", repr(float(f.K)) if f else "nan"),
            ("q", repr(float(f.q)) if f else "nan"),
            ("log_power", str(f.log_power) if f else ""),
            ("gamma_t", repr(float(f.gamma_t)) if f else "nan"),
            ("delta", repr(float(f.delta)) if f else "nan"),
            ("lyapunov_C", repr(float(self.lyapunov_C))),
            ("reasons", " | ".join(self.reasons)),
            ("notes", " | ".join(self.notes)),
        ]
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerows(self.rows())

    def to_text(self) -> str:
        lines = [f"verdict: {self.case}", f"margin: {self.margin!r}"]
        for k in ("LI1", "LI2a", "LI2b"):
            if k in self.margins:
                lines.append(f"  {k} = {self.margins[k]!r}")
        if self.rate is not None:
            f = self.rate
            logs = " ln(e-1+u)" if f.log_power else ""
            lines.append(f"rate function: f(u) = {f.K!r} u^{f.q!r}{logs}")
            lines.append(f"rate parameters: gamma={f.gamma_t!r} delta={f.delta!r}")
            if self.q_clamped:
                lines.append(f"exponent clamped to 1 (raw {self.q_raw!r})")
        else:
            lines.append("rate function: unavailable")
        if math.isfinite(self.lyapunov_C):
            lines.append(f"Lyapunov constant C (grid maximum): {self.lyapunov_C!r}")
        for r in self.reasons:
            lines.append(f"reason: {r}")
        for n in self.notes:
            lines.append(f"note: {n}")
        return "\n".join(lines) + "\n"


def constants_from_values(
    values: Mapping[str, float],
    zeta: float = math.nan,
    fit_drift: PowerFit | None = None,
    fit_ball: PowerFit | None = None,
) -> ConstantsReport:
    """Report built from given constant values (all with status finite).

    ``C_drift_minus = inf`` is stored as the distinguished value.
    """
    names = ("C_ball", "C_big", "C_large", "C_tail", "C_drift_plus", "C_drift_minus")
    consts = {}
    for n in names:
        v = float(values.get(n, 0.0))
        if math.isinf(v) and n != "C_drift_minus":
            consts[n] = ConstantEstimate(n, v, DIVERGING)
        else:
            consts[n] = ConstantEstimate(n, v, FINITE, distinguished=math.isinf(v))
    z = ConstantEstimate("zeta", float(zeta), FINITE if math.isfinite(zeta) else "zero-denominator")
    return ConstantsReport(z, consts, fit_drift, fit_ball, (), 0)


def _usable(c: ConstantEstimate) -> bool:
    return c.status == FINITE and math.isfinite(c.value)


def check_theorem2(
    report: ConstantsReport,
    p: float,
    zeta: float | None = None,
    gamma_t: float = 0.5,
    delta: float = 0.5,
) -> Verdict:
    """Evaluate the drift case, then the two ball cases, in that order.

    Parameters
    ----------
    report
        Comparison constants and power lower bounds.
    p
        Lyapunov exponent in (0, 1).
    zeta
        Drift constant; defaults to the one stored in the report.
    gamma_t, delta
        Rate parameters of the resulting ``psi``.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie in (0, 1)")
    if zeta is None:
        zeta = report.zeta.value if report.zeta.status == FINITE else math.nan
    zeta = float(zeta)
    c = report.constants
    reasons: list[str] = []
    margins: dict = {}
    ball_part = None

    def blocked(names):
        bad = [n for n in names if not _usable(c[n])]
        for n in bad:
            reasons.append(f"{n} status {c[n].status}")
        return bool(bad)

    case, margin = None, math.nan
    # Case 1
    if math.isfinite(zeta) and zeta > 0.0:
        if not blocked(("C_drift_plus", "C_drift_minus", "C_big", "C_large")):
            m = -p * zeta + 0.25 * p * (c["C_drift_plus"].value + (p - 2.0) * c["C_drift_minus"].value)
            m += c["C_big"].value + c["C_large"].value
            margins["LI1"] = m
            if m < 0.0:
                case, margin = DRIFT, m
            else:
                reasons.append(f"LI1 margin {m!r} is not negative")
    else:
        reasons.append("drift case needs zeta > 0" + ("" if math.isfinite(zeta) else " (zeta undefined)"))

    cm = c["C_drift_minus"]
    if case is None:
        if cm.distinguished:
            if not blocked(("C_ball", "C_tail")):
                ball_part = 0.25 * p * (c["C_ball"].value + p - 2.0) + 2.0 * c["C_tail"].value
                margins["LI2a"] = ball_part
                if ball_part < 0.0:
                    case, margin = BALL_A, ball_part
                else:
                    reasons.append(f"LI2a margin {ball_part!r} is not negative")
        elif _usable(cm) and cm.value > 0.0 and math.isfinite(zeta) and -2.0 <= zeta <= 0.0:
            if not blocked(("C_ball", "C_tail")):
                ball_part = 0.25 * p * (c["C_ball"].value + p - 2.0) + 2.0 * c["C_tail"].value
                m = -p * zeta / cm.value + ball_part
                margins["LI2b"] = m
                if m < 0.0:
                    case, margin = BALL_B, m
                else:
                    reasons.append(f"LI2b margin {m!r} is not negative")
        else:
            reasons.append("ball cases need C_drift_minus = +inf, or C_drift_minus in (0, inf) with zeta in [-2, 0]")

    if case is None:
        first = next(iter(margins.values()), math.nan)
        return Verdict(INCONCLUSIVE, first, None, reasons=tuple(reasons), margins=margins)

    fit = report.fit_drift if case == DRIFT else report.fit_ball
    label = "drift" if case == DRIFT else "ball"
    if fit is not None and fit.status == INDETERMINATE:
        reasons.append(f"power lower bound ({label}) is indeterminate, residual {fit.residual:.3g}")
        return Verdict(INCONCLUSIVE, margin, None, reasons=tuple(reasons), margins=margins)
    notes = []
    rate, q_raw, clamped = None, math.nan, False
    if fit is None:
        notes.append(f"no power lower bound for the {label} term; rate unavailable")
    else:
        q_raw = fit.gamma / p
        if q_raw <= 0.0:
            notes.append(f"exponent gamma/p = {q_raw:.6g} is not positive; rate unavailable")
        else:
            clamped = q_raw > 1.0
            q = min(q_raw, 1.0)
            if clamped:
                notes.append("exponent clamped to 1 to keep f concave")
            rate = RateFunction(abs(margin) * fit.K, q, 1 if fit.log_flag else 0, gamma_t, delta)
    return Verdict(case, margin, rate, reasons=(), margins=margins, q_raw=q_raw, q_clamped=clamped, notes=tuple(notes))


def lyapunov_margin(
    model: ModelSpec,
    lyap: LyapunovParams,
    f: RateFunction,
    grid: RadialGrid | None = None,
    n_inner: int = 8,
    tol: float = 1e-9,
) -> tuple[float, bool]:
    """Smallest ``C`` with ``LV <= -f(V) + C`` on the probed states.

    The states are the grid radii plus ``n_inner`` radii between
    ``2**(1/lam)`` and the first grid radius, along every probe direction.
    """
    grid = (grid or RadialGrid()).guarded(lyap)
    inner = np.geomspace(lyap.guard_radius, grid.radii[0], n_inner + 1)[:-1]
    radii = np.concatenate([inner, grid.radii])
    best = -math.inf
    for e in grid.probe_directions(model.dimension):
        e = np.asarray(e, dtype=float)
        e = e / np.linalg.norm(e)
        for R in radii:
            x = R * e
            val = eval_generator_V(model, lyap, x, tol) + float(f(eval_V(x, lyap)))
            best = max(best, val)
    return best, True


# ---------------------------------------------------------------------------
# Symbol
# ---------------------------------------------------------------------------


def _one_minus_cos(t):
    return 2.0 * np.sin(0.5 * t) ** 2


def _t_minus_sin(t):
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-2
    t2 = t * t
    series = t * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    return np.where(small, series, t - np.sin(t))


def _outer_direction(kernel, x, e, k, a, b, tol):
    """``int_a^b rho(r) (1 - cos kr, -sin kr) dr`` along direction ``e``."""
    d = x.size

    def rho(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return kernel.density(x, r[:, None] * e[None, :]) * r ** (d - 1)

    if k == 0.0:
        return 0.0, 0.0
    cut = min(max(a, 2.0 * math.pi / abs(k)), b)
    re = im = 0.0
    if cut > a:
        re += gk_adaptive(lambda r: rho(r) * _one_minus_cos(k * r), a, cut, rtol=tol)
        im -= gk_adaptive(lambda r: rho(r) * np.sin(k * r), a, cut, rtol=tol)
    if b > cut:
        scalar = lambda r: float(rho(r)[0])  # noqa: E731

        def g(r):
            v = rho(r)
            return v, np.abs(v)

        mass, _ = _radial_integral(g, cut, b, tuple(kernel.radial_breaks(x)), tol)
        if math.isinf(b):
            eabs = max(tol * mass, 1e-300)
            cs, _ = quad(scalar, cut, b, weight="cos", wvar=abs(k), epsabs=eabs, limlst=200)
            sn, _ = quad(scalar, cut, b, weight="sin", wvar=abs(k), epsabs=eabs, limlst=200)
        else:
            cs, _ = quad(scalar, cut, b, weight="cos", wvar=abs(k), epsabs=1e-15, epsrel=tol, limit=500)
            sn, _ = quad(scalar, cut, b, weight="sin", wvar=abs(k), epsabs=1e-15, epsrel=tol, limit=500)
        re += mass - cs
        im -= math.copysign(1.0, k) * sn
    return re, im


def eval_symbol(model: ModelSpec, x, xi, tol: float = 1e-11) -> complex:
    """``q(x, xi) = -i l(x).xi + int (1 - e^{i xi.u} + i xi.u 1_{|u|<=1}) nu(x, du)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if x.size != model.dimension or xi.size != model.dimension:
        raise ValueError("state and frequency must match the model dimension")
    if not np.any(xi):
        return 0j
    d = x.size
    drift = np.asarray(model.drift_at(x), dtype=float)
    val = complex(0.0, -float(np.dot(drift, xi)))
    kernel = model.kernel
    if kernel.support_radius(x) <= 0.0:
        return val

    re_w = FunctionWeight(lambda u: _one_minus_cos(u @ xi), bound=2.0)
    val += integrate_region(kernel, x, Ball(1.0), re_w, tol, numeric=True)
    if not kernel.symmetric:
        im_w = FunctionWeight(lambda u: _t_minus_sin(u @ xi), bound=1.0)
        val += 1j * integrate_region(kernel, x, Ball(1.0), im_w, tol, numeric=True)

    b = kernel.support_radius(x)
    if b > 1.0:
        prev = None
        n = DEFAULT_ANGULAR[d]
        Q = frame(x)
        for _ in range(5):
            dirs, w = angular_rule(d, n, tuple(kernel.angular_breaks(d)), False)
            E = dirs @ Q.T
            re = im = 0.0
            for e, wj in zip(E, w):
                r_, i_ = _outer_direction(kernel, x, e, float(e @ xi), 1.0, b, tol)
                re += wj * r_
                im += wj * i_
            cur = complex(re, 0.0 if kernel.symmetric else im)
            if d == 1 or (prev is not None and abs(cur - prev) <= 1e-9 * max(abs(cur), 1e-300)):
                break
            prev = cur
            n *= 2
        val += cur
    return val


@dataclass(frozen=True)
class SymbolReport:
    radii: tuple
    sup_values: tuple
    decreasing: bool
    vanishing: bool
    n_states: int
    n_frequencies: int

    @property
    def holds(self) -> bool:
        return self.decreasing and self.vanishing

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["R", "sup_abs_q"])
            for R, v in zip(self.radii, self.sup_values):
                w.writerow([repr(float(R)), repr(float(v))])

    def to_text(self) -> str:
        return (
            f"symbol condition: sup |q(x, xi)| over |x| <= R, |xi| <= 1/R on {len(self.radii)} radii\n"
            f"sampling: {self.n_states} states x {self.n_frequencies} frequencies per radius\n"
            f"decreasing: {self.decreasing}; tends to zero: {self.vanishing}\n"
        )


def check_symbol_condition(
    model: ModelSpec,
    radii: Sequence[float] | None = None,
    directions: Sequence[Sequence[float]] | None = None,
    state_fractions: Sequence[float] = (0.0, 0.5, 1.0),
    frequency_fractions: Sequence[float] = (0.5, 1.0),
    tol: float = 1e-8,
) -> SymbolReport:
    """Sampled ``sup |q(x, xi)|`` over ``|x| <= R`` and ``|xi| <= 1/R``.

    Since ``q(x, -xi)`` is the conjugate of ``q(x, xi)``, only one frequency
    of each pair ``+-xi`` is evaluated.
    """
    d = model.dimension
    radii = np.geomspace(10.0, 1e5, 16) if radii is None else np.asarray(radii, dtype=float)
    if directions is None:
        from .asymptotics import default_directions

        directions = default_directions(d)
    dirs = [np.asarray(e, dtype=float) / np.linalg.norm(e) for e in directions]
    half = []
    for e in dirs:
        if not any(np.allclose(e, -f, atol=1e-12) or np.allclose(e, f, atol=1e-12) for f in half):
            half.append(e)
    sups = []
    for R in radii:
        states = [np.zeros(d)] if 0.0 in state_fractions else []
        states += [s * R * e for s in state_fractions if s > 0.0 for e in dirs]
        freqs = [s / R * e for s in frequency_fractions for e in half]
        best = 0.0
        for x in states:
            for xi in freqs:
                best = max(best, abs(eval_symbol(model, x, xi, tol)))
        sups.append(best)
    s = np.asarray(sups)
    decreasing = bool(np.all(np.diff(s) <= 1e-12 * np.maximum(s[:-1], 1e-300)))
    vanishing = bool(s[-1] <= 1e-3 * s[0]) if s[0] > 0 else True
    return SymbolReport(tuple(float(r) for r in radii), tuple(float(v) for v in s), decreasing, vanishing,
                        len(states), len(freqs))


def run_verdict(
    model: ModelSpec,
    lyap: LyapunovParams,
    grid: RadialGrid | None = None,
    gamma_t: float = 0.5,
    delta: float = 0.5,
    workers: int | None = 1,
    compute_C: bool = True,
):
    """Profile, constants and verdict (with the Lyapunov constant when a rate exists)."""
    grid, profile, report = analyze(model, lyap, grid, workers)
    v = check_theorem2(report, lyap.p, None, gamma_t, delta)
    if compute_C and v.rate is not None:
        C, _ = lyapunov_margin(model, lyap, v.rate, grid)
        v = Verdict(v.case, v.margin, v.rate, C, v.reasons, v.margins, v.q_raw, v.q_clamped, v.notes)
    return grid, profile, report, v
