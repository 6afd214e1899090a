"""Comparison constants, the drift constant zeta and power lower bounds.

Limits as ``|x| -> oo`` are discretized on a geometric radius grid: a
limsup (liminf) is the maximum (minimum) of the defining ratio over the
tail of the grid and over all probe directions.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .growth import GrowthProfile, growth_profile
from .model import LyapunovParams, ModelSpec, sphere_area

__all__ = [
    "RadialGrid",
    "ConstantEstimate",
    "PowerFit",
    "ConstantsReport",
    "default_directions",
    "estimate_zeta",
    "zeta_from_profile",
    "estimate_constants",
    "fit_power_lower_bound",
    "analyze",
    "example2_closed_forms",
    "example2_constants",
]

FINITE = "finite"
DIVERGING = "diverging"
ZERO_DEN = "zero-denominator"
INDETERMINATE = "indeterminate"

# log-log slope beyond which a monotone tail sequence is read as a power trend
SLOPE_TOL = 0.05
# residual thresholds of the power fit
FIT_EXACT = 1e-3
FIT_INDETERMINATE = 0.25


def default_directions(d: int) -> tuple:
    """Probe directions: +/- axes, plus the diagonals for d = 2, 3."""
    dirs = []
    for i in range(d):
        for s in (1.0, -1.0):
            e = [0.0] * d
            e[i] = s
            dirs.append(tuple(e))
    if d in (2, 3):
        for signs in itertools.product((1.0, -1.0), repeat=d):
            n = math.sqrt(d)
            dirs.append(tuple(s / n for s in signs))
    return tuple(dirs)


@dataclass(frozen=True)
class RadialGrid:
    """Geometric radius grid ``R_k = r0 * ratio**k`` with probe directions."""

    r0: float = 10.0
    ratio: float = 2.0 ** 0.5
    count: int = 40
    tail_fraction: float = 0.5
    directions: tuple | None = None

    def __post_init__(self) -> None:
        if not self.r0 > 0.0:
            raise ValueError("r0 must be positive")
        if not self.ratio > 1.0:
            raise ValueError("ratio must exceed 1")
        if not (0.0 < self.tail_fraction <= 1.0):
            raise ValueError("tail fraction must lie in (0, 1]")
        if self.n_tail < 8:
            raise ValueError("the grid needs at least 8 tail points")

    @property
    def n_tail(self) -> int:
        return min(self.count, int(math.ceil(self.count * self.tail_fraction - 1e-12)))

    @property
    def radii(self) -> np.ndarray:
        return self.r0 * self.ratio ** np.arange(self.count, dtype=float)

    @property
    def tail(self) -> slice:
        return slice(self.count - self.n_tail, self.count)

    def probe_directions(self, d: int) -> tuple:
        if self.directions is not None:
            return tuple(tuple(float(v) for v in e) for e in self.directions)
        return default_directions(d)

    def guarded(self, lyap: LyapunovParams) -> "RadialGrid":
        """Grid starting at ``max(r0, 2**(1/lam))``."""
        return replace(self, r0=max(self.r0, lyap.guard_radius))

    def doubling_steps(self) -> int:
        return max(1, int(round(math.log(2.0) / math.log(self.ratio))))


@dataclass(frozen=True)
class ConstantEstimate:
    """Estimate of one comparison constant with its tail ratio sequence."""

    name: str
    value: float
    status: str
    sequence: tuple = ()
    distinguished: bool = False
    note: str = ""

    @property
    def is_finite(self) -> bool:
        return self.status == FINITE and math.isfinite(self.value)


@dataclass(frozen=True)
class PowerFit:
    """Lower bound ``value >= K R^gamma [ln R]`` on the tail grid."""

    gamma: float
    K: float
    residual: float
    model: str = "power"
    log_flag: bool = False
    ls_slope: float = math.nan
    ls_residual: float = math.nan
    status: str = FINITE

    def bound(self, R):
        R = np.asarray(R, dtype=float)
        b = self.K * R ** self.gamma
        return b * np.log(R) if self.log_flag else b

    def __iter__(self):
        # allows ``gamma, K, residual = fit``
        return iter((self.gamma, self.K, self.residual))


@dataclass(frozen=True)
class ConstantsReport:
    zeta: ConstantEstimate
    constants: dict
    fit_drift: PowerFit | None
    fit_ball: PowerFit | None
    radii: tuple
    n_directions: int
    fit_notes: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> ConstantEstimate:
        if name == "zeta":
            return self.zeta
        return self.constants[name]

    @property
    def tail_range(self) -> tuple[float, float]:
        return self.radii[0], self.radii[-1]

    def to_csv(self, path) -> None:
        names = ["zeta", *self.constants.keys()]
        width = max(len(self[n].sequence) for n in names)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "estimate", "status", *[f"seq_{i}" for i in range(width)]])
            for n in names:
                c = self[n]
                seq = [repr(float(v)) for v in c.sequence]
                w.writerow([n, repr(float(c.value)), c.status, *seq, *[""] * (width - len(seq))])
            for label, fit in (("drift", self.fit_drift), ("ball", self.fit_ball)):
                if fit is None:
                    w.writerow([f"gamma_{label}", "nan", self.fit_notes.get(label, "unavailable"), *[""] * width])
                    w.writerow([f"K_{label}", "nan", self.fit_notes.get(label, "unavailable"), *[""] * width])
                    continue
                w.writerow([f"gamma_{label}", repr(float(fit.gamma)), fit.status, *[""] * width])
                w.writerow([f"K_{label}", repr(float(fit.K)), fit.status, *[""] * width])

    def to_text(self) -> str:
        lo, hi = self.tail_range
        lines = [
            "constants report",
            f"probed tail radii: {lo:.6g} .. {hi:.6g} ({len(self.radii)} radii x {self.n_directions} directions)",
            "direction policy: worst case over probe directions (max for limsup, min for liminf)",
            "",
        ]
        for n in ["zeta", *self.constants.keys()]:
            c = self[n]
            extra = " (distinguished +inf)" if c.distinguished else ""
            note = f"  [{c.note}]" if c.note else ""
            lines.append(f"{n:>14s} = {c.value!r:<24s} status={c.status}{extra}{note}")
        lines.append("")
        for label, fit in (("drift", self.fit_drift), ("ball", self.fit_ball)):
            if fit is None:
                lines.append(f"power bound {label}: unavailable ({self.fit_notes.get(label, '')})")
            else:
                lines.append(
                    f"power bound {label}: gamma={fit.gamma!r} K={fit.K!r} model={fit.model} "
                    f"log={int(fit.log_flag)} residual={fit.residual:.3g} status={fit.status}"
                )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Ratio constants
# ---------------------------------------------------------------------------


def _loglog_slope(radii: np.ndarray, seq: np.ndarray) -> float:
    ok = np.isfinite(seq) & (seq > 0)
    if np.count_nonzero(ok) < 3:
        return math.nan
    return float(np.polyfit(np.log(radii[ok]), np.log(seq[ok]), 1)[0])


def _oscillating(seq: np.ndarray) -> bool:
    ok = np.isfinite(seq) & (seq > 0)
    if np.count_nonzero(ok) < 4:
        return False
    dl = np.diff(np.log(seq[ok]))
    sig = dl[np.abs(dl) > 0.05]
    if sig.size < 2:
        return False
    return int(np.count_nonzero(np.diff(np.sign(sig)) != 0)) >= 3


def _ratio_constant(
    name: str,
    num: np.ndarray,
    den: np.ndarray,
    radii: np.ndarray,
    kind: str,
    grid: RadialGrid,
    allow_distinguished: bool = False,
) -> ConstantEstimate:
    """Tail sup (``kind='sup'``) or inf of ``num/den`` over directions and radii."""
    if np.any(np.isinf(num)):
        return ConstantEstimate(name, math.inf, DIVERGING, note="numerator is infinite")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / den
    zero_den = den == 0.0
    r = np.where(zero_den & (num == 0.0), np.nan, r)
    r = np.where(zero_den & (num != 0.0), np.inf, r)
    if np.all(np.isnan(r)):
        return ConstantEstimate(name, math.nan, INDETERMINATE, note="0/0 on the whole tail")
    with np.errstate(invalid="ignore"):
        seq = np.nanmax(r, axis=1) if kind == "sup" else np.nanmin(r, axis=1)
    seq_t = tuple(float(v) for v in seq)
    if np.any(np.isinf(seq)):
        if allow_distinguished and np.all(den == 0.0) and np.all(num > 0.0):
            return ConstantEstimate(name, math.inf, FINITE, seq_t, distinguished=True, note="denominator vanishes on the tail")
        return ConstantEstimate(name, math.inf, ZERO_DEN, seq_t, note="denominator vanishes where numerator does not")
    valid = np.isfinite(seq)
    if _oscillating(seq):
        return ConstantEstimate(name, math.nan, INDETERMINATE, seq_t, note="oscillating tail ratios")
    steps = grid.doubling_steps()
    if seq.size > steps and seq[-1 - steps] > 0 and seq[-1] > 2.0 * seq[-1 - steps]:
        return ConstantEstimate(name, math.inf, DIVERGING, seq_t, note="ratio more than doubles over the last doubling of |x|")
    slope = _loglog_slope(radii, seq)
    d = np.diff(seq[valid])
    if math.isfinite(slope) and slope > SLOPE_TOL and np.all(d >= 0):
        return ConstantEstimate(name, math.inf, DIVERGING, seq_t, note=f"monotone power growth, log-log slope {slope:.3g}")
    if math.isfinite(slope) and slope < -SLOPE_TOL and np.all(d <= 0):
        return ConstantEstimate(name, 0.0, FINITE, seq_t, note=f"monotone power decay to 0, log-log slope {slope:.3g}")
    if np.all(seq[valid] == 0.0):
        return ConstantEstimate(name, 0.0, FINITE, seq_t)
    value = float(np.nanmax(seq)) if kind == "sup" else float(np.nanmin(seq))
    return ConstantEstimate(name, value, FINITE, seq_t)


def zeta_from_profile(profile: GrowthProfile, grid: RadialGrid) -> ConstantEstimate:
    """Largest ``zeta`` with ``L^drift V <= -p zeta phi^drift`` on the probed tail."""
    sl = grid.tail
    a = profile.matrix("drift_alignment")[sl]
    den = np.maximum(profile.matrix("drift_norm")[sl], profile.matrix("ann_abs")[sl])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = -a / den
    r = np.where(den == 0.0, np.nan, r)
    if np.all(np.isnan(r)):
        return ConstantEstimate("zeta", math.nan, ZERO_DEN, note="phi_drift vanishes on the tail")
    seq = np.nanmin(r, axis=1)
    value = float(np.clip(np.nanmin(seq), -2.0, 2.0))
    return ConstantEstimate("zeta", value, FINITE, tuple(float(v) for v in seq))


def estimate_zeta(model: ModelSpec, lyap: LyapunovParams, grid: RadialGrid | None = None, workers: int | None = 1):
    """``(zeta_hat, status)`` for the model on the tail of the grid."""
    grid = (grid or RadialGrid()).guarded(lyap)
    prof = growth_profile(model, lyap, grid.radii[grid.tail], grid.probe_directions(model.dimension), workers)
    sub = replace(grid, count=grid.n_tail, tail_fraction=1.0, r0=float(grid.radii[grid.tail][0]))
    z = zeta_from_profile(prof, sub)
    return z.value, z.status


def estimate_constants(profile: GrowthProfile, grid: RadialGrid) -> ConstantsReport:
    """Estimate every comparison constant from a full-grid profile."""
    radii = np.asarray(profile.radii)
    if radii.size != grid.count:
        raise ValueError("profile does not cover the grid")
    sl = grid.tail
    tr = radii[sl]
    m = {n: profile.matrix(n)[sl] for n in ("phi_drift", "phi_ball_plus", "phi_ball_minus", "phi_big", "phi_large")}
    drift, bp, bm, big, large = m["phi_drift"], m["phi_ball_plus"], m["phi_ball_minus"], m["phi_big"], m["phi_large"]
    consts = {
        "C_ball": _ratio_constant("C_ball", bp, bm, tr, "sup", grid),
        "C_big": _ratio_constant("C_big", big, drift, tr, "sup", grid),
        "C_large": _ratio_constant("C_large", large, drift, tr, "sup", grid),
        "C_tail": _ratio_constant("C_tail", np.maximum(big, large), bm, tr, "sup", grid),
        "C_drift_plus": _ratio_constant("C_drift_plus", bp, drift, tr, "sup", grid),
        "C_drift_minus": _ratio_constant("C_drift_minus", bm, drift, tr, "inf", grid, allow_distinguished=True),
    }
    notes = {}
    fits = {}
    for label, mat in (("drift", profile.matrix("phi_drift")), ("ball", profile.matrix("phi_ball_minus"))):
        try:
            fits[label] = fit_power_lower_bound(np.min(mat, axis=1), grid)
        except ValueError as exc:
            fits[label] = None
            notes[label] = str(exc)
    return ConstantsReport(
        zeta=zeta_from_profile(profile, grid),
        constants=consts,
        fit_drift=fits["drift"],
        fit_ball=fits["ball"],
        radii=tuple(float(v) for v in tr),
        n_directions=len(profile.directions),
        fit_notes=notes,
    )


def analyze(model: ModelSpec, lyap: LyapunovParams, grid: RadialGrid | None = None, workers: int | None = 1):
    """Growth profile on the guarded grid and the constants report."""
    grid = (grid or RadialGrid()).guarded(lyap)
    prof = growth_profile(model, lyap, grid.radii, grid.probe_directions(model.dimension), workers)
    return grid, prof, estimate_constants(prof, grid)


# ---------------------------------------------------------------------------
# Power lower bounds
# ---------------------------------------------------------------------------


def _power_ls(L: np.ndarray, v: np.ndarray) -> tuple[float, float, float]:
    y = np.log(v)
    A = np.column_stack([np.ones_like(L), L])
    (c, g), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.max(np.abs(v / np.exp(c + g * L) - 1.0)))
    return float(g), float(c), res


def _vp_residual(g: float, kappa: float, L: np.ndarray, v: np.ndarray):
    X = np.column_stack([np.exp(g * L), np.exp((g - kappa) * L)]) / v[:, None]
    coef, *_ = np.linalg.lstsq(X, np.ones_like(v), rcond=None)
    r = X @ coef - 1.0
    return float(r @ r), coef, r


def _power_corrected(L: np.ndarray, v: np.ndarray, slope: float):
    """Fit ``A R^g + B R^{g - kappa}`` (kappa >= 0.05) by variable projection."""
    L0 = L - L.mean()
    vs = v / np.exp(slope * L)  # keeps exponents near zero
    best = None
    for kappa in (0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0):
        for dg in np.linspace(-1.0, 1.0, 41):
            sse, coef, _ = _vp_residual(dg, kappa, L0, vs)
            if best is None or sse < best[0]:
                best = (sse, dg, kappa)

    def obj(z):
        dg, lk = z
        kappa = 0.05 + math.exp(lk)
        return _vp_residual(dg, kappa, L0, vs)[0]

    res = minimize(obj, [best[1], math.log(max(best[2] - 0.05, 1e-6))], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-30, "maxiter": 4000, "maxfev": 8000})
    dg, lk = res.x
    kappa = 0.05 + math.exp(lk)
    _, coef, r = _vp_residual(dg, kappa, L0, vs)
    if not coef[0] > 0.0:
        return None
    return slope + float(dg), float(np.max(np.abs(r)))


def _power_log(L: np.ndarray, v: np.ndarray):
    if np.any(L <= 0.0):
        return None
    g, c, res = _power_ls(L, v / L)
    return g, res


def fit_power_lower_bound(values, grid) -> PowerFit:
    """Power lower bound ``value >= K R^gamma`` on the tail of the grid.

    ``gamma`` is the least-squares log-log slope.  When that fit leaves a
    relative residual above 1e-3, two alternatives are tried: a power law
    with a lower-order power correction and a power law times ``ln R``.  An
    alternative is adopted only if it cuts the residual at least tenfold;
    the ``ln R`` model raises ``log_flag``.  ``K`` is the minimum of
    ``value / (R^gamma [ln R])`` over the tail, so the bound holds exactly at
    every tail point.

    Parameters
    ----------
    values
        Positive values on the grid (full grid, or tail only).
    grid
        A ``RadialGrid`` or an array of radii matching ``values``.
    """
    v = np.asarray(values, dtype=float)
    if isinstance(grid, RadialGrid):
        radii = grid.radii
        if v.size == grid.count:
            v = v[grid.tail]
            radii = radii[grid.tail]
        elif v.size == grid.n_tail:
            radii = radii[grid.tail]
        else:
            raise ValueError("values do not match the grid")
    else:
        radii = np.asarray(grid, dtype=float)
        if radii.size != v.size:
            raise ValueError("values do not match the radii")
    if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
        raise ValueError("power lower bound needs strictly positive finite values")
    L = np.log(radii)
    g, _, res = _power_ls(L, v)
    choice = ("power", g, res, False)
    if res > FIT_EXACT:
        alts = []
        corr = _power_corrected(L, v, g)
        if corr is not None:
            alts.append(("power+correction", corr[0], corr[1], False))
        plog = _power_log(L, v)
        if plog is not None:
            alts.append(("power*log", plog[0], plog[1], True))
        alts = [a for a in alts if a[2] <= res / 10.0]
        if alts:
            choice = min(alts, key=lambda a: a[2])
    name, gamma, resid, log_flag = choice
    base = radii ** gamma * (np.log(radii) if log_flag else 1.0)
    K = float(np.min(v / base))
    # step down past rounding so K * base <= value holds in floating point
    while K > 0.0 and np.any(K * base > v):
        K = math.nextafter(K, 0.0)
    status = FINITE if resid <= FIT_INDETERMINATE else INDETERMINATE
    return PowerFit(float(gamma), K, float(resid), name, log_flag, float(g), float(res), status)


# ---------------------------------------------------------------------------
# Closed forms for the power-law family
# ---------------------------------------------------------------------------


def _int_power(e: float, a: float, b: float) -> float:
    """``int_a^b r^{e-1} dr``."""
    if e == 0.0:
        return math.log(b / a)
    hi = 0.0 if math.isinf(b) else b ** e
    lo = 0.0 if a == 0.0 else a ** e
    return (hi - lo) / e


def example2_closed_forms(R: float, d: int, p: float, lam: float, alpha: float, beta: float,
                          drift_coef: float = 0.0, drift_exp: float = 0.0) -> dict:
    """Exact growth functionals of ``|x|^beta |u|^{-d-alpha}`` with radial drift."""
    S = sphere_area(d)
    c = R ** beta
    ball = S * c * _int_power(2.0 - alpha, 0.0, R ** lam)
    ann0 = S * c * _int_power(1.0 - alpha, 1.0, R)
    annl = S * c * _int_power(1.0 - alpha, R ** lam, R)
    large = S * c * _int_power(p - alpha, R, math.inf) if alpha > p else math.inf
    drift = abs(drift_coef) * R ** drift_exp
    return {
        "phi_ball_plus": R ** (p - 2.0) * ball,
        "phi_ball_minus": R ** (p - 2.0) * ball / d,
        "phi_ann_0": R ** (p - 1.0) * ann0,
        "phi_ann_lam": R ** (p - 1.0) * annl,
        "phi_big": 0.5 * p * R ** (p - 1.0) * annl,
        "phi_large": large,
        "phi_drift": R ** (p - 1.0) * max(drift, ann0),
    }


def example2_asymptotic_ann(R: float, d: int, p: float, alpha: float, beta: float, tau: float) -> float:
    """Leading-order ``phi^ann_tau`` in the three regimes of ``alpha``."""
    S = sphere_area(d)
    if alpha > 1.0:
        return S / (alpha - 1.0) * R ** (p - 1.0 + beta + (1.0 - alpha) * tau)
    if alpha < 1.0:
        return S / (1.0 - alpha) * R ** (p + beta - alpha)
    return S * (1.0 - tau) * R ** (p - 1.0 + beta) * math.log(R)


def example2_constants(p: float, alpha: float, lam: float = 0.5) -> dict:
    """Limits of the comparison constants for the isotropic power-law family
    with drift of lower order than the annulus term."""
    if alpha > 1.0:
        big = 0.0
    elif alpha == 1.0:
        big = 0.5 * p * (1.0 - lam)
    else:
        big = 0.5 * p
    if alpha <= p:
        large = math.inf
    elif alpha >= 1.0:
        large = 0.0
    else:
        large = (1.0 - alpha) / (alpha - p)
    return {"C_drift_plus": 0.0, "C_drift_minus": 0.0, "C_big": big, "C_large": large}
