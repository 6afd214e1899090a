"""Growth functionals, the exact generator applied to ``V`` and its upper bound."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import LyapunovParams, ModelError, ModelSpec, grad_V
from .quadrature import (
    AbsU,
    AbsU2,
    AbsU2Gamma2,
    AbsUp,
    Annulus,
    Ball,
    Complement,
    DivergenceError,
    GammaAbsU,
    GeneratorRemainder,
    LargeDiff,
    integrate_region,
)

__all__ = [
    "GrowthRow",
    "GrowthProfile",
    "growth_at",
    "growth_profile",
    "eval_generator_V",
    "correction_factors",
    "lemma1_rhs",
]


@dataclass(frozen=True)
class GrowthRow:
    """Growth functionals at one state ``x``."""

    radius: float
    direction: int
    x: tuple
    p: float
    lam: float
    phi_drift: float
    phi_ball_plus: float
    phi_ball_minus: float
    phi_big: float
    phi_large: float
    phi_ann_0: float
    phi_ann_lam: float
    drift_alignment: float
    drift_norm: float
    ann_abs: float


CSV_COLUMNS = (
    "radius",
    "direction",
    "phi_drift",
    "phi_ball_plus",
    "phi_ball_minus",
    "phi_big",
    "phi_large",
    "drift_alignment",
)


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class GrowthProfile:
    """Growth rows on a radius x direction grid (radius-major order)."""

    radii: tuple
    directions: tuple
    rows: tuple

    def row(self, k: int, j: int) -> GrowthRow:
        return self.rows[k * len(self.directions) + j]

    def matrix(self, name: str) -> np.ndarray:
        """Values of one field as an array of shape (n_radii, n_directions)."""
        vals = np.array([getattr(r, name) for r in self.rows], dtype=float)
        return vals.reshape(len(self.radii), len(self.directions))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                w.writerow(
                    [
                        _fmt(r.radius),
                        str(r.direction),
                        _fmt(r.phi_drift),
                        _fmt(r.phi_ball_plus),
                        _fmt(r.phi_ball_minus),
                        _fmt(r.phi_big),
                        _fmt(r.phi_large),
                        _fmt(r.drift_alignment),
                    ]
                )


def _state(x) -> tuple[np.ndarray, float]:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return x, float(np.linalg.norm(x))


def growth_at(model: ModelSpec, lyap: LyapunovParams, x, direction: int = -1, tol: float = 1e-9) -> GrowthRow:
    """Growth functionals at ``x``.

    Requires ``|x| >= 2**(1/lam)`` so that ``|x|^lam > 1`` and all regions are
    nondegenerate.  A divergent large-jump integral is reported as ``inf``.
    """
    x, R = _state(x)
    if x.size != model.dimension:
        raise ModelError("state dimension does not match the model")
    if R < lyap.guard_radius * (1.0 - 1e-12):
        raise ModelError(f"growth functionals need |x| >= 2**(1/lam) = {lyap.guard_radius:.6g}")
    p, lam = lyap.p, lyap.lam
    k = model.kernel
    rl = R ** lam

    ball_plus = integrate_region(k, x, Ball(rl), AbsU2(), tol)
    ball_minus = integrate_region(k, x, Ball(rl), AbsU2Gamma2(x), tol)
    ann_lam = integrate_region(k, x, Annulus(rl, R), AbsU(), tol)
    ann_abs = integrate_region(k, x, Annulus(1.0, R), AbsU(), tol)
    ann_gamma = integrate_region(k, x, Annulus(1.0, R), GammaAbsU(x), tol)
    try:
        large = integrate_region(k, x, Complement(R), AbsUp(p), tol)
    except DivergenceError:
        large = math.inf

    drift = np.asarray(model.drift_at(x), dtype=float)
    dnorm = float(np.linalg.norm(drift))
    dalign = float(np.dot(drift, x) / R)

    scale1 = R ** (p - 1.0)
    return GrowthRow(
        radius=R,
        direction=int(direction),
        x=tuple(float(v) for v in x),
        p=p,
        lam=lam,
        phi_drift=scale1 * max(dnorm, ann_abs),
        phi_ball_plus=R ** (p - 2.0) * ball_plus,
        phi_ball_minus=min(R ** (p - 2.0) * ball_minus, R ** (p - 2.0) * ball_plus),
        phi_big=0.5 * p * scale1 * ann_lam,
        phi_large=large,
        phi_ann_0=scale1 * ann_abs,
        phi_ann_lam=scale1 * ann_lam,
        drift_alignment=dalign + ann_gamma,
        drift_norm=dnorm,
        ann_abs=ann_abs,
    )


def growth_profile(
    model: ModelSpec,
    lyap: LyapunovParams,
    radii: Sequence[float],
    directions: Sequence[Sequence[float]],
    workers: int | None = 1,
    tol: float = 1e-9,
) -> GrowthProfile:
    """Growth rows for every (radius, direction) pair, radius-major."""
    dirs = [np.asarray(e, dtype=float) / np.linalg.norm(e) for e in directions]
    jobs = [(float(R), j, R * e) for R in radii for j, e in enumerate(dirs)]

    def run(job):
        R, j, x = job
        return growth_at(model, lyap, x, direction=j, tol=tol)

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]
    return GrowthProfile(tuple(float(r) for r in radii), tuple(tuple(e.tolist()) for e in dirs), tuple(rows))


def eval_generator_V(model: ModelSpec, lyap: LyapunovParams, x, tol: float = 1e-9) -> float:
    """Exact ``LV(x)`` for ``|x| > 1`` from the drift, ball, big and large parts."""
    x, R = _state(x)
    if not R > 1.0:
        raise ModelError("eval_generator_V needs |x| > 1")
    p = lyap.p
    k = model.kernel
    drift = np.asarray(model.drift_at(x), dtype=float)
    g = grad_V(x, lyap)
    comp = integrate_region(k, x, Annulus(1.0, R), GammaAbsU(x), tol)
    drift_part = float(np.dot(g, drift)) + p * R ** (p - 1.0) * comp
    rl = R ** lyap.lam
    ball = integrate_region(k, x, Ball(rl), GeneratorRemainder(x, lyap), tol)
    big = integrate_region(k, x, Annulus(rl, R), GeneratorRemainder(x, lyap), tol) if rl < R else 0.0
    large = integrate_region(k, x, Complement(R), LargeDiff(x, lyap), tol)
    return drift_part + ball + big + large


def correction_factors(R: float, lam: float, p: float) -> tuple[float, float]:
    """Factors ``C1``, ``C2`` multiplying the ball terms at radius ``R``."""
    rho = R ** (lam - 1.0)
    c1 = 1.0 / (1.0 - rho) ** (2.0 - p) + 2.0 * (2.0 - p) * rho / ((1.0 + rho) ** (2.0 - p) * (1.0 - rho) ** 2)
    c2 = 1.0 / (1.0 + rho) ** (4.0 - p)
    return c1, c2


def lemma1_rhs(row: GrowthRow, zeta: float, p: float | None = None) -> float:
    """Upper bound for ``LV`` from the growth functionals and ``zeta``."""
    if not (-2.0 <= zeta <= 2.0):
        raise ValueError("zeta must lie in [-2, 2]")
    p = row.p if p is None else float(p)
    c1, c2 = correction_factors(row.radius, row.lam, p)
    out = -p * zeta * row.phi_drift
    out += 0.25 * p * (c1 * row.phi_ball_plus + (p - 2.0) * c2 * row.phi_ball_minus)
    return out + row.phi_big + row.phi_large
