"""Built-in consistency checks run by ``levyerg selfcheck``."""

from __future__ import annotations

import math

import numpy as np

from .asymptotics import analyze, example2_closed_forms
from .growth import eval_generator_V, growth_at, lemma1_rhs
from .model import BoundedSymmetric1D, LyapunovParams, ModelSpec, PowerLawStable, PowerRadialDrift
from .modelfile import BUNDLED_MODELS, bundled_model_path, load_model
from .verdict import BALL_A, RateFunction, check_theorem2, eval_symbol, psi

__all__ = ["run_selfcheck", "lemma1_worst"]

_KEYS = ("phi_ball_plus", "phi_large", "phi_big", "phi_drift")


def _closed_forms() -> tuple[bool, str]:
    lyap = LyapunovParams(0.5, 0.5)
    worst = 0.0
    for d in (1, 2):
        model = ModelSpec(d, PowerRadialDrift(1.0, 0.3), PowerLawStable(0.5, 1.5))
        for R in (1e2, 1e3, 1e6):
            x = np.zeros(d)
            x[0] = R
            row = growth_at(model, lyap, x)
            ref = example2_closed_forms(R, d, 0.5, 0.5, 1.5, 0.5, 1.0, 0.3)
            for k in _KEYS:
                worst = max(worst, abs(getattr(row, k) / ref[k] - 1.0))
    return worst <= 1e-6, f"max relative error {worst:.3g} (tolerance 1e-6)"


def lemma1_worst(model: ModelSpec, lyap: LyapunovParams, rmin: float = 1e3, max_radii: int | None = None) -> float:
    """Largest ``(LV - rhs) / (1 + |rhs|)`` over grid states with ``|x| >= rmin``.

    When ``phi^drift`` vanishes ``zeta`` is undefined and its term drops out,
    so ``zeta = 0`` is used.
    """
    grid, prof, rep = analyze(model, lyap)
    zeta = rep.zeta.value if math.isfinite(rep.zeta.value) else 0.0
    radii = [R for R in prof.radii if R >= rmin]
    if max_radii is not None and len(radii) > max_radii:
        idx = np.unique(np.linspace(0, len(radii) - 1, max_radii).round().astype(int))
        radii = [radii[i] for i in idx]
    keep = set(radii)
    worst = -math.inf
    for row in prof.rows:
        if row.radius not in keep:
            continue
        lv = eval_generator_V(model, lyap, np.array(row.x))
        rhs = lemma1_rhs(row, zeta)
        worst = max(worst, (lv - rhs) / (1.0 + abs(rhs)))
    return worst


def _lemma1() -> list[tuple[str, bool, str]]:
    out = []
    for name in BUNDLED_MODELS:
        model, lyap = load_model(bundled_model_path(name))
        w = lemma1_worst(model, lyap, max_radii=4)
        out.append((f"lemma1 {name}", w <= 1e-8, f"worst normalized excess {w:.3g} (tolerance 1e-8)"))
    return out


def _example1() -> tuple[bool, str]:
    model, lyap = load_model(bundled_model_path("example1"))
    _, _, rep = analyze(model, lyap)
    v = check_theorem2(rep, lyap.p)
    want = -lyap.p * (1.0 - lyap.p) / 4.0
    ok = v.case == BALL_A and abs(v.margin - want) <= 1e-9
    return ok, f"case {v.case}, margin {v.margin!r} (expected {BALL_A}, {want!r})"


def _symbol() -> tuple[bool, str]:
    model = ModelSpec(1, kernel=BoundedSymmetric1D("uniform", 1.0, 2.0))
    xi = 0.1
    got = eval_symbol(model, np.zeros(1), np.array([xi]))
    want = 2.0 - 2.0 * math.sin(xi) / xi
    err = abs(got - want)
    return err <= 1e-9, f"q(0, 0.1) = {got.real!r}, expected {want!r}, error {err:.3g}"


def _rate() -> tuple[bool, str]:
    v = psi(12.0, RateFunction(1.0, 0.5))
    return abs(v - 0.5) <= 1e-12, f"psi(12) = {v!r} (expected 0.5)"


def run_selfcheck() -> list[tuple[str, bool, str]]:
    """List of ``(name, passed, detail)``."""
    results = [("closed forms", *_closed_forms())]
    results += _lemma1()
    results.append(("example1 verdict", *_example1()))
    results.append(("uniform symbol", *_symbol()))
    results.append(("rate spot value", *_rate()))
    return results
