import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyerg.asymptotics import (
    DIVERGING,
    FINITE,
    INDETERMINATE,
    ZERO_DEN,
    RadialGrid,
    analyze,
    default_directions,
    estimate_zeta,
    example2_asymptotic_ann,
    example2_closed_forms,
    example2_constants,
    fit_power_lower_bound,
)
from levyerg.growth import growth_profile
from levyerg.model import (
    BoundedSymmetric1D,
    LinearDrift,
    LyapunovParams,
    ModelSpec,
    PowerLawStable,
    PowerRadialDrift,
    StateIndependentStable,
    ZeroDrift,
)

LY = LyapunovParams(0.5, 0.5)
GRID = RadialGrid()


def test_grid_defaults():
    R = GRID.radii
    assert R.size == 40 and R[0] == 10.0
    assert np.all(np.diff(R) > 0)
    assert GRID.n_tail == 20
    assert GRID.doubling_steps() == 2
    assert R[-1] == pytest.approx(10 * 2 ** 19.5)
    with pytest.raises(ValueError):
        RadialGrid(count=10)
    with pytest.raises(ValueError):
        RadialGrid(ratio=1.0)


def test_guarded_grid():
    g = GRID.guarded(LyapunovParams(0.5, 0.2))
    assert g.r0 == 32.0


def test_default_directions_are_unit_vectors():
    for d in (1, 2, 3):
        dirs = np.array(default_directions(d))
        np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0)
        assert len(dirs) >= 2 * d


# power lower bounds ------------------------------------------------------------


def test_fit_exact_power():
    v = 3.0 * GRID.radii ** 0.7
    g, K, res = fit_power_lower_bound(v, GRID)
    assert g == pytest.approx(0.7, abs=1e-12)
    assert K == pytest.approx(3.0, rel=1e-10)
    assert res < 1e-10


def test_fit_oscillating_power():
    # the tail must cover several periods of sin(ln R) for the slope to settle
    grid = RadialGrid(count=120)
    R = grid.radii
    v = R ** 0.5 * (2.0 + np.sin(np.log(R)))
    fit = fit_power_lower_bound(v, grid)
    assert fit.gamma == pytest.approx(0.5, abs=0.05)
    tail = R[grid.tail]
    oracle = np.min(v[grid.tail] / tail ** fit.gamma)
    assert fit.K == pytest.approx(oracle, rel=1e-12)
    assert fit.K >= 1.0
    assert np.all(v[grid.tail] >= fit.bound(tail) * (1 - 1e-12))
    # oscillation leaves a large relative deviation
    assert fit.status == INDETERMINATE


def test_fit_phi_large_exponent():
    p, beta, alpha = 0.45, 0.7, 0.9
    R = GRID.radii
    v = np.array([example2_closed_forms(r, 1, p, 0.5, alpha, beta)["phi_large"] for r in R])
    fit = fit_power_lower_bound(v, GRID)
    assert fit.gamma == pytest.approx(p + beta - alpha, abs=0.01)


@given(
    st.floats(-2.0, 2.0),
    st.floats(0.01, 100.0),
    st.lists(st.floats(0.5, 2.0), min_size=20, max_size=20),
)
@settings(max_examples=50, deadline=None)
def test_fit_bound_holds_exactly_on_tail(g, c, noise):
    tail = GRID.radii[GRID.tail]
    v = c * tail ** g * np.array(noise)
    fit = fit_power_lower_bound(v, GRID)
    assert fit.K > 0
    assert np.all(v >= fit.bound(tail))


def test_fit_rejects_nonpositive():
    v = GRID.radii.copy()
    v[-1] = 0.0
    with pytest.raises(ValueError):
        fit_power_lower_bound(v, GRID)
    with pytest.raises(ValueError):
        fit_power_lower_bound(np.ones(7), GRID)


def _ann0(alpha):
    model = ModelSpec(1, PowerRadialDrift(1.0, 0.3), PowerLawStable(0.7, alpha))
    prof = growth_profile(model, LY, GRID.radii, [(1.0,)])
    return prof.matrix("phi_ann_0")[:, 0]


def test_three_regime_exponents():
    f15 = fit_power_lower_bound(_ann0(1.5), GRID)
    assert f15.gamma == pytest.approx(0.5 - 1 + 0.7, abs=0.02)
    assert not f15.log_flag
    f09 = fit_power_lower_bound(_ann0(0.9), GRID)
    assert f09.gamma == pytest.approx(0.5 + 0.7 - 0.9, abs=0.02)
    assert not f09.log_flag
    f10 = fit_power_lower_bound(_ann0(1.0), GRID)
    assert f10.ls_residual > 1e-3
    assert f10.log_flag
    assert f10.gamma == pytest.approx(0.5 - 1 + 0.7, abs=0.02)


def test_asymptotic_ann_matches_closed_form():
    # the next order term is smaller by R^{-|1 - alpha|}
    R = 1e12
    for alpha in (0.9, 1.5):
        exact = example2_closed_forms(R, 2, 0.5, 0.5, alpha, 0.7)["phi_ann_0"]
        lead = example2_asymptotic_ann(R, 2, 0.5, alpha, 0.7, 0.0)
        assert abs(lead / exact - 1.0) <= 2.0 * R ** -abs(1.0 - alpha)
    exact = example2_closed_forms(R, 1, 0.5, 0.5, 1.0, 0.7)["phi_ann_0"]
    assert example2_asymptotic_ann(R, 1, 0.5, 1.0, 0.7, 0.0) == pytest.approx(exact, rel=1e-12)


# zeta ------------------------------------------------------------------------


def test_zeta_examples():
    inward = ModelSpec(1, LinearDrift(((-1.0,),)), BoundedSymmetric1D())
    z, s = estimate_zeta(inward, LY)
    assert s == FINITE and z == pytest.approx(1.0, abs=1e-12)
    outward = ModelSpec(1, LinearDrift(((1.0,),)), BoundedSymmetric1D())
    z, s = estimate_zeta(outward, LY)
    assert s == FINITE and z == pytest.approx(-1.0, abs=1e-12)
    iso = ModelSpec(2, ZeroDrift(), StateIndependentStable(1.5))
    z, s = estimate_zeta(iso, LY)
    assert s == FINITE and z == pytest.approx(0.0, abs=1e-12)
    none = ModelSpec(1, ZeroDrift(), BoundedSymmetric1D())
    z, s = estimate_zeta(none, LY)
    assert s == ZERO_DEN and math.isnan(z)


# constants -------------------------------------------------------------------


def test_example1_constants():
    _, _, rep = analyze(ModelSpec(1, ZeroDrift(), BoundedSymmetric1D()), LY)
    assert rep["C_ball"].value == pytest.approx(1.0, abs=1e-12)
    assert rep["C_tail"].value == 0.0
    cm = rep["C_drift_minus"]
    assert math.isinf(cm.value) and cm.distinguished and cm.status == FINITE


def _closed_rows(radii, p, alpha):
    return [example2_closed_forms(r, 1, p, 0.5, alpha, 0.7, 1.0, 0.3) for r in radii]


def test_example2_alpha15_constants():
    model = ModelSpec(1, PowerRadialDrift(1.0, 0.3), PowerLawStable(0.7, 1.5))
    _, prof, rep = analyze(model, LY)
    for name in ("C_drift_plus", "C_big", "C_large"):
        c = rep[name]
        assert c.status == FINITE and c.value == 0.0, name
    # phi_drift ~ R^{p-1+beta}; ball ~ R^{p-2+beta+lam(2-alpha)},
    # big ~ R^{p-1+beta+lam(1-alpha)}, large ~ R^{p+beta-alpha}
    R = np.asarray(prof.radii)
    drift = prof.matrix("phi_drift").min(axis=1)
    for num, expo in (("phi_ball_plus", -0.75), ("phi_big", -0.25), ("phi_large", -0.5)):
        ratio = prof.matrix(num).max(axis=1) / drift
        slope = np.polyfit(np.log(R[-10:]), np.log(ratio[-10:]), 1)[0]
        assert slope == pytest.approx(expo, abs=0.03), num


def test_critical_tail_diverges():
    model = ModelSpec(1, LinearDrift(((-1.0,),)), PowerLawStable(0.0, 0.5))
    _, _, rep = analyze(model, LY)
    assert rep["C_large"].status == DIVERGING


def test_d1_power_law_ball_constant_is_one():
    model = ModelSpec(1, PowerRadialDrift(1.0, 0.3), PowerLawStable(0.3, 1.2))
    _, _, rep = analyze(model, LY)
    assert rep["C_ball"].value == 1.0


def test_d2_isotropic_ball_constant_is_two():
    model = ModelSpec(2, LinearDrift(((-1.0, 0.0), (0.0, -1.0))), StateIndependentStable(1.5))
    _, prof, rep = analyze(model, LY, RadialGrid(count=20))
    ratio = prof.matrix("phi_ball_plus") / prof.matrix("phi_ball_minus")
    np.testing.assert_allclose(ratio, 2.0, rtol=1e-6)
    assert rep["C_ball"].value == pytest.approx(2.0, rel=1e-6)


def test_kernel_only_constants_scale_invariant():
    model = ModelSpec(1, PowerRadialDrift(1.0, 0.3), PowerLawStable(0.7, 0.9))
    _, _, a = analyze(model, LY)
    _, _, b = analyze(model.scaled(7.0), LY)
    for name in ("C_ball", "C_tail"):
        assert b[name].status == a[name].status
        assert b[name].value == pytest.approx(a[name].value, rel=1e-10, abs=1e-10), name


def test_all_constants_scale_invariant_without_drift():
    model = ModelSpec(1, ZeroDrift(), PowerLawStable(0.7, 1.2))
    _, _, a = analyze(model, LY)
    _, _, b = analyze(model.scaled(7.0), LY)
    for name in ("zeta", *a.constants):
        x, y = a[name], b[name]
        assert x.status == y.status, name
        if math.isfinite(x.value):
            assert y.value == pytest.approx(x.value, rel=1e-10, abs=1e-10), name


def test_example2_constant_limits():
    assert example2_constants(0.5, 1.5) == {"C_drift_plus": 0.0, "C_drift_minus": 0.0, "C_big": 0.0, "C_large": 0.0}
    assert example2_constants(0.5, 1.0)["C_big"] == pytest.approx(0.125)
    c = example2_constants(0.45, 0.9)
    assert c["C_big"] == 0.225
    assert c["C_large"] == pytest.approx(0.1 / 0.45)
    assert math.isinf(example2_constants(0.5, 0.4)["C_large"])


def test_example2_alpha09_constants_numeric():
    p = 0.45
    grid = RadialGrid().guarded(LyapunovParams(p, 0.5))
    model = ModelSpec(1, PowerRadialDrift(1.0, 0.3), PowerLawStable(0.7, 0.9))
    _, _, rep = analyze(model, LyapunovParams(p, 0.5), grid)
    rows = _closed_rows(grid.radii[grid.tail], p, 0.9)
    large = [r["phi_large"] / r["phi_drift"] for r in rows]
    big = [r["phi_big"] / r["phi_drift"] for r in rows]
    assert rep["C_large"].value == pytest.approx(max(large), rel=1e-8)
    assert rep["C_big"].value == pytest.approx(max(big), rel=1e-8)
    # the ratio decreases toward its limit from above
    lim = example2_constants(p, 0.9)["C_large"]
    assert np.all(np.diff(large) < 0) and large[-1] > lim


def test_report_serialization(tmp_path):
    _, _, rep = analyze(ModelSpec(1, ZeroDrift(), BoundedSymmetric1D()), LY)
    rep.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0].startswith("name,estimate,status,seq_0")
    names = [ln.split(",")[0] for ln in lines[1:]]
    assert names[:7] == ["zeta", "C_ball", "C_big", "C_large", "C_tail", "C_drift_plus", "C_drift_minus"]
    text = rep.to_text()
    assert "worst case over probe directions" in text
    assert "distinguished" in text
