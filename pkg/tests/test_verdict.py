import math

import numpy as np
import pytest

from levyerg.asymptotics import RadialGrid, analyze, example2_constants
from levyerg.growth import eval_generator_V
from levyerg.model import (
    BoundedSymmetric1D,
    LinearDrift,
    LyapunovParams,
    ModelSpec,
    NoJumps,
    PowerLawStable,
    PowerRadialDrift,
    StateIndependentStable,
    ZeroDrift,
    eval_V,
)
from levyerg.verdict import (
    BALL_A,
    BALL_B,
    DRIFT,
    INCONCLUSIVE,
    F,
    F_inv,
    RateFunction,
    check_symbol_condition,
    check_theorem2,
    constants_from_values,
    eval_symbol,
    lyapunov_margin,
    psi,
    run_verdict,
)

FAMILIES = [
    RateFunction(1.0, 0.5),
    RateFunction(1.0, 1.0),
    RateFunction(0.3, 0.2),
    RateFunction(2.0, 0.75, 1),
    RateFunction(1.0, 1.0, 1),
]


# rate machinery -----------------------------------------------------------------


def test_psi_examples():
    f = RateFunction(1.0, 0.5)
    assert F_inv(6.0, f) == pytest.approx(16.0, rel=1e-14)
    assert f(16.0) == 4.0
    assert psi(12.0, f) == pytest.approx(0.5, rel=1e-14)
    g = RateFunction(1.0, 1.0)
    assert F_inv(1.0, g) == pytest.approx(math.e, rel=1e-14)
    assert psi(2.0, g) == pytest.approx(math.exp(-0.5), rel=1e-14)


@pytest.mark.parametrize("f", FAMILIES)
def test_F_at_one_is_zero(f):
    assert F(1.0, f) == 0.0
    assert F(1.0, f, numeric=True) == 0.0
    assert F_inv(0.0, f) == 1.0


@pytest.mark.parametrize("f", FAMILIES)
@pytest.mark.parametrize("t", [1.5, 10.0, 1e3, 1e6])
def test_F_inverse_roundtrip(f, t):
    assert F_inv(F(t, f), f) == pytest.approx(t, rel=1e-9)
    assert F_inv(F(t, f, numeric=True), f, numeric=True) == pytest.approx(t, rel=1e-9)


@pytest.mark.parametrize("f", FAMILIES[:3])
@pytest.mark.parametrize("t", [2.0, 12.0, 1e3])
def test_closed_and_numeric_agree(f, t):
    assert F(t, f, numeric=True) == pytest.approx(F(t, f), rel=1e-12)
    assert psi(t, f, numeric=True) == pytest.approx(psi(t, f), rel=1e-9)


@pytest.mark.parametrize("f", FAMILIES)
def test_psi_nonincreasing_to_zero(f):
    ts = np.geomspace(1.0, 1e8, 200)
    vals = np.array([psi(t, f) for t in ts])
    assert np.all(np.diff(vals) <= 1e-15)
    assert vals[-1] < vals[0]
    assert psi(1e250, f) < 1e-8


def test_log_rate_function_shape():
    f = RateFunction(1.0, 0.5, 1)
    u = np.geomspace(1.0, 1e6, 100)
    v = f(u)
    assert v[0] > 0 and np.all(np.diff(v) > 0)
    # asymptotically matches K u^q ln u
    assert f(1e300) / (1e150 * math.log(1e300)) == pytest.approx(1.0, rel=1e-2)


def test_rate_function_validation():
    for bad in ((0.0, 0.5), (1.0, 0.0), (1.0, 1.5), (math.inf, 0.5)):
        with pytest.raises(ValueError):
            RateFunction(*bad)
    with pytest.raises(ValueError):
        RateFunction(1.0, 0.5, 2)
    with pytest.raises(ValueError):
        RateFunction(1.0, 0.5, 0, 1.0)
    with pytest.raises(ValueError):
        F(0.5, FAMILIES[0])
    with pytest.raises(ValueError):
        F_inv(-1.0, FAMILIES[0])
    with pytest.raises(ValueError):
        psi(0.0, FAMILIES[0])


# case decision ----------------------------------------------------------------


def test_check_theorem2_examples():
    r = constants_from_values({"C_ball": 1.0, "C_tail": 0.0, "C_drift_minus": math.inf})
    v = check_theorem2(r, 0.5)
    assert v.case == BALL_A and v.margin == pytest.approx(-0.0625, abs=1e-15)

    r = constants_from_values({}, zeta=1.0)
    v = check_theorem2(r, 0.5)
    assert v.case == DRIFT and v.margin == pytest.approx(-0.5, abs=1e-15)

    r = constants_from_values({"C_large": 1.0}, zeta=0.1)
    v = check_theorem2(r, 0.5)
    assert v.case == INCONCLUSIVE
    assert v.margins["LI1"] == pytest.approx(0.95, abs=1e-15)
    assert v.rate is None and v.reasons


def test_ball_b_case():
    r = constants_from_values({"C_ball": 1.0, "C_drift_minus": 2.0}, zeta=-0.1)
    v = check_theorem2(r, 0.5)
    want = 0.5 * 0.1 / 2.0 + 0.125 * (1.0 + 0.5 - 2.0)
    assert v.case == BALL_B and v.margin == pytest.approx(want, abs=1e-15)


def test_blocked_case_is_inconclusive():
    r = constants_from_values({"C_big": math.inf}, zeta=1.0)
    v = check_theorem2(r, 0.5)
    assert v.case == INCONCLUSIVE
    assert any("C_big" in s for s in v.reasons)


def test_rate_from_fit_and_clamp():
    from levyerg.asymptotics import PowerFit

    r = constants_from_values({}, zeta=1.0, fit_drift=PowerFit(0.25, 2.0, 0.0))
    v = check_theorem2(r, 0.5)
    assert v.rate.q == 0.5 and v.rate.K == pytest.approx(1.0)
    r = constants_from_values({}, zeta=1.0, fit_drift=PowerFit(0.75, 1.0, 0.0))
    v = check_theorem2(r, 0.5)
    assert v.rate.q == 1.0 and v.q_clamped and v.q_raw == 1.5
    r = constants_from_values({}, zeta=1.0, fit_drift=PowerFit(-0.2, 1.0, 0.0))
    v = check_theorem2(r, 0.5)
    assert v.case == DRIFT and v.rate is None


CONFIGS = [
    ({"C_drift_plus": 0.1, "C_drift_minus": 0.2, "C_big": 0.05, "C_large": 0.1}, 0.9),
    ({"C_ball": 1.2, "C_tail": 0.01, "C_drift_minus": math.inf}, math.nan),
    ({"C_ball": 1.0, "C_tail": 0.01, "C_drift_minus": 1.0}, -0.5),
]


@pytest.mark.parametrize("values,zeta", CONFIGS)
def test_margin_continuity(values, zeta):
    eps = 1e-6
    base = check_theorem2(constants_from_values(values, zeta), 0.5)
    for name, val in values.items():
        if math.isinf(val):
            continue
        bumped = dict(values, **{name: val + eps})
        m = check_theorem2(constants_from_values(bumped, zeta), 0.5).margin
        assert abs(m - base.margin) <= 3 * eps
    if math.isfinite(zeta):
        m = check_theorem2(constants_from_values(values, zeta + eps), 0.5).margin
        assert abs(m - base.margin) <= 3 * eps


def _quadratic(p, a, z):
    return p * p * (1 - 2 * z) - p * a * (1 - 2 * z) - 2 * (1 - a)


@pytest.mark.parametrize("p", [0.05, 0.2, 0.3, 0.45, 0.6])
@pytest.mark.parametrize("alpha", [0.7, 0.8, 0.9])
@pytest.mark.parametrize("zeta", [0.5, 1.0, 1.5])
def test_example2_admissibility_sign(p, alpha, zeta):
    r = constants_from_values(example2_constants(p, alpha), zeta)
    v = check_theorem2(r, p)
    quad = _quadratic(p, alpha, zeta)
    assert np.sign(-v.margins["LI1"]) == np.sign(quad)
    assert (v.case == DRIFT) == (quad > 0)


def test_marginal_point():
    assert _quadratic(0.45, 0.9, 1.0) == pytest.approx(0.0025, abs=1e-15)
    r = constants_from_values(example2_constants(0.45, 0.9), 1.0)
    v = check_theorem2(r, 0.45)
    assert v.case == DRIFT and v.margin < 0


# Lyapunov constant --------------------------------------------------------------


def test_lyapunov_margin_pure_drift():
    lyap = LyapunovParams(0.5, 0.5)
    model = ModelSpec(1, LinearDrift(((-1.0,),)), NoJumps())
    grid = RadialGrid(count=20)
    C, holds = lyapunov_margin(model, lyap, RateFunction(0.25, 1.0), grid)
    assert holds and C <= 1.0
    # -0.25 |x|^p + 0.25 is largest at the innermost radius 2^{1/lam} = 4
    assert C == pytest.approx(-0.25, abs=1e-12)


def test_lyapunov_margin_small_K_tends_to_max_LV():
    lyap = LyapunovParams(0.5, 0.5)
    model = ModelSpec(1, LinearDrift(((-1.0,),)), NoJumps())
    grid = RadialGrid(count=20)
    C, _ = lyapunov_margin(model, lyap, RateFunction(1e-12, 1.0), grid)
    assert C == pytest.approx(-1.0, abs=1e-9)


def test_example1_has_no_rate_but_negative_generator(bundled):
    # the ball term decays like |x|^{p-2}, so no increasing f fits under it
    model, lyap = bundled["example1"]
    grid, _, rep, v = run_verdict(model, lyap)
    assert v.case == BALL_A and v.rate is None
    assert rep.fit_ball.gamma == pytest.approx(lyap.p - 2.0, abs=1e-6)
    for R in grid.radii:
        if R > 4.0:
            for s in (1.0, -1.0):
                assert eval_generator_V(model, lyap, np.array([s * R])) < 0.0


def test_lyapunov_inequality_with_rate(bundled):
    model, lyap = bundled["stable_ou"]
    grid, _, _, v = run_verdict(model, lyap)
    assert v.case == DRIFT and math.isfinite(v.lyapunov_C)
    for R in grid.radii:
        x = np.array([R])
        lhs = eval_generator_V(model, lyap, x) + v.rate(eval_V(x, lyap))
        assert lhs <= v.lyapunov_C + 1e-12


# symbol -------------------------------------------------------------------------


UNIFORM = ModelSpec(1, ZeroDrift(), BoundedSymmetric1D())


def test_uniform_symbol():
    for xi in (0.1, 1.0, 3.0):
        got = eval_symbol(UNIFORM, np.zeros(1), np.array([xi]))
        assert got.real == pytest.approx(2 - 2 * math.sin(xi) / xi, rel=1e-9)
        assert got.imag == 0.0


def test_symbol_at_zero_frequency(bundled):
    for model, _ in bundled.values():
        x = np.full(model.dimension, 3.0)
        assert eval_symbol(model, x, np.zeros(model.dimension)) == 0


def test_symmetric_kernel_has_real_symbol():
    model = ModelSpec(2, ZeroDrift(), PowerLawStable(0.5, 1.2))
    q = eval_symbol(model, np.array([3.0, 4.0]), np.array([0.3, -0.2]))
    assert abs(q.imag) <= 1e-12 * abs(q.real)


def test_stable_symbol_closed_form():
    # int (1 - cos(xi u)) |u|^{-1-a} du = 2 |Gamma(-a) cos(pi a / 2)| |xi|^a
    model = ModelSpec(1, ZeroDrift(), StateIndependentStable(1.5))
    for xi in (0.01, 0.5, 2.0):
        q = eval_symbol(model, np.zeros(1), np.array([xi]))
        want = 2 * abs(math.gamma(-1.5) * math.cos(0.75 * math.pi)) * xi ** 1.5
        assert q.real == pytest.approx(want, rel=1e-8)
        assert abs(q.imag) <= 1e-10 * want


def test_drift_symbol():
    model = ModelSpec(2, LinearDrift(((-1.0, 0.0), (0.0, -1.0))), NoJumps())
    x, xi = np.array([1.0, 2.0]), np.array([0.5, 0.25])
    assert eval_symbol(model, x, xi) == pytest.approx(1j * (x @ xi))


def test_symbol_condition_uniform():
    rep = check_symbol_condition(UNIFORM, radii=[10.0, 100.0, 1000.0])
    assert rep.sup_values[0] <= 0.0034
    assert rep.sup_values[0] == pytest.approx(2 - 2 * math.sin(0.1) / 0.1, rel=1e-9)
    assert rep.decreasing and rep.vanishing and rep.holds


def test_symbol_condition_pure_drift_does_not_vanish():
    model = ModelSpec(1, LinearDrift(((-1.0,),)), NoJumps())
    rep = check_symbol_condition(model, radii=[10.0, 100.0, 1000.0])
    np.testing.assert_allclose(rep.sup_values, 1.0, rtol=1e-14)
    assert not rep.vanishing and not rep.holds


def test_symbol_condition_report_only(tmp_path):
    model = ModelSpec(1, ZeroDrift(), PowerLawStable(1.0, 1.5))
    rep = check_symbol_condition(model, radii=[10.0, 100.0])
    assert len(rep.sup_values) == 2 and all(v > 0 for v in rep.sup_values)
    rep.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "R,sup_abs_q"
    assert "symbol condition" in rep.to_text()


# end to end ---------------------------------------------------------------------


def test_example1_verdict(bundled):
    model, _ = bundled["example1"]
    for p in (0.1, 0.5, 0.9):
        _, _, rep, v = run_verdict(model, LyapunovParams(p, 0.5), compute_C=False)
        assert v.case == BALL_A
        assert v.margin == pytest.approx(p * (p - 1) / 4, abs=1e-9)


def test_verdict_kernel_scaling_invariant(bundled):
    model, lyap = bundled["cone_inward"]
    _, _, _, a = run_verdict(model, lyap, compute_C=False)
    _, _, _, b = run_verdict(model.scaled(7.0), lyap, compute_C=False)
    assert a.case == b.case
    assert b.margin == pytest.approx(a.margin, rel=1e-10, abs=1e-10)


def test_stable_ou_is_drift_case(bundled):
    model, lyap = bundled["stable_ou"]
    _, _, rep, v = run_verdict(model, lyap, compute_C=False)
    assert v.case == DRIFT
    assert rep["zeta"].value == pytest.approx(1.0, abs=1e-12)
    assert v.rate.q == pytest.approx(1.0, abs=1e-12)


def test_verdict_serialization(tmp_path):
    v = check_theorem2(constants_from_values({}, zeta=1.0), 0.5)
    v.to_csv(tmp_path / "v.csv")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "key,value" and lines[1] == "case,Drift"
    assert v.to_text().startswith("verdict: Drift\nmargin: -0.5\n")
    with pytest.raises(ValueError):
        type(v)(DRIFT, 0.1)
