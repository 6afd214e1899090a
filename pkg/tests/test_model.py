import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyerg.model import (
    BoundedSymmetric1D,
    Cone,
    CustomKernel,
    LinearDrift,
    LyapunovParams,
    ModelError,
    ModelSpec,
    NoJumps,
    PowerLawStable,
    PowerRadialDrift,
    ScaledKernel,
    StateIndependentStable,
    ZeroDrift,
    bridge,
    eval_drift,
    eval_kernel_density,
    eval_V,
    gamma_cos,
    grad_V,
    hessian_V,
    sphere_area,
)

finite = st.floats(-50, 50, allow_nan=False)


def test_sphere_area_values():
    assert sphere_area(1) == 2.0
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)


# Lyapunov function -----------------------------------------------------------


def test_eval_V_examples():
    lyap = LyapunovParams(0.5, 0.5)
    assert eval_V(np.array([4.0]), lyap) == pytest.approx(3.0, abs=1e-15)
    assert eval_V(np.zeros(2), lyap) == 1.0
    v = eval_V(np.array([0.5]), lyap)
    assert 1.0 <= v <= 1.0 + 0.5 ** 0.5


@given(st.floats(0.0, 3.0))
def test_bridge_bounds(r):
    b = float(bridge(r))
    assert 0.0 <= b <= r + 1e-15
    if r > 1.0:
        assert b == r


def test_bridge_is_c2_at_one():
    h = 1e-4
    left = [float(bridge(1.0 - k * h)) for k in (0, 1, 2)]
    # value, first and second derivative match the identity from the left
    assert left[0] == pytest.approx(1.0)
    assert (left[0] - left[1]) / h == pytest.approx(1.0, abs=1e-3)
    assert (left[0] - 2 * left[1] + left[2]) / h ** 2 == pytest.approx(0.0, abs=1e-2)


@pytest.mark.parametrize("p, lam", [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.2)])
def test_lyapunov_params_validated(p, lam):
    with pytest.raises(ModelError):
        LyapunovParams(p, lam)


def _fd_hessian(x, lyap, h=1e-5):
    d = x.size
    H = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            ei = np.eye(d)[i] * h
            ej = np.eye(d)[j] * h
            H[i, j] = (
                eval_V(x + ei + ej, lyap) - eval_V(x + ei - ej, lyap) - eval_V(x - ei + ej, lyap) + eval_V(x - ei - ej, lyap)
            ) / (4 * h * h)
    return H


def test_hessian_1d_example():
    lyap = LyapunovParams(0.5, 0.5)
    H = hessian_V(np.array([2.0]), lyap)
    assert H[0, 0] == pytest.approx(-0.0883883476, rel=1e-8)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("R", [2.0, 10.0, 100.0])
def test_hessian_matches_finite_differences(d, R):
    lyap = LyapunovParams(0.5, 0.5)
    rng = np.random.default_rng(d * 100 + int(R))
    e = rng.normal(size=d)
    x = R * e / np.linalg.norm(e)
    H = hessian_V(x, lyap)
    np.testing.assert_allclose(H, H.T, rtol=0, atol=0)
    F = _fd_hessian(x, lyap, h=1e-5 * R)
    scale = np.max(np.abs(H))
    np.testing.assert_allclose(H, F, rtol=1e-5, atol=1e-5 * scale)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_hessian_trace_formula(d):
    p, R = 0.3, 7.0
    x = np.zeros(d)
    x[0] = R
    H = hessian_V(x, LyapunovParams(p, 0.5))
    assert np.trace(H) == pytest.approx(p * R ** (p - 2) * (d + p - 2), rel=1e-13)
    if d > 1:
        assert H[0, 1] == 0.0


def test_hessian_rejects_inner_states():
    with pytest.raises(ModelError):
        hessian_V(np.array([0.5, 0.5]), LyapunovParams())


def test_grad_V_matches_finite_differences():
    lyap = LyapunovParams(0.4, 0.5)
    x = np.array([3.0, -4.0, 2.0])
    g = grad_V(x, lyap)
    h = 1e-6
    fd = [(eval_V(x + h * e, lyap) - eval_V(x - h * e, lyap)) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(g, fd, rtol=1e-7)


# gamma_cos ------------------------------------------------------------------


def test_gamma_cos_examples():
    assert gamma_cos([1.0, 0.0], [0.0, 3.0]) == 0.0
    assert gamma_cos([1.0, 2.0], [-2.0, -4.0]) == pytest.approx(-1.0, abs=1e-15)
    assert gamma_cos([1.0, 0.0], [1.0, 1.0]) == pytest.approx(0.7071068, abs=1e-7)


@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3), st.floats(1e-3, 1e3))
def test_gamma_cos_scale_and_sign(x, u, s):
    x, u = np.array(x), np.array(u)
    if np.linalg.norm(x) < 1e-6 or np.linalg.norm(u) < 1e-6:
        return
    g = gamma_cos(x, u)
    assert -1.0 <= g <= 1.0
    assert gamma_cos(x, s * u) == pytest.approx(g, abs=1e-12)
    assert gamma_cos(x, -u) == pytest.approx(-g, abs=1e-12)


def test_gamma_cos_rejects_zero():
    with pytest.raises(ModelError):
        gamma_cos([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ModelError):
        gamma_cos([1.0, 0.0], [0.0, 0.0])


# drifts -----------------------------------------------------------------------


def test_drift_examples():
    np.testing.assert_array_equal(eval_drift(ZeroDrift(), np.array([1.0, 2.0])), [0.0, 0.0])
    x = np.array([60.0, 80.0])
    v = eval_drift(PowerRadialDrift(1.0, 0.3, "inward"), x)
    assert np.linalg.norm(v) == pytest.approx(3.9810717, rel=1e-7)
    assert gamma_cos(x, v) == pytest.approx(-1.0)
    np.testing.assert_allclose(eval_drift(LinearDrift(((-1.0, 0.0), (0.0, -1.0))), np.array([2.0, -1.0])), [-2.0, 1.0])
    np.testing.assert_array_equal(eval_drift(PowerRadialDrift(2.0, -0.5), np.zeros(2)), [0.0, 0.0])


def test_drift_validation():
    with pytest.raises(ModelError):
        PowerRadialDrift(1.0, 0.3, "sideways")
    with pytest.raises(ModelError):
        LinearDrift(((1.0, 2.0),))
    with pytest.raises(ModelError):
        ModelSpec(2, LinearDrift(((1.0,),)))


# kernels ----------------------------------------------------------------------


def test_kernel_density_examples():
    assert eval_kernel_density(PowerLawStable(0.5, 1.5), [100.0], [2.0]) == pytest.approx(1.7677670, rel=1e-7)
    assert eval_kernel_density(BoundedSymmetric1D("uniform", 1.0, 2.0), [0.0], [2.0]) == 0.0
    assert eval_kernel_density(BoundedSymmetric1D("uniform", 1.0, 2.0), [0.0], [-0.3]) == pytest.approx(1.0)
    cone = Cone(0.0, 1.5, "inward", math.pi / 6, 1.0, 0.0)
    assert eval_kernel_density(cone, [3.0, 0.0], [1.0, 0.0]) == 0.0
    assert eval_kernel_density(cone, [3.0, 0.0], [-1.0, 0.0]) == pytest.approx(1.0)


def test_kernel_density_rejects_zero_jump():
    with pytest.raises(ModelError):
        eval_kernel_density(PowerLawStable(0.0, 1.0), [1.0], [0.0])


def test_power_law_at_origin_is_zero_for_positive_beta():
    assert eval_kernel_density(PowerLawStable(0.5, 1.0), [0.0, 0.0], [1.0, 0.0]) == 0.0


@given(
    st.lists(st.floats(-20, 20), min_size=2, max_size=2),
    st.floats(0.01, 50.0),
    st.floats(0, 2 * math.pi),
)
@settings(max_examples=60)
def test_density_nonnegative_and_enveloped(x, r, ang):
    x = np.array(x)
    if np.linalg.norm(x) < 1e-3:
        return
    u = r * np.array([math.cos(ang), math.sin(ang)])
    kernels = [
        PowerLawStable(0.7, 1.2),
        StateIndependentStable(0.8, 2.0),
        Cone(0.3, 1.5, "inward", math.pi / 4, 2.0, 0.5, radius=10.0),
        Cone(0.0, 0.9, "outward", math.pi / 3, 0.0, 1.0),
        ScaledKernel(PowerLawStable(0.0, 1.5), 3.0),
    ]
    for k in kernels:
        v = float(k.density(x, u[None, :])[0])
        env = float(np.asarray(k.envelope(x, np.array([r])))[0])
        assert v >= 0.0
        assert v <= env * (1 + 1e-12)


def test_bounded_kernel_even_and_supported():
    k = BoundedSymmetric1D("triangular", 2.0, 3.0)
    u = np.linspace(-3, 3, 61)[:, None]
    u = u[np.abs(u[:, 0]) > 0]
    vals = k.density(np.zeros(1), u)
    np.testing.assert_allclose(vals, vals[::-1])
    assert np.all(vals[np.abs(u[:, 0]) > 2.0] == 0.0)


def test_cone_full_angle_matches_power_law():
    rng = np.random.default_rng(3)
    for d in (1, 2, 3):
        cone = Cone(0.4, 1.3, "inward", math.pi, 1.0, 1.0)
        pl = PowerLawStable(0.4, 1.3)
        x = rng.normal(size=d) * 5
        u = rng.normal(size=(50, d))
        np.testing.assert_allclose(cone.density(x, u), pl.density(x, u), rtol=1e-12)


def test_kernel_validation():
    with pytest.raises(ModelError):
        PowerLawStable(0.0, 2.0)
    with pytest.raises(ModelError):
        StateIndependentStable(1.0, 0.0)
    with pytest.raises(ModelError):
        Cone(0.0, 1.0, "inward", 0.0)
    with pytest.raises(ModelError):
        Cone(0.0, 1.0, "inward", 1.0, 0.0, 0.0)
    with pytest.raises(ModelError):
        ModelSpec(2, kernel=BoundedSymmetric1D())
    with pytest.raises(ModelError):
        ModelSpec(0)


def test_custom_kernel_levy_integrability_checked():
    heavy_small = CustomKernel(
        lambda x, u: np.linalg.norm(u, axis=-1) ** -3.5,
        lambda x, r: np.asarray(r, dtype=float) ** -3.5,
        envelope_radius=1.0,
        symmetric=True,
    )
    with pytest.raises(ModelError):
        ModelSpec(1, kernel=heavy_small)


def test_custom_kernel_accepted():
    k = CustomKernel(
        lambda x, u: np.exp(-np.linalg.norm(u, axis=-1)),
        lambda x, r: np.exp(-np.asarray(r, dtype=float)),
        symmetric=True,
        state_independent=True,
    )
    m = ModelSpec(2, kernel=k)
    assert m.dimension == 2


def test_model_equality_and_scaling():
    a = ModelSpec(1, LinearDrift(((-1.0,),)), StateIndependentStable(1.5, 1.0))
    b = ModelSpec(1, LinearDrift(((-1.0,),)), StateIndependentStable(1.5, 1.0))
    assert a == b
    s = a.scaled(7.0)
    x, u = np.array([3.0]), np.array([[0.5]])
    assert s.kernel.density(x, u)[0] == pytest.approx(7.0 * a.kernel.density(x, u)[0], rel=1e-15)
    assert isinstance(ModelSpec(1).kernel, NoJumps)
