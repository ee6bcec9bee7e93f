"""Property-based checks of the invariants."""

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from epochdd import (
    LinearModelSpec,
    forward,
    gram_matrix,
    init_params,
    jacobian,
    kernel_k1,
    kernel_k2,
    layer_split_svd,
    optimal_stepsizes,
    optimal_stopping_time,
    param_distance_bound,
    population_risk,
    risk_bound,
    risk_expression,
    spectrum,
    test_risk as risk_on_test_set,
    train_error_bound,
    u_curve_derivative,
)
from epochdd._validation import one_minus_pow
from epochdd.io import read_columns, write_columns
from epochdd.kernels import risk_bound_terms
from epochdd.stepsize import find_minima

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")

pos = st.floats(0.05, 5.0)
coef = st.one_of(st.just(0.0), st.floats(-10.0, -1e-3), st.floats(1e-3, 10.0))


@st.composite
def specs(draw, max_d=6, noise=True):
    d = draw(st.integers(1, max_d))
    stds = draw(st.lists(pos, min_size=d, max_size=d))
    theta = draw(st.lists(coef, min_size=d, max_size=d))
    sigma = draw(st.one_of(st.just(0.0), st.floats(0.01, 3.0))) if noise else 0.0
    return LinearModelSpec(stds, theta, sigma)


@given(specs(), st.data())
def test_population_risk_minimised_at_truth(spec, data):
    other = data.draw(arrays(float, spec.d, elements=coef))
    assert population_risk(spec, other) >= population_risk(spec, spec.theta_star)
    assert population_risk(spec, spec.theta_star) == spec.noise_std**2
    half = population_risk(spec, spec.theta_star / 2)
    assert half >= spec.noise_std**2


@given(st.floats(0.0, 1.0), st.floats(0.0, 1e4))
def test_one_minus_pow(base, t):
    assert np.isclose(one_minus_pow(base, t), 1.0 - base**t, rtol=1e-9, atol=1e-15)


@given(st.floats(-1.0, 1.0))
def test_kernel_gap_identity(rho):
    assert abs(kernel_k2(rho) - kernel_k1(rho) - np.sqrt(1 - rho**2) / (2 * np.pi)) <= 1e-12
    assert kernel_k2(rho) >= 0


@given(st.integers(1, 8), st.integers(1, 5), st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(0, 2**32))
def test_gram_is_psd(n, d, omega, nu, seed):
    x = np.random.default_rng(seed).standard_normal((n, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    g = gram_matrix(x, omega, nu)
    assert np.allclose(np.diag(g), (omega**2 + nu**2) / 2)
    assert np.linalg.eigvalsh(g).min() >= -1e-8 * max(np.trace(g), 1e-300)


@given(specs(), st.integers(1, 500), st.floats(0.5, 1e4))
def test_optimal_stepsize_range_and_stationarity(spec, n, t_target):
    if spec.noise_std == 0 or np.any(spec.signal_energy == 0):
        return
    sched = optimal_stepsizes(spec, n, t_target)
    assert np.all(sched.etas > 0)
    assert np.all(sched.etas * spec.feature_vars <= 1 + 1e-15)
    for i in range(1, spec.d + 1):
        a = 1 - sched.etas[i - 1] * spec.feature_vars[i - 1]
        # a = 1 - eta sigma^2 near 0 is only known to absolute precision
        if 1e-3 < a < 1:
            assert np.isclose(optimal_stopping_time(spec, sched, n, i), t_target, rtol=1e-6)


@given(specs(), st.integers(1, 100), st.lists(st.floats(0.01, 1.0), min_size=6, max_size=6))
def test_risk_is_noise_plus_bias_plus_variance(spec, n, products):
    etas = np.array(products[: spec.d]) / spec.feature_vars
    curve = risk_expression(spec, etas, n, [0, 1, 3, 10, 100, 1000])
    assert np.allclose(curve.risk, spec.noise_std**2 + curve.bias + curve.variance, rtol=1e-12)
    assert np.all(curve.bias >= 0) and np.all(curve.variance >= 0)
    assert np.all(np.diff(curve.bias) <= 1e-12)
    assert np.all(np.diff(curve.variance) >= -1e-12)


@given(specs(), st.integers(1, 100), st.floats(0.01, 0.99), st.floats(0.0, 500.0))
def test_derivative_sign(spec, n, product, t):
    if spec.noise_std == 0 or spec.signal_energy[0] == 0:
        return
    etas = np.full(spec.d, product) / spec.feature_vars
    t_star = optimal_stopping_time(spec, etas, n, 1)
    slope = u_curve_derivative(spec, etas, n, 1, t)
    if t < t_star * (1 - 1e-6):
        assert slope <= 0
    elif t > t_star * (1 + 1e-6):
        assert slope >= 0


@st.composite
def networks(draw):
    d = draw(st.integers(1, 4))
    k = draw(st.integers(1, 6))
    n = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 2**32))
    params = init_params(d, k, draw(pos), draw(pos), seed)
    x = np.random.default_rng(seed).standard_normal((n, d))
    return params, x


@given(networks())
def test_jacobian_homogeneity(net):
    params, x = net
    jac = jacobian(params, x)
    assert np.allclose(jac @ params.flat(), 2 * forward(params, x), atol=1e-10)


@given(networks())
def test_split_rows_sum_to_one(net):
    params, x = net
    jac = jacobian(params, x)
    if jac.shape[0] > jac.shape[1]:
        return
    split = layer_split_svd(jac, params.d, params.k)
    ok = ~split.degenerate
    assert np.allclose(split.norm_w_sq[ok] + split.norm_v_sq[ok], 1.0, atol=1e-8)
    assert np.all((split.norm_w_sq >= -1e-12) & (split.norm_v_sq <= 1 + 1e-12))


@given(networks(), st.data())
def test_mae_below_root_mse(net, data):
    params, x = net
    y = data.draw(arrays(float, x.shape[0], elements=coef))
    mae, mse = risk_on_test_set(params, x, y)
    assert mae <= np.sqrt(mse) + 1e-12


@given(arrays(float, 5, elements=st.floats(0.05, 10.0)), arrays(float, 5, elements=coef), st.floats(0.05, 1.0))
def test_bounds_monotone(eigs, y, frac):
    s = spectrum(np.diag(eigs), y)
    eta = frac / s.eigenvalues[0]
    ts = [0, 1, 5, 20, 100]
    tr = [train_error_bound(s, eta, t) for t in ts]
    pd = [param_distance_bound(s, eta, t) for t in ts]
    terms = np.array([risk_bound_terms(s, eta, t) for t in ts])
    assert np.all(np.diff(tr) <= 1e-12)
    assert np.all(np.diff(pd) >= -1e-12)
    assert np.all(np.diff(terms[:, 0]) <= 1e-12)
    assert np.all(np.diff(terms[:, 1]) >= -1e-12)
    assert np.isclose(risk_bound(s, eta, 0), np.linalg.norm(y) / np.sqrt(5))


@given(arrays(float, st.integers(11, 60), elements=st.floats(-1e6, 1e6)))
def test_minima_are_local_minima(values):
    t = np.arange(values.size)
    for tm, v in find_minima(t, values):
        lo, hi = max(0, tm - 5), min(values.size, tm + 6)
        assert v == values[tm]
        assert np.sum(values[lo:hi] <= v) == 1
        assert tm > 0


@given(st.integers(11, 200))
def test_convex_curves_have_one_minimum(n):
    t = np.arange(n)
    centre = n / 3
    assert len(find_minima(t, (t - centre) ** 2 + 1.0)) == 1


@given(arrays(float, st.integers(1, 20), elements=st.floats(allow_nan=True, allow_infinity=True)))
def test_csv_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "v.csv"
    write_columns(path, {"t": np.arange(values.size), "v": values})
    first = path.read_bytes()
    write_columns(path, read_columns(path))
    assert path.read_bytes() == first
