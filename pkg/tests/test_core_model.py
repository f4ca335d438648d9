import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echolab.core_model import (
    ModelParams,
    ModeVector,
    NormWeight,
    ResonanceTrace,
    VariableKind,
    canonicalize_eta,
    coefficient_a_t,
    coefficient_a_tau,
    coefficients_t,
    default_window,
    norm,
    resonant_time,
    rhs_t,
    rhs_tau,
    to_t,
    velocity_norm,
    velocity_seminorm_factor,
)

P = ModelParams(0.1, 100.0, -3, 6)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0.2, 10.0, 0, 3)
    with pytest.raises(ValueError):
        ModelParams(0.0, 10.0, 0, 3)
    with pytest.raises(ValueError):
        ModelParams(0.1, -1.0, 0, 3)
    with pytest.raises(ValueError):
        ModelParams(0.1, 1.0, 4, 3)


def test_default_window_margin():
    lo, hi = default_window(5, 0.1, 1e-12)
    # (4c)^m <= tol needs m >= ln(1e-12)/ln(0.4) = 30.2
    assert lo == -2 and hi == 5 + 31 + 2


def test_coefficient_t_examples():
    assert coefficient_a_t(1, 100.0, P) == pytest.approx(10.0, rel=1e-15)
    assert coefficient_a_t(2, 0.0, P) == pytest.approx(10 / 10004, rel=1e-15)
    vals = [coefficient_a_t(1, t, P) for t in (100, 200, 1e3, 1e5, 1e8)]
    assert all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-12


def test_coefficient_tau_examples():
    assert coefficient_a_tau(1, 1.0, P) == pytest.approx(1000.0, rel=1e-15)
    assert coefficient_a_tau(2, 1.0, P) == pytest.approx(0.1 / (4 * (1e-4 + 0.25)), rel=1e-15)


def test_coefficient_tau_integral_over_line():
    from scipy.integrate import quad
    f = lambda s: coefficient_a_tau(1, s, P)  # noqa: E731
    val = quad(f, -np.inf, 1.0, epsabs=1e-12, limit=200)[0] + quad(f, 1.0, np.inf, epsabs=1e-12, limit=200)[0]
    assert val == pytest.approx(10 * math.pi, rel=1e-9)


@pytest.mark.parametrize("k", [0, 0.5])
def test_coefficients_reject_bad_k(k):
    with pytest.raises(ValueError):
        coefficient_a_t(k, 1.0, P)
    with pytest.raises(ValueError):
        coefficient_a_tau(k, 1.0, P)


def test_rhs_nearest_neighbour_structure():
    p = ModelParams(0.1, 100.0, -2, 6)
    st_ = ModeVector.unit(p, 3, 0.4)
    d = rhs_tau(st_, 0.4, p)
    nz = {int(k) for k, a in zip(d.ks, d.amplitudes) if a != 0}
    assert nz == {2, 4}
    assert not np.any(rhs_tau(ModeVector.zeros(p, 0.4), 0.4, p).amplitudes)


def test_rhs_peak_example():
    p = ModelParams(0.1, 100.0, -2, 6)
    d = rhs_tau(ModeVector.unit(p, 1, 1.0), 1.0, p)
    assert abs(d[2]) == pytest.approx(1000.0, rel=1e-14)
    # mode 0 receives +A(1) w(1)
    assert d[0] == pytest.approx(1000.0, rel=1e-14)


def test_rhs_kind_and_window_checks():
    p = ModelParams(0.1, 100.0, -2, 6)
    with pytest.raises(ValueError):
        rhs_tau(ModeVector.unit(p, 1, 1.0, VariableKind.T), 1.0, p)
    with pytest.raises(ValueError):
        rhs_tau(ModeVector(1.0, np.ones(3), 0), 1.0, p)


@settings(max_examples=60, deadline=None)
@given(c=st.floats(0.01, 0.19), eta=st.floats(0.5, 1e4), tau=st.floats(-2, 3),
       seed=st.integers(0, 2 ** 31))
def test_t_and_tau_forms_agree(c, eta, tau, seed):
    p = ModelParams(c, eta, -3, 7)
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=p.size) + 1j * rng.normal(size=p.size)
    s_tau = ModeVector(tau, amps, p.k_min, eta=eta)
    d_tau = rhs_tau(s_tau, tau, p).amplitudes
    d_t = rhs_t(to_t(s_tau), tau * eta, p).amplitudes
    # d/dtau = eta d/dt
    np.testing.assert_allclose(d_tau, eta * d_t, rtol=1e-12, atol=1e-12 * np.max(np.abs(d_tau)))


@settings(max_examples=60, deadline=None)
@given(c=st.floats(0.01, 0.19), eta=st.floats(0.5, 1e3), t=st.floats(-50, 50),
       seed=st.integers(0, 2 ** 31))
def test_conjugation_symmetry_of_rhs(c, eta, t, seed):
    # w(-k, -eta) = conj(w(k, eta)) is mapped to itself by the t-form field
    K = 5
    ks = np.arange(-K, K + 1)
    rng = np.random.default_rng(seed)
    w = rng.normal(size=ks.size) + 1j * rng.normal(size=ks.size)
    p = ModelParams(c, eta, -K, K)
    d_plus = rhs_t(ModeVector(t, w, -K, VariableKind.T, eta), t, p).amplitudes
    coef_minus = coefficients_t(ks, t, c, -eta)
    nu = np.conj(w[::-1])
    aw = coef_minus * nu
    d_minus = np.zeros_like(aw)
    d_minus[1:] -= aw[:-1]
    d_minus[:-1] += aw[1:]
    np.testing.assert_allclose(d_minus, np.conj(d_plus[::-1]), rtol=1e-12, atol=1e-14)


def test_canonicalize_eta_roundtrip():
    st_ = ModeVector(-0.3, [1, 2j, 3, 4], -1, eta=-20.0)
    p, flipped = canonicalize_eta(0.1, -20.0, st_)
    assert p.eta == 20.0 and flipped.time == pytest.approx(0.3)
    assert flipped[1] == np.conj(st_[-1]) and flipped[-2] == np.conj(st_[2])


@settings(max_examples=80, deadline=None)
@given(l=st.integers(-30, 30).filter(lambda x: x != 0), eta=st.floats(1e-2, 1e6),
       tau=st.floats(2.0, 1e3), c=st.floats(0.01, 0.19))
def test_late_time_uniform_coefficient_bound(l, eta, tau, c):
    p = ModelParams(c, eta, -1, 1)
    assert coefficient_a_tau(l, tau, p) <= c / (1 + (tau - 2) ** 2) * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(l=st.integers(-20, 20).filter(lambda x: x != 0), eta=st.floats(0.5, 1e4),
       a=st.floats(-3, 3), w=st.floats(0, 3))
def test_finite_interval_mass_below_line_integral(l, eta, a, w):
    p = ModelParams(0.1, eta, -1, 1)
    f = p.c * eta / l ** 2
    mass = f * (math.atan(eta * (a + w - 1 / l)) - math.atan(eta * (a - 1 / l)))
    assert 0 <= mass <= math.pi * f * (1 + 1e-12)


def test_resonant_time_examples():
    assert resonant_time(5, "tau") == 0.2
    assert resonant_time(1, "t", eta=400) == 400
    assert resonant_time(-3, "tau") == pytest.approx(-1 / 3)
    with pytest.raises(ValueError):
        resonant_time(0)


def test_norm_examples():
    assert norm(ModeVector(0, [1.0], 1, eta=100.0), NormWeight.gevrey(0.5, 0.5)) == \
        pytest.approx(math.exp(5.0), rel=1e-14)
    assert norm(ModeVector(0, [1.0], 3), NormWeight.l2()) == 1.0
    assert norm(ModeVector(0, [1.0], 1, eta=1.0), NormWeight.sobolev(1)) == pytest.approx(math.sqrt(3))
    assert norm([], NormWeight.l2()) == 0.0


def test_norm_grid_weights():
    a = ModeVector(0, [3.0], 1, eta=1.0)
    b = ModeVector(0, [4.0], 1, eta=2.0)
    assert norm([a, b], NormWeight.l2(), [1.0, 1.0]) == pytest.approx(5.0)
    assert norm({2.0: b, 1.0: a}, NormWeight.l2(), [4.0, 0.0]) == pytest.approx(6.0)


@pytest.mark.parametrize("s", [-2.0, -0.25, 0.5, 1.0, 3.0])
def test_shift_ratio_bound_is_sup(s):
    w = NormWeight.sobolev(s)
    ks = np.arange(-200, 201)
    etas = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 50)])
    best = 0.0
    for e in etas:
        r0 = w.rho(ks, e)
        best = max(best, float(np.max(w.rho(ks + 1, e) / r0)), float(np.max(w.rho(ks - 1, e) / r0)))
    assert best <= w.shift_ratio_bound * (1 + 1e-12)
    assert best == pytest.approx(w.shift_ratio_bound, rel=1e-12)
    assert NormWeight.gevrey(2.0).shift_ratio_bound == 1.0 == NormWeight.l2().shift_ratio_bound


def test_velocity_factor_examples():
    assert velocity_seminorm_factor(1, 0.0, 10.0) == pytest.approx(1 / math.sqrt(101))
    assert velocity_seminorm_factor(1, 10.0, 10.0) == 1.0
    f = [velocity_seminorm_factor(1, 10.0, t) * t for t in (1e3, 1e4, 1e5)]
    assert f[-1] == pytest.approx(1.0, rel=1e-3)
    with pytest.raises(ValueError):
        velocity_seminorm_factor(0, 0.0, 1.0)


def test_velocity_norm_uses_tau_clock():
    st_ = ModeVector(1.0, [0, 2.0], 0, eta=10.0)  # modes 0, 1; t = 10 -> resonance of mode 1
    assert velocity_norm(st_) == pytest.approx(2.0)


def test_modevector_invariants():
    with pytest.raises(ValueError):
        ModeVector(0, [np.nan], 0)
    v = ModeVector(0, [1, 2, 3], -1)
    assert v[5] == 0 and v[-1] == 1 and v.k_max == 1
    with pytest.raises(ValueError):
        v.amplitudes[0] = 5
    assert v.dominant_mode() == 1
    assert v.csv_rows()[0] == (-1, 1.0, 0.0)
    w = v.on_window(-3, 0)
    assert list(w.amplitudes) == [0, 0, 1, 2]


def test_resonance_trace_invariants():
    with pytest.raises(ValueError):
        ResonanceTrace(3, 0.0, (0.1, 0.2), 1.0, {})
    with pytest.raises(ValueError):
        ResonanceTrace(3, 1.0, (0.3, 0.2), 1.0, {})
