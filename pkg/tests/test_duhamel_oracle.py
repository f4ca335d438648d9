import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from echolab.core_model import ModelParams, ModeVector, coefficient_a_tau
from echolab.duhamel_oracle import (
    InteractionPath,
    OracleRefusal,
    count_paths,
    coefficient_masses,
    duhamel_solve,
    enumerate_paths,
    majorant_ratio,
    path_integral,
)
from echolab.integrator import IntegratorConfig, evolve


def test_path_invariants():
    with pytest.raises(ValueError):
        InteractionPath((3, 5))
    p = InteractionPath((3, 4, 3))
    assert p.length == 2 and p.steps == (1, -1) and str(p) == "3-4-3"
    # each step contributes -sgn(step)
    assert InteractionPath((3, 2)).sign == 1 and InteractionPath((3, 4)).sign == -1


def test_enumerate_examples():
    assert [str(x) for x in enumerate_paths(3, 4, 1)] == ["3-4"]
    assert [str(x) for x in enumerate_paths(3, 3, 2)] == ["3-4-3", "3-2-3"]
    with pytest.raises(ValueError):
        enumerate_paths(3, 6, 2)
    with pytest.raises(OracleRefusal):
        enumerate_paths(0, 0, 40, cap=1000)


@settings(max_examples=60, deadline=None)
@given(k0=st.integers(-5, 5), d=st.integers(-6, 6), j=st.integers(1, 10))
def test_path_count_identity(k0, d, j):
    k = k0 + d
    shortest = abs(d) if d != 0 else 2
    if j < shortest:
        return
    paths = enumerate_paths(k0, k, j)
    exact_j = [x for x in paths if x.length == j]
    expected = math.comb(j, (j + d) // 2) if (j + d) % 2 == 0 and abs(d) <= j else 0
    assert len(exact_j) == count_paths(k0, k, j) == expected
    assert len({x.nodes for x in paths}) == len(paths)
    assert all(x.nodes[0] == k0 and x.nodes[-1] == k for x in paths)
    assert sum(count_paths(k0, k0 + e, j) for e in range(-j, j + 1)) == 2 ** j
    assert count_paths(k0, k0 + j, j) == 1


def test_single_step_over_wide_interval():
    p = ModelParams(0.1, 100.0, -2, 6)
    l = 3
    r = path_integral((l, l - 1), 1 / l - 50, 1 / l + 50, p, 1e-11)
    exact = p.c * p.eta / l ** 2 * 2 * math.atan(p.eta * 50)
    assert r.value == pytest.approx(exact, rel=1e-10)
    assert r.value == pytest.approx(p.c * math.pi * p.eta / l ** 2, rel=2e-4)
    assert r.resonant_count == 1 and r.abs_error_estimate >= 0


def test_empty_interval_is_zero():
    p = ModelParams(0.1, 100.0, -2, 6)
    assert path_integral((3, 4, 5), 0.3, 0.3, p, 1e-10).value == 0.0


@pytest.mark.parametrize("nodes", [(3, 4, 5), (3, 2, 1, 2), (2, 3, 4, 5, 6), (1, 0, -1)])
@pytest.mark.parametrize("c", [0.05, 0.19])
def test_non_resonant_path_bound(nodes, c):
    p = ModelParams(c, 50.0, -2, 8)
    r = path_integral(nodes, 1.5, 3.0, p, 1e-12)
    assert abs(r.value) <= (4 * c) ** (len(nodes) - 1)


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.02, 0.19), eta=st.floats(2, 300), k0=st.integers(1, 5), up=st.booleans(),
       up2=st.booleans(), a=st.floats(0.05, 1.2), w=st.floats(0.01, 0.6))
def test_two_step_paths_against_scipy(c, eta, k0, up, up2, a, w):
    from scipy.integrate import quad
    k1 = k0 + (1 if up else -1)
    k2 = k1 + (1 if up2 else -1)
    if k1 == 0:
        return
    p = ModelParams(c, eta, -3, 8)
    b = a + w

    def inner_mass(s):
        f = c * eta / k0 ** 2
        return f * (math.atan(eta * (s - 1 / k0)) - math.atan(eta * (a - 1 / k0)))

    pts = [x for x in (1 / k0, 1 / k1) if a < x < b]
    ref = quad(lambda s: coefficient_a_tau(k1, s, p) * inner_mass(s), a, b, points=pts or None,
               epsabs=1e-14, epsrel=1e-12, limit=500)[0]
    sign = InteractionPath((k0, k1, k2)).sign
    got = path_integral((k0, k1, k2), a, b, p, 1e-11).value
    assert got == pytest.approx(sign * ref, rel=1e-8, abs=1e-12)


def test_order_zero_is_identity():
    p = ModelParams(0.05, 40.0, -2, 8)
    st_ = ModeVector.unit(p, 3, 0.3)
    d = duhamel_solve(st_, 0.35, p, 0)
    np.testing.assert_array_equal(d.state.amplitudes, st_.amplitudes)


def test_middle_interval_first_order_transfer():
    c, eta, k0 = 0.05, 400.0, 3
    xi = eta / k0 ** 2
    w = 1 / (c * eta)  # |t| < d/xi with d = 1/c in rescaled time
    p = ModelParams(c, eta, -2, 8)
    d = duhamel_solve(ModeVector.unit(p, k0, 1 / k0 - w), 1 / k0 + w, p, 1, strict=False)
    expected = 2 * c * xi * math.atan(1 / c)
    assert d.state[k0 - 1].real == pytest.approx(expected, rel=1e-10)
    assert d.state[k0 + 1].real == pytest.approx(-expected, rel=1e-10)


def test_cross_oracle_example():
    p = ModelParams(0.05, 40.0, -2, 8)
    l = 3
    st_ = ModeVector.unit(p, l, 1 / l - 0.02)
    d = duhamel_solve(st_, 1 / l + 0.02, p, 6, quad_tol=1e-10)
    e = evolve(st_, 1 / l + 0.02, p, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-14)).final
    assert d.majorant_ratio <= 1
    assert np.max(np.abs(d.state.amplitudes - e.amplitudes)) <= d.total_bound + 10 * 1e-10


def test_remainder_decreases_geometrically():
    p = ModelParams(0.05, 40.0, -2, 8)
    st_ = ModeVector.unit(p, 3, 0.3)
    q = majorant_ratio(0.3, 0.36, p)
    bounds = [duhamel_solve(st_, 0.36, p, n).remainder_bound for n in range(1, 7)]
    for a, b in zip(bounds, bounds[1:]):
        assert b <= a * q * (1 + 1e-12)


@pytest.mark.parametrize("c", [0.05, 0.1, 0.15])
def test_off_chain_contribution_bound(c):
    p = ModelParams(c, 50.0, -2, 12)
    d = duhamel_solve(ModeVector.unit(p, 2, 1.5), 3.0, p, 12)
    for dist in range(1, 7):
        assert abs(d.state[2 + dist]) <= (2 * c) ** dist / (1 - 2 * c)


def test_refusal_when_majorant_diverges():
    p = ModelParams(0.05, 40.0, -2, 8)
    with pytest.raises(OracleRefusal, match="majorant divergent"):
        duhamel_solve(ModeVector.unit(p, 3, 0.0), 1.0, p, 4)


def test_masses_match_quadrature():
    from scipy.integrate import quad
    p = ModelParams(0.1, 30.0, -2, 5)
    m = coefficient_masses(0.2, 0.7, p)
    for l, v in m.items():
        ref = quad(lambda s: coefficient_a_tau(l, s, p), 0.2, 0.7, points=[1 / l] if 0.2 < 1 / l < 0.7 else None,
                   epsabs=1e-13, limit=200)[0]
        assert v == pytest.approx(ref, rel=1e-9)


def test_deterministic_and_recorded():
    p = ModelParams(0.05, 40.0, -2, 8)
    st_ = ModeVector(0.3, np.linspace(0, 1, 11) + 0.5j, -2, eta=40.0)
    a = duhamel_solve(st_, 0.35, p, 6, record_paths=True)
    b = duhamel_solve(st_, 0.35, p, 6, record_paths=True)
    assert a.state.amplitudes.tobytes() == b.state.amplitudes.tobytes()
    assert a.contributions == b.contributions and len(a.contributions) == a.paths_evaluated
    path, value, err = a.contributions[0]
    assert isinstance(path, str) and err >= 0
