import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msmix.collision_moments import (MaxwellianState, OracleResolution, _maxwellian_nodes,
                                     collision_moment_oracle, energy_exchange_closed, energy_exchange_pair,
                                     exchange_rates, i_term_decomposition, maxwellian_moments,
                                     momentum_exchange_closed, momentum_exchange_pair, oracle_moments,
                                     oracle_pair_moments)
from msmix.errors import ValidationError
from msmix.mixture import AngularKernel, Mixture

# polynomial moments are integrated exactly already at low resolution
LOW = OracleResolution(6, 6, 6)


def random_state(rng, n):
    return MaxwellianState(rng.uniform(0.5, 2.0, n), rng.uniform(-1.0, 1.0, (n, 3)), rng.uniform(0.5, 2.0, n))


@pytest.mark.parametrize("seed", range(3))
def test_oracle_matches_closed_forms(ternary, seed):
    state = random_state(np.random.default_rng(seed), 3)
    eps = 0.7
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        q_ij, q_ji = oracle_pair_moments(ternary, state, (i, j), LOW, eps)
        for (a, b), q in (((i, j), q_ij), ((j, i), q_ji)):
            mom = momentum_exchange_pair(ternary, state, a, b)
            en = energy_exchange_pair(ternary, state, eps, a, b)
            np.testing.assert_allclose(q["velocity"], eps * mom, rtol=1e-12, atol=1e-14)
            assert q["speed-squared"] == pytest.approx(eps * en, rel=1e-12)
            assert q["unity"] == 0.0


def test_direct_and_frame_methods_agree(binary):
    state = random_state(np.random.default_rng(7), 2)
    res = OracleResolution(5, 5, 6)
    a = oracle_moments(binary, state, (0, 1), res, 0.5, method="frame")
    b = oracle_moments(binary, state, (0, 1), res, 0.5, method="direct")
    np.testing.assert_allclose(a["velocity"], b["velocity"], rtol=1e-12)
    assert a["speed-squared"] == pytest.approx(b["speed-squared"], rel=1e-12)


def test_single_weight_oracle(binary):
    state = random_state(np.random.default_rng(1), 2)
    full = oracle_moments(binary, state, (0, 1), LOW, 1.0)
    assert collision_moment_oracle(binary, state, (0, 1), "speed-squared", LOW, 1.0) == full["speed-squared"]
    with pytest.raises(ValidationError):
        collision_moment_oracle(binary, state, (0, 1), "cubic", LOW)


def test_temperature_term_relaxes_toward_partner(binary):
    state = MaxwellianState([1.0, 1.0], np.zeros((2, 3)), [1.0, 2.0])
    e = energy_exchange_closed(binary, state, 0.1)
    assert e[0] > 0 > e[1]


def test_balances_close_mass_weighted_only(binary):
    state = random_state(np.random.default_rng(3), 2)
    m = binary.masses
    rates = exchange_rates(binary, state, 0.3)
    np.testing.assert_allclose(m @ rates.momentum, 0.0, atol=1e-14)
    assert m @ rates.energy == pytest.approx(0.0, abs=1e-13)
    assert abs(rates.momentum.sum(axis=0)).max() > 1e-3


def test_momentum_invariant_under_common_shift(ternary):
    state = random_state(np.random.default_rng(4), 3)
    np.testing.assert_allclose(momentum_exchange_closed(ternary, state.shifted([0.3, -1.0, 2.0])),
                               momentum_exchange_closed(ternary, state), atol=1e-13)


def test_i_terms_sum_to_energy_exchange(ternary):
    state = random_state(np.random.default_rng(5), 3)
    for pair in [(0, 1), (2, 0), (1, 2)]:
        terms = i_term_decomposition(ternary, state, 0.2, pair)
        assert terms[3] == 0.0
        assert sum(terms) == pytest.approx(energy_exchange_pair(ternary, state, 0.2, *pair), rel=1e-12)


def test_rates_scale_with_kernel_norm():
    base = Mixture.uniform([1.0, 3.0], AngularKernel.constant(0.5))
    double = Mixture.uniform([1.0, 3.0], AngularKernel.constant(1.0))
    state = random_state(np.random.default_rng(6), 2)
    np.testing.assert_allclose(momentum_exchange_closed(double, state), 2 * momentum_exchange_closed(base, state))


def test_maxwellian_moments_match_quadrature(binary):
    state = random_state(np.random.default_rng(8), 2)
    eps = 0.4
    m = binary.masses
    nodes, w = _maxwellian_nodes(eps * state.u[1], binary.k * state.T[1] / m[1], 6)
    c = state.c[1]
    zeroth, first, second = maxwellian_moments(binary, state, 1, eps)
    assert zeroth == pytest.approx(c * w.sum())
    np.testing.assert_allclose(first, c * w @ nodes, rtol=1e-12)
    assert second == pytest.approx(c * w @ np.sum(nodes**2, axis=1), rel=1e-12)


def test_one_dimensional_velocity_is_padded():
    s = MaxwellianState([1.0, 2.0], [0.5, -0.5], [1.0, 1.0])
    assert s.u.shape == (2, 3)
    assert s.u[0, 1] == 0.0


@pytest.mark.parametrize("kwargs", [
    dict(c=[1.0, -1.0], u=np.zeros((2, 3)), T=[1.0, 1.0]),
    dict(c=[1.0, 1.0], u=np.zeros((2, 3)), T=[1.0, 0.0]),
    dict(c=[1.0, 1.0], u=np.zeros((3, 3)), T=[1.0, 1.0]),
])
def test_state_validation(kwargs):
    with pytest.raises(ValidationError):
        MaxwellianState(**kwargs)


def test_argument_validation(binary, ternary):
    state = random_state(np.random.default_rng(0), 2)
    with pytest.raises(ValidationError):
        oracle_moments(binary, state, (0, 0), LOW)
    with pytest.raises(ValidationError):
        energy_exchange_closed(binary, state, 0.0)
    with pytest.raises(ValidationError):
        momentum_exchange_closed(ternary, state)
    with pytest.raises(ValidationError):
        OracleResolution(3, 8, 8)
    with pytest.raises(ValidationError):
        oracle_moments(binary, state, (0, 1), LOW, method="spectral")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eps=st.floats(1e-3, 1.0))
def test_total_energy_and_momentum_conserved_by_collisions(seed, eps):
    rng = np.random.default_rng(seed)
    masses = rng.uniform(0.5, 5.0, 3)
    mix = Mixture.uniform(masses, AngularKernel.polynomial([rng.uniform(0.1, 1), 0.0, rng.uniform(0, 1)]))
    state = random_state(rng, 3)
    rates = exchange_rates(mix, state, eps)
    scale = np.abs(masses[:, None] * rates.momentum).max() + 1e-300
    assert np.abs(masses @ rates.momentum).max() <= 1e-12 * scale
    escale = np.abs(masses * rates.energy).max() + 1e-300
    assert abs(masses @ rates.energy) <= 1e-12 * escale


@pytest.mark.parametrize("c, u, T, m, eps, expected", [
    (2.0, [0, 0, 0], 1.0, 1.0, 0.3, (2.0, [0, 0, 0], 6.0)),
    (1.0, [1, 0, 0], 1.0, 3.0, 0.0, (1.0, [0, 0, 0], 1.0)),
    (1.0, [1, 0, 0], 2.0, 2.0, 0.5, (1.0, [0.5, 0, 0], 3.25)),
])
def test_maxwellian_moments_by_hand(c, u, T, m, eps, expected):
    mix = Mixture.uniform([m, 1.0], AngularKernel.constant(0.5))
    state = MaxwellianState([c, 1.0], [u, [0, 0, 0]], [T, 1.0])
    zeroth, first, second = maxwellian_moments(mix, state, 0, eps)
    assert zeroth == expected[0]
    np.testing.assert_allclose(first, expected[1])
    assert second == pytest.approx(expected[2])


def test_momentum_exchange_by_hand():
    # equal masses, sphere factor 1
    mix = Mixture.uniform([1.0, 1.0], AngularKernel.constant(1 / (4 * np.pi)))
    state = MaxwellianState([1.0, 1.0], [[0, 0, 0], [1, 0, 0]], [1.0, 1.0])
    np.testing.assert_allclose(momentum_exchange_closed(mix, state), [[0.5, 0, 0], [-0.5, 0, 0]], atol=1e-15)


def test_momentum_exchange_is_bilinear_in_concentrations(ternary):
    state = random_state(np.random.default_rng(11), 3)
    scaled = MaxwellianState(3.0 * state.c, state.u, state.T)
    np.testing.assert_allclose(momentum_exchange_closed(ternary, scaled),
                               9.0 * momentum_exchange_closed(ternary, state), rtol=1e-13)
