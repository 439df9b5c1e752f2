import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alphapi.basis import BasisSet, paper_bases
from alphapi.experiments import ExampleAConfig, quadratic_terms, run_example_a
from alphapi.hji import (CriticFunction, GameSpec, bellman_residual, extract_policies,
                         frechet_apply, frechet_apply_closed_loop, g_residual,
                         generalized_bellman_residual, hamiltonian, residual_on_grid, state_grid)
from alphapi.lq import quadratic_weights

CRITIC = paper_bases("example_a")[0]
QUAD = BasisSet(2, quadratic_terms(2))

weights5 = st.lists(st.floats(-2, 2), min_size=5, max_size=5).map(np.array)
points = st.tuples(st.floats(-1, 1), st.floats(-1, 1)).map(np.array)


def oracle_critic(gare):
    return CriticFunction(QUAD, quadratic_weights(gare.P, QUAD.terms))


# policies and Hamiltonian ----------------------------------------------------

def test_zero_critic_gives_zero_policies(exa_spec):
    pol = extract_policies(exa_spec, CriticFunction(CRITIC, np.zeros(5)))
    x = np.array([0.3, -0.7])
    assert np.array_equal(pol.control(x), [0.0])
    assert np.array_equal(pol.disturbance(x), [0.0])


@given(points)
def test_x1_squared_critic_is_invisible_to_the_inputs(exa_spec, x):
    pol = extract_policies(exa_spec, CriticFunction(CRITIC, [1, 0, 0, 0, 0]))
    assert pol.control(x)[0] == 0.0 and pol.disturbance(x)[0] == 0.0


def test_linear_policies_match_riccati_gains(lin_spec, lin_gare):
    pol = extract_policies(lin_spec, oracle_critic(lin_gare))
    for x in np.random.default_rng(1).normal(size=(10, 2)):
        np.testing.assert_allclose(pol.control(x), -lin_gare.K @ x, atol=1e-12)
        np.testing.assert_allclose(pol.disturbance(x), lin_gare.L @ x, atol=1e-12)


def test_hamiltonian_of_nothing_is_state_cost(exa_spec):
    x = np.array([0.4, 0.5])
    V = CriticFunction(CRITIC, np.zeros(5))
    assert hamiltonian(exa_spec, V, x, [0.0], [0.0]) == exa_spec.dyn.state_cost(x)
    assert g_residual(exa_spec, V, x) == exa_spec.dyn.state_cost(x)


@given(weights5, points)
def test_saddle_identity(exa_spec, W, x):
    V = CriticFunction(CRITIC, W)
    pol = extract_policies(exa_spec, V)
    h = hamiltonian(exa_spec, V, x, pol.control(x), pol.disturbance(x))
    g = g_residual(exa_spec, V, x)
    assert h == pytest.approx(g, rel=1e-12, abs=1e-12)


@given(weights5, points, st.floats(-1, 1), st.floats(-1, 1))
def test_saddle_point_is_min_over_u_and_max_over_w(exa_spec, W, x, du, dw):
    V = CriticFunction(CRITIC, W)
    pol = extract_policies(exa_spec, V)
    u, w = pol.control(x), pol.disturbance(x)
    h = hamiltonian(exa_spec, V, x, u, w)
    assert hamiltonian(exa_spec, V, x, u + du, w) >= h - 1e-12
    assert hamiltonian(exa_spec, V, x, u, w + dw) <= h + 1e-12


def test_oracle_solves_the_hji_on_a_grid(lin_spec, lin_gare):
    V = oracle_critic(lin_gare)
    grid = state_grid(-1, 1, 20)
    res = residual_on_grid(lambda x: g_residual(lin_spec, V, x), grid)
    cost = np.array([lin_spec.dyn.state_cost(x) for x in grid])
    assert np.all(np.abs(res) <= 1e-6 * (1 + np.abs(cost)))
    pol = extract_policies(lin_spec, V)
    for x in grid[::37]:
        assert abs(hamiltonian(lin_spec, V, x, pol.control(x), pol.disturbance(x))) <= 1e-9


def test_learned_example_a_critic_reduces_the_hji_residual():
    cfg = ExampleAConfig()
    res = run_example_a(cfg)
    spec = cfg.spec()
    # the collected trajectory stays inside |x| <= 0.53; judge the fit there
    assert np.abs(res.data.states).max() < 0.6
    grid = state_grid(-0.5, 0.5, 21)
    peaks = []
    for W in (np.zeros(5), res.solve.weights.critic):
        V = CriticFunction(CRITIC, W)
        peaks.append(np.abs(residual_on_grid(lambda x: g_residual(spec, V, x), grid)).max())
    assert peaks[1] * 10 <= peaks[0]


# Frechet differential --------------------------------------------------------

@given(weights5, points)
def test_frechet_of_zero_direction(exa_spec, W, x):
    V = CriticFunction(CRITIC, W)
    assert frechet_apply(exa_spec, V, CriticFunction(CRITIC, np.zeros(5)), x) == 0.0


@given(weights5, points)
def test_frechet_at_zero_value_is_transport_along_drift(exa_spec, W, x):
    Z = CriticFunction(CRITIC, W)
    zero = CriticFunction(CRITIC, np.zeros(5))
    expect = Z.gradient(x) @ exa_spec.dyn.drift(x)
    assert frechet_apply(exa_spec, zero, Z, x) == pytest.approx(expect, rel=1e-14, abs=1e-15)


def test_frechet_matches_directional_finite_difference(exa_spec):
    rng = np.random.default_rng(3)
    h = 1e-5
    for _ in range(100):
        V = CriticFunction(CRITIC, rng.uniform(-1, 1, 5))
        Z = CriticFunction(CRITIC, rng.uniform(-1, 1, 5))
        x = rng.uniform(-1, 1, 2)
        fd = (g_residual(exa_spec, V + Z.scaled(h), x)
              - g_residual(exa_spec, V - Z.scaled(h), x)) / (2 * h)
        exact = frechet_apply(exa_spec, V, Z, x)
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


@given(weights5, weights5, weights5, points, st.floats(-2, 2), st.floats(-2, 2))
def test_frechet_is_linear_in_direction(exa_spec, Wv, W1, W2, x, a, b):
    V = CriticFunction(CRITIC, Wv)
    Z1, Z2 = CriticFunction(CRITIC, W1), CriticFunction(CRITIC, W2)
    lhs = frechet_apply(exa_spec, V, Z1.scaled(a) + Z2.scaled(b), x)
    rhs = a * frechet_apply(exa_spec, V, Z1, x) + b * frechet_apply(exa_spec, V, Z2, x)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@given(weights5, weights5, points)
def test_frechet_forms_agree(exa_spec, Wv, Wz, x):
    V, Z = CriticFunction(CRITIC, Wv), CriticFunction(CRITIC, Wz)
    a = frechet_apply(exa_spec, V, Z, x)
    b = frechet_apply_closed_loop(exa_spec, V, Z, x)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


# generalized Bellman residual ------------------------------------------------

@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.6, 1.0])
def test_hji_solution_is_a_fixed_point_for_every_alpha(lin_spec, lin_gare, alpha):
    V = oracle_critic(lin_gare)
    for x in state_grid(-1, 1, 7):
        assert abs(generalized_bellman_residual(lin_spec, V, V, alpha, x)) <= 1e-8


@given(weights5, weights5, points)
def test_alpha_one_is_the_bellman_residual(exa_spec, Wn, Wc, x):
    Vn, Vc = CriticFunction(CRITIC, Wn), CriticFunction(CRITIC, Wc)
    a = generalized_bellman_residual(exa_spec, Vn, Vc, 1.0, x)
    b = bellman_residual(exa_spec, Vn, Vc, x)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@given(weights5, points)
def test_zero_current_critic_reduces_to_drift_term(exa_spec, Wn, x):
    Vn = CriticFunction(CRITIC, Wn)
    zero = CriticFunction(CRITIC, np.zeros(5))
    expect = Vn.gradient(x) @ exa_spec.dyn.drift(x) + 0.3 * exa_spec.dyn.state_cost(x)
    got = generalized_bellman_residual(exa_spec, Vn, zero, 0.3, x)
    assert got == pytest.approx(expect, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5])
def test_alpha_outside_unit_interval(exa_spec, alpha):
    V = CriticFunction(CRITIC, np.zeros(5))
    with pytest.raises(ValueError):
        generalized_bellman_residual(exa_spec, V, V, alpha, np.zeros(2))


# value types -----------------------------------------------------------------

def test_critic_vanishes_at_origin_and_checks_size():
    V = CriticFunction(CRITIC, np.arange(5.0))
    assert V(np.zeros(2)) == 0.0
    with pytest.raises(ValueError):
        CriticFunction(CRITIC, np.zeros(4))
    with pytest.raises(ValueError):
        V + CriticFunction(QUAD, np.zeros(3))


def test_game_spec_validation(exa_spec):
    dyn = exa_spec.dyn
    with pytest.raises(ValueError):
        GameSpec(dyn, 0.0, [1.0])
    with pytest.raises(ValueError):
        GameSpec(dyn, 2.0, [-1.0])
    with pytest.raises(ValueError):
        GameSpec(dyn, 2.0, [1.0, 1.0])
    assert exa_spec.running_cost(np.array([1.0, 1.0]), [2.0], [1.0]) == 2.0 + 4.0 - 4.0
