import mpmath as mp
import pytest
from hypothesis import given, strategies as st

from nullcost.fdsolve import Grid, residual_of
from nullcost.spectral import AdjointSolution, ProblemSpec, adjoint_mode
from nullcost.transform import (IdentityInapplicable, TransformParams, boundary_identity_check,
                                chain_exponent, map_psi_to_phi, theorem_chain_bound)


def _pointwise(psi, params):
    # route through the generic wrapper, never the modal fast path
    return map_psi_to_phi(lambda t, x: psi(t, x), params)


@pytest.mark.parametrize("M", [-2, -0.5, 1])
@pytest.mark.parametrize("eps", [0.05, 0.5])
def test_mode_maps_to_heat_mode(M, eps):
    td = ProblemSpec.transport_diffusion(1, M, eps)
    heat = ProblemSpec.heat(1)
    params = TransformParams.of(td)
    with mp.workprec(256):
        for k in (1, 4, 20):
            phi = _pointwise(lambda t, x: adjoint_mode(td, k, t, x), params)
            for t, x in [(0.001, 0.2), (0.01, 0.77)]:
                ref = adjoint_mode(heat, k, t, x)
                assert abs(phi(t, x) - ref) <= mp.mpf(2) ** -240 * max(1, abs(ref) * 1e3)


def test_fast_path_matches_wrapper():
    td = ProblemSpec.transport_diffusion(1.3, 0.7, 0.2)
    params = TransformParams.of(td)
    psi = AdjointSolution(td, [1, 0.5, -2])
    fast = map_psi_to_phi(psi, params)
    slow = _pointwise(psi, params)
    assert isinstance(fast, AdjointSolution) and fast.spec.is_heat
    with mp.workprec(200):
        for t, x in [(0.01, 0.3), (0.05, 1.0)]:
            assert abs(fast(t, x) - slow(t, x)) < mp.mpf(10) ** -50
    with pytest.raises(ValueError):
        map_psi_to_phi(psi, TransformParams(0.7, 0.3, 1.3))


def test_zero_maps_to_zero():
    params = TransformParams(1, 0.1, 1)
    phi = map_psi_to_phi(lambda t, x: mp.mpf(0), params)
    assert phi(0.3, 0.4) == 0
    assert boundary_identity_check(lambda t, x: mp.mpf(0), params, [0.1, 0.2]) == 0


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.001, 0.2), st.floats(0, 1))
def test_linearity(alpha, beta, t, x):
    td = ProblemSpec.transport_diffusion(1, -1, 0.25)
    p = TransformParams.of(td)
    f = lambda s, y: adjoint_mode(td, 1, s, y)
    g = lambda s, y: adjoint_mode(td, 3, s, y) + mp.sin(y)
    lhs = _pointwise(lambda s, y: alpha * f(s, y) + beta * g(s, y), p)(t, x)
    rhs = alpha * _pointwise(f, p)(t, x) + beta * _pointwise(g, p)(t, x)
    assert abs(lhs - rhs) <= 1e-12 * max(1, abs(lhs))


def test_transformed_combination_solves_heat():
    td = ProblemSpec.transport_diffusion(1, 0.8, 0.3)
    psi = AdjointSolution(td, [0.7, -1.1, 0.4])
    phi = _pointwise(psi, TransformParams.of(td))
    with mp.workprec(200):
        h = mp.mpf(10) ** -10
        r = residual_of(phi, ProblemSpec.heat(1), Grid(9, 9, 1, 0.05), order=6, steps=(h, h), stride=2)
    assert r < 1e-8


def test_boundary_identity_second_order():
    td = ProblemSpec.transport_diffusion(1, 1, 0.1)
    params = TransformParams.of(td)
    psi = lambda t, x: adjoint_mode(td, 2, t, x)
    with mp.workprec(200):
        devs = [boundary_identity_check(psi, params, [0.01, 0.03], h=h) for h in ("1e-3", "5e-4", "2.5e-4")]
    assert devs[0] > 0
    for a, b in zip(devs, devs[1:]):
        assert 3.5 < a / b < 4.5


def test_boundary_identity_inapplicable():
    params = TransformParams(1, 0.1, 1)
    bad = lambda t, x: mp.cos(x) * mp.exp(-t)
    with pytest.raises(IdentityInapplicable):
        boundary_identity_check(bad, params, [0.1])


def test_params_validation():
    for args in [(0, 0.1, 1), (1, 0, 1), (1, 1, 1), (1, 0.5, 0)]:
        with pytest.raises(ValueError):
            TransformParams(*args)


def test_exponent_limits():
    with mp.workprec(200):
        assert abs(chain_exponent(1, 1, 1, 1, 0)) < mp.mpf(10) ** -50
        T = 1 + mp.sqrt(2)
        assert abs(chain_exponent(1, -1, T, 1, 0)) < mp.mpf(10) ** -50
        assert abs(chain_exponent(2, -3, T * 2 / 3, 1, 0)) < mp.mpf(10) ** -50


def test_theorem_chain_requires_exact_horizon():
    params = TransformParams(1, 0.1, 1)
    samples = [(0.1 * 0.2 * 5, 2.0)]
    b = theorem_chain_bound(samples, params, 5, 0.8, 0.2)
    want = mp.exp(chain_exponent(1, 1, 5, 0.8, 0.2) / 0.1) / (0.2 * 5) * 2
    assert abs(b - want) <= 1e-12 * want
    with pytest.raises(KeyError, match="interpolat"):
        theorem_chain_bound([(0.11, 2.0), (0.09, 2.0)], params, 5, 0.8, 0.2)
    with pytest.raises(ValueError):
        theorem_chain_bound(samples, params, 5, 1.0, 0.2)
    with pytest.raises(ValueError):
        theorem_chain_bound(samples, params, 5, 0.8, 0)


def test_bound_decays_exponentially_in_eps():
    # exponent < 0 with a synthetic C_int = 1: bound = e^{E/eps} / ((1-a)T)
    T, a, b = 3.0, 0.9, 0.05
    E = chain_exponent(1, 1, T, a, b)
    assert E < 0
    eps_grid = [0.5, 0.2, 0.1, 0.05, 0.02]
    bounds = [theorem_chain_bound([(e * b * T, 1)], TransformParams(1, e, 1), T, a, b)
              for e in eps_grid]
    # decreasing as eps -> 0, i.e. increasing in eps
    assert all(y < x for x, y in zip(bounds, bounds[1:]))
    for e, v in zip(eps_grid, bounds):
        assert abs(e * mp.log(v * (1 - a) * T) - E) < 1e-12
