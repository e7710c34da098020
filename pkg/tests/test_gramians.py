import mpmath as mp
import pytest
from hypothesis import given, strategies as st

from nullcost.gramians import (INFINITE, QuadratureError, dump_matrix, exp_kernel,
                               flux_product_kernel, gramian_set, observation_gramian,
                               quad_oracle_entry, sine_product_kernel, terminal_mass,
                               weight_kernel, weighted_entry, weighted_gramian, working_precision)
from nullcost.pencil import is_positive_definite
from nullcost.spectral import ProblemSpec, eigenvalue

HEAT = ProblemSpec.heat(1)
TD = ProblemSpec.transport_diffusion(1.5, -1, 0.3)


def test_working_precision_policy():
    assert working_precision(10) == 256
    assert working_precision(60) == 4 * 60 + 128
    assert working_precision(5, 1024) == 1024


@pytest.mark.parametrize("spec", [HEAT, TD])
def test_observation_gramian_against_quadrature(spec):
    with mp.workprec(200):
        T = mp.mpf("0.4")
        G = observation_gramian(spec, T, 5)
        for j, k in [(1, 1), (1, 5), (3, 4), (5, 5)]:
            q = quad_oracle_entry(flux_product_kernel(spec, j, k), (0, T))
            assert abs(G[j - 1, k - 1] - q) <= mp.mpf(10) ** -45 * abs(q)


def test_terminal_mass_against_quadrature():
    with mp.workprec(200):
        T = mp.mpf("0.05")
        A = terminal_mass(TD, T, 4)
        gamma = 2 * TD.skew
        for j, k in [(1, 1), (2, 3), (4, 4)]:
            q = quad_oracle_entry(sine_product_kernel(TD.L, gamma, j, k), (0, TD.L))
            q *= mp.exp(-(eigenvalue(TD, j) + eigenvalue(TD, k)) * T)
            assert abs(A[j - 1, k - 1] - q) <= mp.mpf(10) ** -45 * abs(A[j - 1, j - 1])
        H = terminal_mass(HEAT, T, 3)
        assert H[0, 1] == 0
        assert abs(H[1, 1] - mp.mpf(1) / 2 * mp.exp(-2 * eigenvalue(HEAT, 2) * T)) < mp.mpf(10) ** -55


@pytest.mark.parametrize("L,k", [(1, 1), (1, 4), (2.5, 2), (0.5, 7)])
def test_weighted_entries_against_quadrature(L, k):
    with mp.workprec(200):
        lam = eigenvalue(ProblemSpec.heat(L), k)
        kern = weight_kernel(L, 2 * lam)
        inf = weighted_entry(L, lam, INFINITE)
        q_inf = mp.mpf(L) / 2 * quad_oracle_entry(kern, (0, mp.inf))
        assert abs(inf - q_inf) <= mp.mpf(10) ** -40 * inf
        fin = weighted_entry(L, lam, "0.3")
        q_fin = mp.mpf(L) / 2 * quad_oracle_entry(kern, (0, mp.mpf("0.3")))
        assert abs(fin - q_fin) <= mp.mpf(10) ** -40 * fin


@given(st.floats(0.3, 3), st.integers(1, 6), st.floats(0.01, 2), st.floats(1.1, 4))
def test_weighted_finite_increases_to_infinite(L, k, T, factor):
    lam = eigenvalue(ProblemSpec.heat(L), k)
    a = weighted_entry(L, lam, T)
    b = weighted_entry(L, lam, T * factor)
    c = weighted_entry(L, lam, INFINITE)
    assert 0 <= a <= b * (1 + 1e-12)
    assert b <= c * (1 + 1e-12)


def test_weighted_gramian_heat_only():
    W = weighted_gramian(HEAT, 3)
    assert W[0, 1] == 0 and W[2, 2] > 0
    with pytest.raises(ValueError):
        weighted_gramian(TD, 3)


@given(st.floats(0.01, 0.2), st.floats(1.01, 3))
def test_gramian_grows_with_horizon(T, factor):
    # G(T2) - G(T1) is the Gramian of (T1, T2): positive definite
    with mp.workprec(300):
        D = observation_gramian(TD, T * factor, 4) - observation_gramian(TD, T, 4)
        assert is_positive_definite(D, 300)


def test_gramians_symmetric_positive_definite():
    with mp.workprec(256):
        for spec in (HEAT, TD):
            G = observation_gramian(spec, 0.2, 10)
            assert all(G[i, j] == G[j, i] for i in range(10) for j in range(10))
            assert is_positive_definite(G, 256)
            assert is_positive_definite(terminal_mass(spec, 0.2, 10), 256)


def test_invalid_horizons():
    with pytest.raises(ValueError):
        observation_gramian(HEAT, 0, 3)
    with pytest.raises(ValueError):
        terminal_mass(HEAT, -1, 3)
    with pytest.raises(ValueError):
        weighted_entry(1, 1, 0)


def test_gramian_set_bundle():
    gs = gramian_set(HEAT, 0.5, 4, precision_bits=300)
    assert gs.G.rows == 4 and gs.W_inf is not None and gs.W_fin is not None
    assert gs.precision_bits == 300
    assert gs.W_fin[0, 0] < gs.W_inf[0, 0]
    td = gramian_set(TD, 0.5, 4)
    assert td.W_inf is None and td.W_fin is None


def test_quadrature_oracle_reports_failure():
    with mp.workprec(100):
        assert abs(quad_oracle_entry(exp_kernel(2), (0, 1)) - (1 - mp.exp(-2)) / 2) < 1e-25
        with pytest.raises(QuadratureError):
            quad_oracle_entry(exp_kernel(2), (0, 1), tol=mp.mpf(0))


def test_dump_matrix(tmp_path):
    G = observation_gramian(HEAT, 1, 2)
    p = tmp_path / "g.txt"
    dump_matrix(G, p, digits=12)
    lines = p.read_text().splitlines()
    assert len(lines) == 4
    j, k, v = lines[1].split()
    assert (j, k) == ("1", "2") and mp.mpf(v) == pytest.approx(float(G[0, 1]), rel=1e-11)


def test_hand_values():
    with mp.workprec(256):
        # L = pi: k pi / L = 1 and lambda_1 = 1
        G = observation_gramian(ProblemSpec.heat(mp.pi), 1, 2)
        assert abs(G[0, 0] - (1 - mp.exp(-2)) / 2) < mp.mpf(10) ** -70
        assert abs(G[0, 0] - mp.mpf("0.43233235838169365")) < 1e-16
        H = observation_gramian(HEAT, mp.mpf("0.5"), 2)
        s = 5 * mp.pi**2
        want = 2 * mp.pi**2 * (1 - mp.exp(-s / 2)) / s
        assert abs(H[0, 1] - want) < mp.mpf(10) ** -70
        q = quad_oracle_entry(flux_product_kernel(HEAT, 1, 2), (0, mp.mpf("0.5")))
        assert abs(H[0, 1] - q) <= mp.mpf(10) ** -25 * q


def test_gramian_linear_for_short_horizon():
    with mp.workprec(256):
        for T in ("1e-6", "1e-9"):
            T = mp.mpf(T)
            G = observation_gramian(HEAT, T, 1)
            assert abs(G[0, 0] / T - mp.pi**2) <= 2 * mp.pi**4 * T * mp.pi**2


def test_mass_at_time_zero():
    with mp.workprec(256):
        A = terminal_mass(ProblemSpec.heat(mp.pi), 0, 3)
        for k in range(3):
            assert A[k, k] == mp.pi / 2
        assert A[0, 2] == 0


def test_td_mass_offdiagonal_against_quadrature():
    spec = ProblemSpec.transport_diffusion(1, 1, 0.5)
    with mp.workprec(256):
        A = terminal_mass(spec, 0, 2)
        q = quad_oracle_entry(sine_product_kernel(1, 2 * spec.skew, 1, 2), (0, 1))
        assert abs(A[0, 1] - q) <= mp.mpf(10) ** -20 * abs(q)


def test_td_mass_small_speed_limit():
    with mp.workprec(256):
        A = terminal_mass(ProblemSpec.transport_diffusion(1, 1e-12, 0.5), 0, 3)
        assert abs(A[0, 0] - mp.mpf(1) / 2) < 1e-10
        assert abs(A[0, 1]) < 1e-10


def test_weighted_infinite_at_pi_and_monotone():
    L = mp.pi
    with mp.workprec(256):
        vals = [weighted_entry(L, mp.mpf(k * k)) for k in range(1, 8)]
        q = L / 2 * quad_oracle_entry(weight_kernel(L, 2), (0, mp.inf))
        assert abs(vals[0] - q) <= mp.mpf(10) ** -20 * q
        assert all(b < a for a, b in zip(vals, vals[1:]))


@given(st.floats(0.3, 2), st.floats(0.5, 3), st.integers(1, 4))
def test_weighted_scaling_law(L, s, k):
    # (L, T) -> (sL, s^2 T) maps the entry by s^3 at fixed k
    with mp.workprec(200):
        lam1 = eigenvalue(ProblemSpec.heat(L), k)
        lam2 = eigenvalue(ProblemSpec.heat(mp.mpf(s) * L), k)
        a = weighted_entry(L, lam1, "0.4")
        b = weighted_entry(mp.mpf(s) * L, lam2, mp.mpf(s) ** 2 * mp.mpf("0.4"))
        assert abs(b - mp.mpf(s) ** 3 * a) <= mp.mpf(10) ** -40 * b
